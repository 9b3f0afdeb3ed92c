#include "waveq/estimator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "waveq/quadrature.hpp"

namespace waveq {

DampedAccumulator::DampedAccumulator(double rho) : rho_(rho) {
  if (rho < 0.0) throw std::runtime_error("damped accumulator: rho must be non-negative");
}

void DampedAccumulator::add(double t, double value) {
  const double damped = value * std::exp(-2.0 * rho_ * t);
  if (have_) {
    if (t <= last_t_)
      throw std::runtime_error("damped accumulator: samples must arrive in increasing time order");
    integral_ += 0.5 * (t - last_t_) * (damped + last_damped_);
  }
  last_t_ = t;
  last_damped_ = damped;
  have_ = true;
}

double DampedAccumulator::last_time() const {
  if (!have_) throw std::runtime_error("damped accumulator: no samples yet");
  return last_t_;
}

ErrorEvaluator::ErrorEvaluator(const LagrangeSpace& space, const MaterialData& mat)
    : space_(&space), mat_(&mat), mesh_(space.mesh) {
  const int p = space.p;
  const QuadratureRule rule = triangle_rule(boundary_rule_degree(p));
  const LagrangeTable tab = tabulate_lagrange(p, rule.points);
  nq_ = rule.size();
  ref_points_ = rule.points;
  const int ne = mesh_->n_elements();
  const int nloc = space.dofs_per_element;
  wq_.resize(ne * nq_);
  xq_.resize(ne * nq_);
  val_.resize(nloc, ne * nq_);
  gx_.resize(nloc, ne * nq_);
  gy_.resize(nloc, ne * nq_);
  for (int k = 0; k < ne; ++k) {
    const ElementGeometry geom = element_geometry(*mesh_, k);
    const Eigen::Matrix2d BinvT = geom.Binv.transpose();
    for (int iq = 0; iq < nq_; ++iq) {
      const int col = k * nq_ + iq;
      wq_[col] = rule.weights[iq] * geom.det;
      xq_[col] = geom.B * rule.points[iq] + geom.b;
      for (int j = 0; j < nloc; ++j) {
        val_(j, col) = tab.value(j, iq);
        const Vec2 g = BinvT * Vec2(tab.dvalue[0](j, iq), tab.dvalue[1](j, iq));
        gx_(j, col) = g.x();
        gy_(j, col) = g.y();
      }
    }
  }

  const EdgeQuadratureRule erule = edge_rule(boundary_rule_degree(p));
  edge_s_ = erule.points;
  for (int f : mesh_->boundary_faces) {
    const Face& face = mesh_->faces[f];
    if (face.kind != static_cast<int>(BoundaryKind::Absorbing)) continue;
    FaceData fd;
    fd.face = f;
    fd.element = face.elem[0];
    const Element& el = mesh_->elements[fd.element];
    for (int e = 0; e < 3; ++e)
      if (el.face[e] == f) fd.local_edge = e;
    const Vec2 p0 = mesh_->vertices[face.v0];
    const Vec2 p1 = mesh_->vertices[face.v1];
    fd.len = (p1 - p0).norm();
    fd.gamma = mat.gamma[f];
    fd.s = erule.points;
    fd.w = erule.weights;
    fd.x.resize(erule.size());
    std::vector<Vec2> ref(erule.size());
    for (int iq = 0; iq < erule.size(); ++iq) {
      fd.x[iq] = p0 + fd.s[iq] * (p1 - p0);
      ref[iq] = edge_point_ref(el, face, fd.local_edge, fd.s[iq]);
    }
    fd.lag = tabulate_lagrange(p, ref).value;
    faces_.push_back(std::move(fd));
  }
}

ErrorParts ErrorEvaluator::exact_error(const Eigen::VectorXd& u, const Eigen::VectorXd& du,
                                       const std::function<double(const Vec2&)>& ut,
                                       const std::function<Vec2(const Vec2&)>& grad_u) const {
  ErrorParts parts;
  const int nloc = space_->dofs_per_element;
  for (int k = 0; k < mesh_->n_elements(); ++k) {
    Eigen::VectorXd uK(nloc), dK(nloc);
    for (int j = 0; j < nloc; ++j) {
      uK[j] = u[space_->element_dofs[k][j]];
      dK[j] = du[space_->element_dofs[k][j]];
    }
    for (int iq = 0; iq < nq_; ++iq) {
      const int col = k * nq_ + iq;
      const double w = wq_[col];
      const double v = val_.col(col).dot(dK) - ut(xq_[col]);
      parts.vel2 += w * mat_->mu[k] * v * v;
      const Vec2 ge(gx_.col(col).dot(uK) - grad_u(xq_[col]).x(),
                    gy_.col(col).dot(uK) - grad_u(xq_[col]).y());
      parts.grad2 += w * ge.dot(mat_->A[k] * ge);
    }
  }
  for (const FaceData& fd : faces_) {
    Eigen::VectorXd dK(nloc);
    for (int j = 0; j < nloc; ++j) dK[j] = du[space_->element_dofs[fd.element][j]];
    for (size_t iq = 0; iq < fd.s.size(); ++iq) {
      const double v = fd.lag.col(iq).dot(dK) - ut(fd.x[iq]);
      parts.bnd2 += fd.w[iq] * fd.len * fd.gamma * v * v;
    }
  }
  return parts;
}

ErrorParts ErrorEvaluator::fe_error(const Eigen::VectorXd& u, const Eigen::VectorXd& du,
                                    const LagrangeSpace& ref_space, const Eigen::VectorXd& ref_u,
                                    const Eigen::VectorXd& ref_du) const {
  if (ref_space.mesh != mesh_)
    throw std::runtime_error("error evaluator: reference space lives on a different mesh");
  const int nloc = space_->dofs_per_element;
  const int nref = ref_space.dofs_per_element;
  const LagrangeTable rtab = tabulate_lagrange(ref_space.p, ref_points_);

  ErrorParts parts;
  for (int k = 0; k < mesh_->n_elements(); ++k) {
    const ElementGeometry geom = element_geometry(*mesh_, k);
    const Eigen::Matrix2d BinvT = geom.Binv.transpose();
    Eigen::VectorXd uK(nloc), dK(nloc), urK(nref), drK(nref);
    for (int j = 0; j < nloc; ++j) {
      uK[j] = u[space_->element_dofs[k][j]];
      dK[j] = du[space_->element_dofs[k][j]];
    }
    for (int j = 0; j < nref; ++j) {
      urK[j] = ref_u[ref_space.element_dofs[k][j]];
      drK[j] = ref_du[ref_space.element_dofs[k][j]];
    }
    for (int iq = 0; iq < nq_; ++iq) {
      const int col = k * nq_ + iq;
      const double w = wq_[col];
      const double v = val_.col(col).dot(dK) - rtab.value.col(iq).dot(drK);
      parts.vel2 += w * mat_->mu[k] * v * v;
      Vec2 gref = Vec2::Zero();
      for (int j = 0; j < nref; ++j)
        gref += urK[j] * (BinvT * Vec2(rtab.dvalue[0](j, iq), rtab.dvalue[1](j, iq)));
      const Vec2 ge(gx_.col(col).dot(uK) - gref.x(), gy_.col(col).dot(uK) - gref.y());
      parts.grad2 += w * ge.dot(mat_->A[k] * ge);
    }
  }
  std::vector<Vec2> ref(edge_s_.size());
  for (const FaceData& fd : faces_) {
    const Element& el = mesh_->elements[fd.element];
    for (size_t iq = 0; iq < edge_s_.size(); ++iq)
      ref[iq] = edge_point_ref(el, mesh_->faces[fd.face], fd.local_edge, fd.s[iq]);
    const Eigen::MatrixXd rlag = tabulate_lagrange(ref_space.p, ref).value;
    Eigen::VectorXd dK(nloc), drK(nref);
    for (int j = 0; j < nloc; ++j) dK[j] = du[space_->element_dofs[fd.element][j]];
    for (int j = 0; j < nref; ++j) drK[j] = ref_du[ref_space.element_dofs[fd.element][j]];
    for (size_t iq = 0; iq < fd.s.size(); ++iq) {
      const double v = fd.lag.col(iq).dot(dK) - rlag.col(iq).dot(drK);
      parts.bnd2 += fd.w[iq] * fd.len * fd.gamma * v * v;
    }
  }
  return parts;
}

double ErrorEvaluator::volume_norm2(const std::function<double(const Vec2&)>& f) const {
  double acc = 0.0;
  for (int k = 0; k < mesh_->n_elements(); ++k)
    for (int iq = 0; iq < nq_; ++iq) {
      const int col = k * nq_ + iq;
      const double v = f(xq_[col]);
      acc += wq_[col] * mat_->mu[k] * v * v;
    }
  return acc;
}

double ErrorEvaluator::boundary_norm2(const std::function<double(const Vec2&)>& g) const {
  double acc = 0.0;
  for (const FaceData& fd : faces_)
    for (size_t iq = 0; iq < fd.s.size(); ++iq) {
      const double v = g(fd.x[iq]);
      acc += fd.w[iq] * fd.len * fd.gamma * v * v;
    }
  return acc;
}

EstimatorTrace::EstimatorTrace(std::vector<double> rho_values) : rho_(std::move(rho_values)) {
  if (rho_.empty()) throw std::runtime_error("estimator trace: need at least one rho");
  for (double r : rho_) {
    if (r <= 0.0) throw std::runtime_error("estimator trace: rho must be positive");
    lambda_acc_.emplace_back(r);
    error_acc_.emplace_back(r);
  }
}

void EstimatorTrace::record(double t, double eta, const std::optional<ErrorParts>& error) {
  Row row;
  row.t = t;
  row.eta = eta;
  row.error = error;
  row.lambda2.resize(rho_.size());
  row.cumu2.resize(rho_.size());
  for (size_t i = 0; i < rho_.size(); ++i) {
    lambda_acc_[i].add(t, eta * eta);
    if (error) error_acc_[i].add(t, error->combined(rho_[i]));
    row.lambda2[i] = lambda_acc_[i].integral();
    row.cumu2[i] = error_acc_[i].integral();
  }
  rows_.push_back(std::move(row));
}

double EstimatorTrace::lambda(int rho_idx) const {
  return std::sqrt(lambda_acc_.at(rho_idx).integral());
}

double EstimatorTrace::error_norm(int rho_idx) const {
  return std::sqrt(error_acc_.at(rho_idx).integral());
}

double EstimatorTrace::effectivity(int rho_idx) const {
  return waveq::effectivity(lambda(rho_idx), error_norm(rho_idx));
}

double EstimatorTrace::tail_increase(int rho_idx, double tail_fraction) const {
  if (rows_.size() < 2) throw std::runtime_error("estimator trace: too few samples");
  const double lam_end = std::sqrt(rows_.back().lambda2.at(rho_idx));
  if (lam_end == 0.0) return 0.0;
  const size_t cut = static_cast<size_t>(std::floor((1.0 - tail_fraction) * (rows_.size() - 1)));
  const double lam_cut = std::sqrt(rows_[cut].lambda2.at(rho_idx));
  return (lam_end - lam_cut) / lam_end;
}

double effectivity(double lambda, double error_norm) {
  if (error_norm == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return lambda / error_norm;
}

ApproximationBounds approximation_factor_bound(double rho, double omega,
                                               const std::optional<ConvexCaseInputs>& convex) {
  if (rho <= 0.0 || omega <= 0.0)
    throw std::runtime_error("approximation factor: rho and omega must be positive");
  ApproximationBounds out;
  out.guaranteed = std::sqrt(1.0 + omega / rho);
  out.guaranteed_prefactor = 1.0 + 4.0 * out.guaranteed * out.guaranteed;
  if (convex) {
    if (convex->C_i <= 0.0 || convex->h_max <= 0.0 || convex->theta_min <= 0.0)
      throw std::runtime_error("approximation factor: convex-case inputs must be positive");
    const double scale = convex->h_max / convex->theta_min;
    const double g = 2.0 * convex->C_i * (rho * scale + (omega / rho) * omega * scale);
    out.convex = g;
    out.convex_prefactor = 1.0 + 4.0 * g * g;
  }
  return out;
}

double oscillation(double rho, int r, const std::vector<double>& t,
                   const std::vector<double>& f_norm2, const std::vector<double>& g_norm2) {
  if (rho <= 0.0) throw std::runtime_error("oscillation: rho must be positive");
  if (r < 0) throw std::runtime_error("oscillation: order must be non-negative");
  if (t.size() != f_norm2.size() || t.size() != g_norm2.size())
    throw std::runtime_error("oscillation: sample arrays must have matching sizes");
  DampedAccumulator If(rho), Ig(rho);
  for (size_t i = 0; i < t.size(); ++i) {
    If.add(t[i], f_norm2[i]);
    Ig.add(t[i], g_norm2[i]);
  }
  const double osc2 =
      4.0 / std::pow(rho, 2 * r) * (If.integral() / (rho * rho) + Ig.integral());
  return std::sqrt(osc2);
}

ContrastReport contrast_and_patch_scales(const Mesh& mesh, const MaterialData& mat) {
  const std::vector<Patch> patches = build_patches(mesh);
  ContrastReport out;
  out.kappa_a.resize(patches.size());
  out.h_a.resize(patches.size());
  out.theta_a.resize(patches.size());
  for (size_t a = 0; a < patches.size(); ++a) {
    const Patch& patch = patches[a];
    double sup_amax = 0.0, inf_amin = std::numeric_limits<double>::infinity();
    double sup_mu = 0.0;
    std::vector<int> verts;
    for (int K : patch.elements) {
      sup_amax = std::max(sup_amax, mat.a_max[K]);
      inf_amin = std::min(inf_amin, mat.a_min[K]);
      sup_mu = std::max(sup_mu, mat.mu[K]);
      for (int v = 0; v < 3; ++v) verts.push_back(mesh.elements[K].v[v]);
    }
    out.kappa_a[a] = sup_amax / inf_amin;
    double diam = 0.0;
    for (size_t i = 0; i < verts.size(); ++i)
      for (size_t j = i + 1; j < verts.size(); ++j)
        diam = std::max(diam, (mesh.vertices[verts[i]] - mesh.vertices[verts[j]]).norm());
    out.h_a[a] = diam;
    double theta = std::sqrt(inf_amin / sup_mu);
    if (!patch.absorbing_faces.empty()) {
      double sup_gamma = 0.0;
      for (int f : patch.absorbing_faces) sup_gamma = std::max(sup_gamma, mat.gamma[f]);
      theta = std::min(theta, inf_amin / sup_gamma);
    }
    out.theta_a[a] = theta;
    out.kappa_A = std::max(out.kappa_A, out.kappa_a[a]);
    out.h_star_over_theta_star = std::max(out.h_star_over_theta_star, diam / theta);
  }
  return out;
}

}  // namespace waveq
