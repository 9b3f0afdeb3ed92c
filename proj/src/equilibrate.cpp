#include "waveq/equilibrate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <Eigen/Cholesky>

#include "waveq/quadrature.hpp"

namespace waveq {

namespace {

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

int local_vertex_of(const Element& el, int vertex) {
  for (int v = 0; v < 3; ++v)
    if (el.v[v] == vertex) return v;
  throw std::runtime_error("equilibrate: vertex not in element");
}

int local_edge_of(const Element& el, int face) {
  for (int e = 0; e < 3; ++e)
    if (el.face[e] == face) return e;
  throw std::runtime_error("equilibrate: face not in element");
}

// Reference gradients of the three barycentric hat functions.
constexpr double kHatGrad[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};

}  // namespace

Equilibrator::Equilibrator(const LagrangeSpace& space, const MaterialData& mat)
    : space_(&space), mat_(&mat), mesh_(space.mesh) {
  p_ = space.p;
  q_ = p_ + 1;
  nq_ = (p_ + 2) * (p_ + 3) / 2;
  np_ = (p_ + 1) * (p_ + 2) / 2;
  nrt_ = rt_dim(q_);
  nloc_ = space.dofs_per_element;
  n_flux_dofs_ = rt_n_global_dofs(*mesh_, q_);

  patches_ = build_patches(*mesh_);

  abs_slot_.assign(mesh_->faces.size(), -1);
  for (int f : mesh_->boundary_faces) {
    if (mesh_->faces[f].kind == static_cast<int>(BoundaryKind::Absorbing)) {
      abs_slot_[f] = static_cast<int>(abs_faces_.size());
      abs_faces_.push_back(f);
    }
  }

  const QuadratureRule ruleA = triangle_rule(volume_rule_degree(p_));
  const QuadratureRule ruleB = triangle_rule(boundary_rule_degree(p_));
  const LagrangeTable tabA = tabulate_lagrange(p_, ruleA.points);
  const LagrangeTable tabB = tabulate_lagrange(p_, ruleB.points);

  cache_.resize(mesh_->n_elements());
#pragma omp parallel for schedule(static)
  for (int k = 0; k < mesh_->n_elements(); ++k)
    build_element_cache(k, tabA, tabB, ruleA, ruleB);

  // Absorbing-face traces: quadrature, Legendre moments, neighbour values.
  const EdgeQuadratureRule ruleF = edge_rule(boundary_rule_degree(p_));
  fcache_.resize(abs_faces_.size());
  for (size_t s = 0; s < abs_faces_.size(); ++s) {
    FaceCache& fc = fcache_[s];
    fc.face = abs_faces_[s];
    const Face& face = mesh_->faces[fc.face];
    fc.element = face.elem[0];
    const Element& el = mesh_->elements[fc.element];
    fc.local_edge = local_edge_of(el, fc.face);
    const Vec2 p0 = mesh_->vertices[face.v0];
    const Vec2 p1 = mesh_->vertices[face.v1];
    fc.len = (p1 - p0).norm();
    fc.gamma = mat.gamma[fc.face];
    const Vec2 t = (p1 - p0) / fc.len;
    const Vec2 n_dof(t.y(), -t.x());
    fc.orient = n_dof.dot(cache_[fc.element].geom.normal[fc.local_edge]) > 0.0 ? 1.0 : -1.0;

    fc.s = ruleF.points;
    fc.w = ruleF.weights;
    fc.x.resize(ruleF.size());
    std::vector<Vec2> ref(ruleF.size());
    for (int iq = 0; iq < ruleF.size(); ++iq) {
      fc.x[iq] = p0 + fc.s[iq] * (p1 - p0);
      ref[iq] = edge_point_ref(el, face, fc.local_edge, fc.s[iq]);
    }
    fc.leg.resize(q_ + 1, ruleF.size());
    for (int l = 0; l <= q_; ++l)
      for (int iq = 0; iq < ruleF.size(); ++iq) fc.leg(l, iq) = legendre01(l, fc.s[iq]);
    fc.lag = tabulate_lagrange(p_, ref).value;
  }

  systems_.resize(mesh_->n_vertices());
  for (int v = 0; v < mesh_->n_vertices(); ++v) build_patch_system(v);
}

void Equilibrator::build_element_cache(int k, const LagrangeTable& tabA, const LagrangeTable& tabB,
                                       const QuadratureRule& ruleA, const QuadratureRule& ruleB) {
  ElementCache& c = cache_[k];
  c.geom = element_geometry(*mesh_, k);
  c.Ainv = mat_->A[k].inverse();
  c.mu = mat_->mu[k];
  c.rt_dofs = rt_element_dofs(*mesh_, k, q_);

  const Element& el = mesh_->elements[k];
  const Vec2 centroid =
      (mesh_->vertices[el.v[0]] + mesh_->vertices[el.v[1]] + mesh_->vertices[el.v[2]]) / 3.0;
  const double scale = c.geom.h;
  const auto exps = monomial_exponents(p_ + 1);

  const int nA = ruleA.size(), nB = ruleB.size();
  c.wA.resize(nA);
  c.xA.resize(nA);
  for (int iq = 0; iq < nA; ++iq) {
    c.wA[iq] = ruleA.weights[iq] * c.geom.det;
    c.xA[iq] = c.geom.B * ruleA.points[iq] + c.geom.b;
  }
  c.wB.resize(nB);
  std::vector<Vec2> xB(nB);
  for (int iq = 0; iq < nB; ++iq) {
    c.wB[iq] = ruleB.weights[iq] * c.geom.det;
    xB[iq] = c.geom.B * ruleB.points[iq] + c.geom.b;
  }

  // Orthonormal scalar basis of P_{p+1}(K): centered monomials, Gram from
  // rule B (exact), Cholesky, then q = L^{-1} m.  The graded monomial order
  // makes the first np functions an exact basis of P_p(K).
  Eigen::MatrixXd monA(nq_, nA), monB(nq_, nB);
  for (int j = 0; j < nq_; ++j) {
    const auto [a, b] = exps[j];
    for (int iq = 0; iq < nA; ++iq) {
      const Vec2 xc = (c.xA[iq] - centroid) / scale;
      monA(j, iq) = ipow(xc.x(), a) * ipow(xc.y(), b);
    }
    for (int iq = 0; iq < nB; ++iq) {
      const Vec2 xc = (xB[iq] - centroid) / scale;
      monB(j, iq) = ipow(xc.x(), a) * ipow(xc.y(), b);
    }
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nq_, nq_);
  for (int iq = 0; iq < nB; ++iq)
    gram += c.wB[iq] * monB.col(iq) * monB.col(iq).transpose();
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("equilibrate: scalar Gram factorization failed on element " +
                             std::to_string(k));
  c.qA = llt.matrixL().solve(monA);
  c.qB = llt.matrixL().solve(monB);

  // Flux basis tabulation at rule B.
  const RTElementBasis rt(*mesh_, k, q_);
  c.rtBx.resize(nrt_, nB);
  c.rtBy.resize(nrt_, nB);
  Eigen::MatrixXd divB(nrt_, nB);
  for (int iq = 0; iq < nB; ++iq) {
    const RTValues vals = rt.eval_ref(ruleB.points[iq]);
    c.rtBx.col(iq) = vals.value.col(0);
    c.rtBy.col(iq) = vals.value.col(1);
    divB.col(iq) = vals.div;
  }

  // Physical Lagrange gradients at both rules.
  const Eigen::Matrix2d BinvT = c.geom.Binv.transpose();
  Eigen::MatrixXd gradAx(nloc_, nA), gradAy(nloc_, nA);
  for (int j = 0; j < nloc_; ++j)
    for (int iq = 0; iq < nA; ++iq) {
      const Vec2 g = BinvT * Vec2(tabA.dvalue[0](j, iq), tabA.dvalue[1](j, iq));
      gradAx(j, iq) = g.x();
      gradAy(j, iq) = g.y();
    }
  c.gradBx.resize(nloc_, nB);
  c.gradBy.resize(nloc_, nB);
  for (int j = 0; j < nloc_; ++j)
    for (int iq = 0; iq < nB; ++iq) {
      const Vec2 g = BinvT * Vec2(tabB.dvalue[0](j, iq), tabB.dvalue[1](j, iq));
      c.gradBx(j, iq) = g.x();
      c.gradBy(j, iq) = g.y();
    }

  // Rule-B matrices: Gram, divergence moments, and the hat-weighted
  // flux-gradient pairings that enter the patch objectives.
  const LagrangeTable hatsB = tabulate_lagrange(1, ruleB.points);
  c.G.setZero(nrt_, nrt_);
  c.Bdiv.setZero(nq_, nrt_);
  for (int v = 0; v < 3; ++v) c.E[v].setZero(nrt_, nloc_);
  for (int iq = 0; iq < nB; ++iq) {
    const double w = c.wB[iq];
    for (int i = 0; i < nrt_; ++i) {
      const Vec2 phi_i(c.rtBx(i, iq), c.rtBy(i, iq));
      const Vec2 Aiphi = c.Ainv * phi_i;
      for (int j = 0; j <= i; ++j) {
        const double v = w * (Aiphi.x() * c.rtBx(j, iq) + Aiphi.y() * c.rtBy(j, iq));
        c.G(i, j) += v;
        if (j != i) c.G(j, i) += v;
      }
      for (int j = 0; j < nloc_; ++j) {
        const double pg = w * (phi_i.x() * c.gradBx(j, iq) + phi_i.y() * c.gradBy(j, iq));
        for (int v = 0; v < 3; ++v) c.E[v](i, j) += hatsB.value(v, iq) * pg;
      }
    }
    for (int i = 0; i < nq_; ++i)
      for (int j = 0; j < nrt_; ++j) c.Bdiv(i, j) += w * c.qB(i, iq) * divB(j, iq);
  }

  // Rule-A residual moment matrices for the three vertex hats.
  const LagrangeTable hats = tabulate_lagrange(1, ruleA.points);
  for (int v = 0; v < 3; ++v) {
    const Vec2 grad_hat = BinvT * Vec2(kHatGrad[v][0], kHatGrad[v][1]);
    const Vec2 A_grad_hat = mat_->A[k] * grad_hat;
    c.Mq[v].setZero(nq_, nloc_);
    c.Fq[v].setZero(nq_, np_);
    c.Gq[v].setZero(nq_, nloc_);
    for (int iq = 0; iq < nA; ++iq) {
      const double wmu = c.wA[iq] * c.mu * hats.value(v, iq);
      for (int i = 0; i < nq_; ++i) {
        const double qi = c.qA(i, iq);
        for (int j = 0; j < nloc_; ++j) {
          c.Mq[v](i, j) += wmu * qi * tabA.value(j, iq);
          c.Gq[v](i, j) += c.wA[iq] * qi *
                           (A_grad_hat.x() * gradAx(j, iq) + A_grad_hat.y() * gradAy(j, iq));
        }
        for (int m = 0; m < np_; ++m) c.Fq[v](i, m) += wmu * qi * c.qA(m, iq);
      }
    }
  }
}

void Equilibrator::build_patch_system(int vertex) {
  const Patch& patch = patches_[vertex];
  PatchSystem& ps = systems_[vertex];
  const int nel = static_cast<int>(patch.elements.size());
  const int per_face = q_ + 1;
  const int face_dof_total = static_cast<int>(mesh_->faces.size()) * per_face;

  ps.local_vertex.resize(nel);
  ps.elem_local.resize(nel);
  std::unordered_map<int, int> to_local;
  for (int ke = 0; ke < nel; ++ke) {
    const int K = patch.elements[ke];
    ps.local_vertex[ke] = local_vertex_of(mesh_->elements[K], vertex);
    ps.elem_local[ke].resize(nrt_);
    for (int j = 0; j < nrt_; ++j) {
      const int g = cache_[K].rt_dofs[j];
      auto it = to_local.find(g);
      if (it == to_local.end()) {
        it = to_local.emplace(g, static_cast<int>(ps.patch_dofs.size())).first;
        ps.patch_dofs.push_back(g);
      }
      ps.elem_local[ke][j] = it->second;
    }
  }
  const int nlocal = static_cast<int>(ps.patch_dofs.size());

  // Classify faces of the patch: spokes free; Dirichlet faces free only for
  // Dirichlet-vertex patches; everything else carries a prescribed trace
  // (b-moments on absorbing faces containing the vertex, zero otherwise).
  enum class Role { Spoke, Rim, Dir, Abs };
  std::unordered_map<int, Role> role;
  for (int f : patch.interior_faces) role[f] = Role::Spoke;
  for (int f : patch.rim_faces) role[f] = Role::Rim;
  for (int f : patch.dirichlet_faces) role[f] = Role::Dir;
  for (int f : patch.absorbing_faces) role[f] = Role::Abs;

  std::vector<char> is_free(nlocal, 0);
  std::vector<int> pres_local, pres_col, pres_l;
  std::vector<double> pres_orient;
  for (int i = 0; i < nlocal; ++i) {
    const int g = ps.patch_dofs[i];
    if (g >= face_dof_total) {
      is_free[i] = 1;
      continue;
    }
    const int f = g / per_face;
    const int l = g % per_face;
    const Role r = role.at(f);
    if (r == Role::Spoke ||
        (r == Role::Dir && patch.cls == PatchClass::TouchesDirichlet)) {
      is_free[i] = 1;
      continue;
    }
    int col = -1;
    double orient = 1.0;
    if (r == Role::Abs) {
      const Face& face = mesh_->faces[f];
      const int slot = abs_slot_[f];
      orient = fcache_[slot].orient;
      if (face.v0 == vertex) col = 2 * slot;
      else if (face.v1 == vertex) col = 2 * slot + 1;
    }
    pres_local.push_back(i);
    pres_col.push_back(col);
    pres_l.push_back(l);
    pres_orient.push_back(orient);
  }
  for (int i = 0; i < nlocal; ++i)
    if (is_free[i]) ps.free_idx.push_back(i);
  ps.pres_idx = std::move(pres_local);
  ps.pres_col = std::move(pres_col);
  ps.pres_l = std::move(pres_l);
  ps.pres_orient = std::move(pres_orient);

  const int nf = static_cast<int>(ps.free_idx.size());
  const int npres = static_cast<int>(ps.pres_idx.size());

  Eigen::MatrixXd Gp = Eigen::MatrixXd::Zero(nlocal, nlocal);
  Eigen::MatrixXd Bfull = Eigen::MatrixXd::Zero(nel * nq_, nlocal);
  for (int ke = 0; ke < nel; ++ke) {
    const ElementCache& c = cache_[patch.elements[ke]];
    const auto& map = ps.elem_local[ke];
    for (int i = 0; i < nrt_; ++i) {
      for (int j = 0; j < nrt_; ++j) Gp(map[i], map[j]) += c.G(i, j);
      for (int r = 0; r < nq_; ++r) Bfull(ke * nq_ + r, map[i]) += c.Bdiv(r, i);
    }
  }

  ps.drop_row = patch.cls != PatchClass::TouchesDirichlet;
  const int row0 = ps.drop_row ? 1 : 0;
  const int ncon = nel * nq_ - row0;

  ps.G_ff.resize(nf, nf);
  ps.G_fp.resize(nf, npres);
  for (int i = 0; i < nf; ++i) {
    for (int j = 0; j < nf; ++j) ps.G_ff(i, j) = Gp(ps.free_idx[i], ps.free_idx[j]);
    for (int j = 0; j < npres; ++j) ps.G_fp(i, j) = Gp(ps.free_idx[i], ps.pres_idx[j]);
  }
  Eigen::MatrixXd Bf(ncon, nf);
  ps.Bp.resize(ncon, npres);
  for (int r = 0; r < ncon; ++r) {
    for (int j = 0; j < nf; ++j) Bf(r, j) = Bfull(r + row0, ps.free_idx[j]);
    for (int j = 0; j < npres; ++j) ps.Bp(r, j) = Bfull(r + row0, ps.pres_idx[j]);
  }
  ps.row_scale.resize(ncon);
  for (int r = 0; r < ncon; ++r) {
    const double m = Bf.row(r).cwiseAbs().maxCoeff();
    ps.row_scale[r] = m > 0.0 ? 1.0 / m : 1.0;
  }
  ps.Cs = ps.row_scale.asDiagonal() * Bf;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + ncon, nf + ncon);
  kkt.topLeftCorner(nf, nf) = ps.G_ff;
  kkt.topRightCorner(nf, ncon) = ps.Cs.transpose();
  kkt.bottomLeftCorner(ncon, nf) = ps.Cs;
  ps.lu.compute(kkt);
  const Eigen::VectorXd du = ps.lu.matrixLU().diagonal().cwiseAbs();
  if (du.minCoeff() <= 1e-13 * du.maxCoeff())
    throw std::runtime_error("equilibrate: singular patch system at vertex " +
                             std::to_string(vertex));
}

StepResidual Equilibrator::residual_data(const Eigen::VectorXd& u_curr,
                                         const Eigen::VectorXd& d2u, const Eigen::VectorXd& du,
                                         const std::function<double(const Vec2&)>& f,
                                         const std::function<double(const Vec2&)>& g) const {
  const int ne = mesh_->n_elements();
  StepResidual res;
  res.f_coeffs.resize(np_, ne);
  res.d_moments.resize(nq_, 3 * ne);
  res.b_moments = Eigen::MatrixXd::Zero(q_ + 1, 2 * static_cast<int>(abs_faces_.size()));

#pragma omp parallel for schedule(static)
  for (int k = 0; k < ne; ++k) {
    const ElementCache& c = cache_[k];
    Eigen::VectorXd uK(nloc_), d2K(nloc_);
    for (int j = 0; j < nloc_; ++j) {
      const int dof = space_->element_dofs[k][j];
      uK[j] = u_curr[dof];
      d2K[j] = d2u[dof];
    }
    Eigen::VectorXd fvals(static_cast<int>(c.wA.size()));
    for (int iq = 0; iq < fvals.size(); ++iq) fvals[iq] = c.wA[iq] * f(c.xA[iq]);
    const Eigen::VectorXd fc = c.qA.topRows(np_) * fvals;
    res.f_coeffs.col(k) = fc;
    for (int v = 0; v < 3; ++v)
      res.d_moments.col(3 * k + v) = c.Fq[v] * fc - c.Mq[v] * d2K - c.Gq[v] * uK;
  }

  for (size_t s = 0; s < abs_faces_.size(); ++s) {
    const FaceCache& fc = fcache_[s];
    Eigen::VectorXd duK(nloc_);
    for (int j = 0; j < nloc_; ++j) duK[j] = du[space_->element_dofs[fc.element][j]];
    for (int iq = 0; iq < static_cast<int>(fc.s.size()); ++iq) {
      const double resid = fc.gamma * (fc.lag.col(iq).dot(duK) - g(fc.x[iq]));
      const double w = fc.w[iq] * fc.len * resid;
      for (int l = 0; l <= q_; ++l) {
        res.b_moments(l, 2 * s) += w * (1.0 - fc.s[iq]) * fc.leg(l, iq);
        res.b_moments(l, 2 * s + 1) += w * fc.s[iq] * fc.leg(l, iq);
      }
    }
  }
  return res;
}

Equilibrator::Compatibility Equilibrator::compatibility(int vertex,
                                                        const StepResidual& res) const {
  const Patch& patch = patches_[vertex];
  const PatchSystem& ps = systems_[vertex];
  Compatibility out;
  double d_int = 0.0, d_l1 = 0.0;
  for (size_t ke = 0; ke < patch.elements.size(); ++ke) {
    const int K = patch.elements[ke];
    const ElementCache& c = cache_[K];
    const Eigen::VectorXd dm = res.d_moments.col(3 * K + ps.local_vertex[ke]);
    d_int += std::sqrt(c.geom.area) * dm[0];
    const Eigen::VectorXd dvals = c.qB.transpose() * dm;
    for (int iq = 0; iq < dvals.size(); ++iq) d_l1 += c.wB[iq] * std::abs(dvals[iq]);
  }
  double b_int = 0.0, b_l1 = 0.0;
  for (int f : patch.absorbing_faces) {
    const Face& face = mesh_->faces[f];
    int col = -1;
    if (face.v0 == vertex) col = 2 * abs_slot_[f];
    else if (face.v1 == vertex) col = 2 * abs_slot_[f] + 1;
    if (col < 0) continue;  // far face: b^a vanishes there
    const FaceCache& fc = fcache_[abs_slot_[f]];
    b_int += res.b_moments(0, col);
    for (int iq = 0; iq < static_cast<int>(fc.s.size()); ++iq) {
      double bval = 0.0;
      for (int l = 0; l <= q_; ++l)
        bval += res.b_moments(l, col) * (2.0 * l + 1.0) / fc.len * fc.leg(l, iq);
      b_l1 += fc.w[iq] * fc.len * std::abs(bval);
    }
  }
  out.defect = std::abs(d_int - b_int);
  out.scale = d_l1 + b_l1;
  return out;
}

Eigen::VectorXd Equilibrator::patch_rhs_values(const PatchSystem& ps,
                                               const StepResidual& res) const {
  Eigen::VectorXd xp(ps.pres_idx.size());
  for (size_t j = 0; j < ps.pres_idx.size(); ++j)
    xp[j] = ps.pres_col[j] >= 0
                ? ps.pres_orient[j] * res.b_moments(ps.pres_l[j], ps.pres_col[j])
                : 0.0;
  return xp;
}

PatchFlux Equilibrator::solve_patch(int vertex, const StepResidual& res,
                                    const Eigen::VectorXd& u_curr) const {
  const Patch& patch = patches_[vertex];
  const PatchSystem& ps = systems_[vertex];
  const int nel = static_cast<int>(patch.elements.size());
  const int nlocal = static_cast<int>(ps.patch_dofs.size());
  const int nf = static_cast<int>(ps.free_idx.size());
  const int ncon = static_cast<int>(ps.Cs.rows());
  const int row0 = ps.drop_row ? 1 : 0;

  const Eigen::VectorXd xp = patch_rhs_values(ps, res);

  Eigen::VectorXd c_full = Eigen::VectorXd::Zero(nlocal);
  Eigen::VectorXd dvec(nel * nq_);
  Eigen::VectorXd uK(nloc_);
  for (int ke = 0; ke < nel; ++ke) {
    const int K = patch.elements[ke];
    const ElementCache& c = cache_[K];
    for (int j = 0; j < nloc_; ++j) uK[j] = u_curr[space_->element_dofs[K][j]];
    const Eigen::VectorXd cK = c.E[ps.local_vertex[ke]] * uK;
    for (int i = 0; i < nrt_; ++i) c_full[ps.elem_local[ke][i]] += cK[i];
    dvec.segment(ke * nq_, nq_) = res.d_moments.col(3 * K + ps.local_vertex[ke]);
  }

  Eigen::VectorXd rhs(nf + ncon);
  for (int i = 0; i < nf; ++i) rhs[i] = -c_full[ps.free_idx[i]];
  rhs.head(nf) -= ps.G_fp * xp;
  rhs.tail(ncon) =
      ps.row_scale.asDiagonal() * (dvec.segment(row0, ncon) - ps.Bp * xp);

  Eigen::VectorXd sol = ps.lu.solve(rhs);
  const auto apply = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd out(nf + ncon);
    out.head(nf) = ps.G_ff * y.head(nf) + ps.Cs.transpose() * y.tail(ncon);
    out.tail(ncon) = ps.Cs * y.head(nf);
    return out;
  };
  sol += ps.lu.solve(rhs - apply(sol));

  PatchFlux flux;
  flux.vertex = vertex;
  flux.dofs = ps.patch_dofs;
  flux.values.setZero(nlocal);
  for (int i = 0; i < nf; ++i) flux.values[ps.free_idx[i]] = sol[i];
  for (size_t j = 0; j < ps.pres_idx.size(); ++j) flux.values[ps.pres_idx[j]] = xp[j];
  flux.kkt_residual = (rhs - apply(sol)).norm();
  flux.kkt_scale = rhs.norm();
  return flux;
}

Eigen::VectorXd Equilibrator::assemble_flux(const StepResidual& res,
                                            const Eigen::VectorXd& u_curr, int n_threads) const {
  const int nv = mesh_->n_vertices();
  std::vector<PatchFlux> locals(nv);
#pragma omp parallel for schedule(static) num_threads(std::max(1, n_threads))
  for (int v = 0; v < nv; ++v) locals[v] = solve_patch(v, res, u_curr);

  Eigen::VectorXd flux = Eigen::VectorXd::Zero(n_flux_dofs_);
  for (int v = 0; v < nv; ++v) {
    const PatchFlux& pf = locals[v];
    for (size_t i = 0; i < pf.dofs.size(); ++i) flux[pf.dofs[i]] += pf.values[i];
  }
  return flux;
}

EtaResult Equilibrator::eta_elements(const Eigen::VectorXd& flux, const Eigen::VectorXd& u_curr,
                                     int n_threads) const {
  const int ne = mesh_->n_elements();
  EtaResult out;
  out.per_element.resize(ne);
#pragma omp parallel for schedule(static) num_threads(std::max(1, n_threads))
  for (int k = 0; k < ne; ++k) {
    const ElementCache& c = cache_[k];
    Eigen::VectorXd sK(nrt_), uK(nloc_);
    for (int i = 0; i < nrt_; ++i) sK[i] = flux[c.rt_dofs[i]];
    for (int j = 0; j < nloc_; ++j) uK[j] = u_curr[space_->element_dofs[k][j]];
    const Eigen::Matrix2d& A = mat_->A[k];
    double acc = 0.0;
    for (int iq = 0; iq < static_cast<int>(c.wB.size()); ++iq) {
      const Vec2 sigma(c.rtBx.col(iq).dot(sK), c.rtBy.col(iq).dot(sK));
      const Vec2 grad(c.gradBx.col(iq).dot(uK), c.gradBy.col(iq).dot(uK));
      const Vec2 v = c.Ainv * sigma + grad;
      acc += c.wB[iq] * v.dot(A * v);
    }
    out.per_element[k] = std::sqrt(acc);
  }
  double total2 = 0.0;
  for (int k = 0; k < ne; ++k) total2 += out.per_element[k] * out.per_element[k];
  out.total = std::sqrt(total2);
  return out;
}

DefectReport Equilibrator::divergence_defect(const Eigen::VectorXd& flux,
                                             const StepResidual& res) const {
  DefectReport out;
  double scale2 = 0.0;
  for (int k = 0; k < mesh_->n_elements(); ++k) {
    const ElementCache& c = cache_[k];
    Eigen::VectorXd sK(nrt_);
    for (int i = 0; i < nrt_; ++i) sK[i] = flux[c.rt_dofs[i]];
    const Eigen::VectorXd target = res.d_moments.col(3 * k) + res.d_moments.col(3 * k + 1) +
                                   res.d_moments.col(3 * k + 2);
    const double defect = (c.Bdiv * sK - target).norm();
    out.max_defect = std::max(out.max_defect, defect);
    scale2 += target.squaredNorm();
  }
  out.scale = std::sqrt(scale2);
  return out;
}

DefectReport Equilibrator::trace_defect(const Eigen::VectorXd& flux,
                                        const StepResidual& res) const {
  DefectReport out;
  const int per_face = q_ + 1;
  double scale2 = 0.0;
  for (size_t s = 0; s < abs_faces_.size(); ++s) {
    const FaceCache& fc = fcache_[s];
    double defect2 = 0.0, target2 = 0.0;
    for (int l = 0; l <= q_; ++l) {
      const double target = res.b_moments(l, 2 * s) + res.b_moments(l, 2 * s + 1);
      const double actual = fc.orient * flux[fc.face * per_face + l];
      defect2 += (actual - target) * (actual - target) * (2.0 * l + 1.0) / fc.len;
      target2 += target * target * (2.0 * l + 1.0) / fc.len;
    }
    out.max_defect = std::max(out.max_defect, std::sqrt(defect2));
    scale2 += target2;
  }
  out.scale = std::sqrt(scale2);
  return out;
}

Eigen::VectorXd Equilibrator::element_div_moments(int element, const Eigen::VectorXd& flux) const {
  const ElementCache& c = cache_[element];
  Eigen::VectorXd sK(nrt_);
  for (int i = 0; i < nrt_; ++i) sK[i] = flux[c.rt_dofs[i]];
  return c.Bdiv * sK;
}

const Eigen::MatrixXd& Equilibrator::element_gram(int element) const {
  return cache_[element].G;
}

const std::vector<int>& Equilibrator::element_flux_dofs(int element) const {
  return cache_[element].rt_dofs;
}

}  // namespace waveq
