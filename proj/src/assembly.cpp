#include "waveq/assembly.hpp"

#include <stdexcept>

#include "waveq/quadrature.hpp"

namespace waveq {

namespace {

std::vector<Vec2> rule_points(const QuadratureRule& rule) { return rule.points; }

/// Local edge index of `face_id` within element `k`.
int local_edge_of(const Mesh& mesh, int k, int face_id) {
  for (int e = 0; e < 3; ++e) {
    if (mesh.elements[k].face[e] == face_id) return e;
  }
  throw std::runtime_error("assembly: face does not belong to element");
}

}  // namespace

int volume_rule_degree(int p) { return 2 * p + 2; }
int boundary_rule_degree(int p) { return 2 * p + 4; }

MaterialData build_material(const Mesh& mesh,
                            const std::function<double(int region, const Vec2&)>& mu,
                            const std::function<Eigen::Matrix2d(int region, const Vec2&)>& A,
                            const std::function<double(const Vec2&)>& gamma) {
  MaterialData mat;
  const int ne = mesh.n_elements();
  mat.mu.resize(ne);
  mat.A.resize(ne);
  mat.a_min.resize(ne);
  mat.a_max.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const Element& el = mesh.elements[k];
    Vec2 c = (mesh.vertices[el.v[0]] + mesh.vertices[el.v[1]] + mesh.vertices[el.v[2]]) / 3.0;
    mat.mu[k] = mu(el.region, c);
    mat.A[k] = A(el.region, c);
    if (mat.mu[k] <= 0.0) throw std::runtime_error("material: mu must be positive");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(mat.A[k]);
    mat.a_min[k] = es.eigenvalues()[0];
    mat.a_max[k] = es.eigenvalues()[1];
    if (mat.a_min[k] <= 0.0) throw std::runtime_error("material: A must be positive definite");
  }
  mat.gamma.assign(mesh.faces.size(), 0.0);
  for (int f : mesh.boundary_faces) {
    if (mesh.faces[f].kind == static_cast<int>(BoundaryKind::Absorbing)) {
      Vec2 mid = 0.5 * (mesh.vertices[mesh.faces[f].v0] + mesh.vertices[mesh.faces[f].v1]);
      mat.gamma[f] = gamma(mid);
      if (mat.gamma[f] <= 0.0) throw std::runtime_error("material: gamma must be positive on absorbing faces");
    }
  }
  return mat;
}

SpMat assemble_mass(const LagrangeSpace& space, const MaterialData& mat) {
  const Mesh& mesh = *space.mesh;
  const int nd = space.dofs_per_element;
  QuadratureRule rule = triangle_rule(volume_rule_degree(space.p));
  LagrangeTable tab = tabulate_lagrange(space.p, rule_points(rule));

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mesh.n_elements()) * nd * nd);
  Eigen::MatrixXd local(nd, nd);
  for (int k = 0; k < mesh.n_elements(); ++k) {
    ElementGeometry g = element_geometry(mesh, k);
    local.setZero();
    for (int iq = 0; iq < rule.size(); ++iq) {
      double w = rule.weights[iq] * g.det * mat.mu[k];
      for (int i = 0; i < nd; ++i) {
        for (int j = 0; j <= i; ++j) local(i, j) += w * tab.value(i, iq) * tab.value(j, iq);
      }
    }
    for (int i = 0; i < nd; ++i) {
      for (int j = 0; j < nd; ++j) {
        double v = j <= i ? local(i, j) : local(j, i);
        trips.emplace_back(space.element_dofs[k][i], space.element_dofs[k][j], v);
      }
    }
  }
  SpMat out(space.n_dofs, space.n_dofs);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

SpMat assemble_stiffness(const LagrangeSpace& space, const MaterialData& mat) {
  const Mesh& mesh = *space.mesh;
  const int nd = space.dofs_per_element;
  QuadratureRule rule = triangle_rule(volume_rule_degree(space.p));
  LagrangeTable tab = tabulate_lagrange(space.p, rule_points(rule));

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mesh.n_elements()) * nd * nd);
  Eigen::MatrixXd local(nd, nd);
  std::vector<Vec2> grad(nd);
  for (int k = 0; k < mesh.n_elements(); ++k) {
    ElementGeometry g = element_geometry(mesh, k);
    Eigen::Matrix2d BinvT = g.Binv.transpose();
    local.setZero();
    for (int iq = 0; iq < rule.size(); ++iq) {
      double w = rule.weights[iq] * g.det;
      for (int i = 0; i < nd; ++i) grad[i] = BinvT * Vec2(tab.dvalue[0](i, iq), tab.dvalue[1](i, iq));
      for (int i = 0; i < nd; ++i) {
        Vec2 Agi = mat.A[k] * grad[i];
        for (int j = 0; j <= i; ++j) local(i, j) += w * Agi.dot(grad[j]);
      }
    }
    for (int i = 0; i < nd; ++i) {
      for (int j = 0; j < nd; ++j) {
        double v = j <= i ? local(i, j) : local(j, i);
        trips.emplace_back(space.element_dofs[k][i], space.element_dofs[k][j], v);
      }
    }
  }
  SpMat out(space.n_dofs, space.n_dofs);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

SpMat assemble_boundary_mass(const LagrangeSpace& space, const MaterialData& mat) {
  const Mesh& mesh = *space.mesh;
  const int nd = space.dofs_per_element;
  EdgeQuadratureRule rule = edge_rule(boundary_rule_degree(space.p));

  std::vector<Eigen::Triplet<double>> trips;
  for (int f : mesh.boundary_faces) {
    const Face& face = mesh.faces[f];
    if (face.kind != static_cast<int>(BoundaryKind::Absorbing)) continue;
    int k = face.elem[0];
    int e = local_edge_of(mesh, k, f);
    double len = (mesh.vertices[face.v1] - mesh.vertices[face.v0]).norm();
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nd, nd);
    for (int iq = 0; iq < rule.size(); ++iq) {
      LagrangeValues v = lagrange_eval(space.p, edge_point_ref(mesh.elements[k], face, e, rule.points[iq]));
      double w = rule.weights[iq] * len * mat.gamma[f];
      for (int i = 0; i < nd; ++i) {
        for (int j = 0; j <= i; ++j) local(i, j) += w * v.value[i] * v.value[j];
      }
    }
    for (int i = 0; i < nd; ++i) {
      for (int j = 0; j < nd; ++j) {
        double v = j <= i ? local(i, j) : local(j, i);
        if (v != 0.0) trips.emplace_back(space.element_dofs[k][i], space.element_dofs[k][j], v);
      }
    }
  }
  SpMat out(space.n_dofs, space.n_dofs);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

void apply_dirichlet(const LagrangeSpace& space, SpMat& mat) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mat.nonZeros()) + space.n_dofs);
  for (int row = 0; row < mat.outerSize(); ++row) {
    for (SpMat::InnerIterator it(mat, row); it; ++it) {
      if (space.dirichlet[it.row()] || space.dirichlet[it.col()]) continue;
      trips.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (int i = 0; i < space.n_dofs; ++i) {
    if (space.dirichlet[i]) trips.emplace_back(i, i, 1.0);
  }
  SpMat out(space.n_dofs, space.n_dofs);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  mat = std::move(out);
}

void zero_dirichlet(const LagrangeSpace& space, Eigen::VectorXd& vec) {
  for (int i = 0; i < space.n_dofs; ++i) {
    if (space.dirichlet[i]) vec[i] = 0.0;
  }
}

LoadAssembler::LoadAssembler(const LagrangeSpace& space, const MaterialData& mat) : space_(&space) {
  const Mesh& mesh = *space.mesh;
  QuadratureRule vrule = triangle_rule(volume_rule_degree(space.p));
  LagrangeTable vtab = tabulate_lagrange(space.p, rule_points(vrule));
  vol_points_per_element_ = vrule.size();
  vol_basis_ = vtab.value;
  vol_points_.reserve(static_cast<size_t>(mesh.n_elements()) * vrule.size());
  for (int k = 0; k < mesh.n_elements(); ++k) {
    ElementGeometry g = element_geometry(mesh, k);
    for (int iq = 0; iq < vrule.size(); ++iq) {
      VolumePoint pt;
      pt.x = g.B * vrule.points[iq] + g.b;
      pt.weight = vrule.weights[iq] * g.det * mat.mu[k];
      vol_points_.push_back(pt);
    }
  }

  EdgeQuadratureRule frule = edge_rule(boundary_rule_degree(space.p));
  for (int f : mesh.boundary_faces) {
    const Face& face = mesh.faces[f];
    if (face.kind != static_cast<int>(BoundaryKind::Absorbing)) continue;
    int k = face.elem[0];
    int e = local_edge_of(mesh, k, f);
    Vec2 p0 = mesh.vertices[face.v0], p1 = mesh.vertices[face.v1];
    double len = (p1 - p0).norm();
    FaceData fd;
    fd.dofs = space.element_dofs[k];
    fd.basis.resize(space.dofs_per_element, frule.size());
    for (int iq = 0; iq < frule.size(); ++iq) {
      double s = frule.points[iq];
      fd.x.push_back(p0 + s * (p1 - p0));
      fd.weight.push_back(frule.weights[iq] * len * mat.gamma[f]);
      LagrangeValues v = lagrange_eval(space.p, edge_point_ref(mesh.elements[k], face, e, s));
      for (int i = 0; i < space.dofs_per_element; ++i) fd.basis(i, iq) = v.value[i];
    }
    faces_.push_back(std::move(fd));
  }
}

void LoadAssembler::volume(const std::function<double(const Vec2&)>& f, Eigen::VectorXd& out) const {
  const int nd = space_->dofs_per_element;
  const int npts = vol_points_per_element_;
  const int ne = space_->mesh->n_elements();
  for (int k = 0; k < ne; ++k) {
    const VolumePoint* pts = &vol_points_[static_cast<size_t>(k) * npts];
    for (int iq = 0; iq < npts; ++iq) {
      double wf = pts[iq].weight * f(pts[iq].x);
      for (int i = 0; i < nd; ++i) out[space_->element_dofs[k][i]] += wf * vol_basis_(i, iq);
    }
  }
}

void LoadAssembler::boundary(const std::function<double(const Vec2&)>& g, Eigen::VectorXd& out) const {
  const int nd = space_->dofs_per_element;
  for (const FaceData& fd : faces_) {
    for (size_t iq = 0; iq < fd.x.size(); ++iq) {
      double wg = fd.weight[iq] * g(fd.x[iq]);
      for (int i = 0; i < nd; ++i) out[fd.dofs[i]] += wg * fd.basis(i, static_cast<int>(iq));
    }
  }
}

LinearSolver::LinearSolver(const SpMat& mat) : mat_(mat) {
  llt_.compute(mat_);
  if (llt_.info() != Eigen::Success) {
    direct_ = false;
    cg_.setTolerance(1e-12);
    cg_.setMaxIterations(10 * mat_.rows());
    cg_.compute(mat_);
    if (cg_.info() != Eigen::Success) {
      throw std::runtime_error("linear solver: both Cholesky and CG setup failed");
    }
  }
}

Eigen::VectorXd LinearSolver::solve(const Eigen::VectorXd& rhs) const {
  if (direct_) return llt_.solve(rhs);
  Eigen::VectorXd x = cg_.solve(rhs);
  if (cg_.info() != Eigen::Success) throw std::runtime_error("linear solver: CG did not converge");
  return x;
}

}  // namespace waveq
