#include "waveq/lagrange.hpp"

#include <stdexcept>

namespace waveq {

int lagrange_dofs_per_element(int p) {
  if (p == 1) return 3;
  if (p == 2) return 6;
  throw std::invalid_argument("lagrange: only p in {1,2} is supported");
}

LagrangeValues lagrange_eval(int p, const Vec2& x) {
  lagrange_dofs_per_element(p);
  const double l0 = 1.0 - x.x() - x.y();
  const double l1 = x.x();
  const double l2 = x.y();
  const Vec2 g0(-1.0, -1.0), g1(1.0, 0.0), g2(0.0, 1.0);

  LagrangeValues out;
  if (p == 1) {
    out.n = 3;
    out.value = {l0, l1, l2};
    out.grad = {g0, g1, g2};
    return out;
  }

  out.n = 6;
  const std::array<double, 3> l = {l0, l1, l2};
  const std::array<Vec2, 3> g = {g0, g1, g2};
  for (int i = 0; i < 3; ++i) {
    out.value[i] = l[i] * (2.0 * l[i] - 1.0);
    out.grad[i] = (4.0 * l[i] - 1.0) * g[i];
  }
  for (int e = 0; e < 3; ++e) {
    const int a = (e + 1) % 3, b = (e + 2) % 3;
    out.value[3 + e] = 4.0 * l[a] * l[b];
    out.grad[3 + e] = 4.0 * (l[a] * g[b] + l[b] * g[a]);
  }
  return out;
}

LagrangeTable tabulate_lagrange(int p, const std::vector<Vec2>& points) {
  const int n = lagrange_dofs_per_element(p);
  const int nq = static_cast<int>(points.size());
  LagrangeTable t;
  t.value.resize(n, nq);
  t.dvalue[0].resize(n, nq);
  t.dvalue[1].resize(n, nq);
  for (int q = 0; q < nq; ++q) {
    LagrangeValues v = lagrange_eval(p, points[q]);
    for (int i = 0; i < n; ++i) {
      t.value(i, q) = v.value[i];
      t.dvalue[0](i, q) = v.grad[i].x();
      t.dvalue[1](i, q) = v.grad[i].y();
    }
  }
  return t;
}

LagrangeSpace build_lagrange_space(const Mesh& mesh, int p) {
  LagrangeSpace sp;
  sp.mesh = &mesh;
  sp.p = p;
  sp.dofs_per_element = lagrange_dofs_per_element(p);
  const int nv = mesh.n_vertices();
  sp.n_dofs = (p == 1) ? nv : nv + static_cast<int>(mesh.faces.size());

  sp.element_dofs.resize(mesh.n_elements());
  for (int k = 0; k < mesh.n_elements(); ++k) {
    const Element& el = mesh.elements[k];
    auto& dofs = sp.element_dofs[k];
    dofs.fill(-1);
    for (int i = 0; i < 3; ++i) dofs[i] = el.v[i];
    if (p == 2) {
      for (int e = 0; e < 3; ++e) dofs[3 + e] = nv + el.face[e];
    }
  }

  sp.dof_coords.resize(sp.n_dofs);
  for (int v = 0; v < nv; ++v) sp.dof_coords[v] = mesh.vertices[v];
  if (p == 2) {
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
      sp.dof_coords[nv + f] = 0.5 * (mesh.vertices[mesh.faces[f].v0] + mesh.vertices[mesh.faces[f].v1]);
    }
  }

  sp.dirichlet.assign(sp.n_dofs, 0);
  for (int v = 0; v < nv; ++v) sp.dirichlet[v] = mesh.vertex_on_dirichlet[v];
  if (p == 2) {
    for (int f : mesh.boundary_faces) {
      if (mesh.faces[f].kind == static_cast<int>(BoundaryKind::Dirichlet)) sp.dirichlet[nv + f] = 1;
    }
  }
  return sp;
}

Eigen::VectorXd interpolate(const LagrangeSpace& space, const std::function<double(const Vec2&)>& f) {
  Eigen::VectorXd u(space.n_dofs);
  for (int i = 0; i < space.n_dofs; ++i) u[i] = f(space.dof_coords[i]);
  return u;
}

Vec2 edge_point_ref(const Element& el, const Face& face, int local_edge, double s) {
  static const std::array<Vec2, 3> ref_vertex = {Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
  const int a = (local_edge + 1) % 3, b = (local_edge + 2) % 3;
  Vec2 start, end;
  if (el.v[a] == face.v0) {
    start = ref_vertex[a];
    end = ref_vertex[b];
  } else {
    start = ref_vertex[b];
    end = ref_vertex[a];
  }
  return start + s * (end - start);
}

}  // namespace waveq
