#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "waveq/mesh.hpp"
#include "waveq/quadrature.hpp"

namespace waveq {

/// Values and reference gradients of the nodal basis of P_p on the reference
/// triangle. Local order: vertices 0,1,2; for p = 2 the midpoints of the
/// edges opposite vertices 0,1,2 follow.
struct LagrangeValues {
  int n = 0;
  std::array<double, 6> value{};
  std::array<Vec2, 6> grad{};
};

LagrangeValues lagrange_eval(int p, const Vec2& x_ref);

int lagrange_dofs_per_element(int p);

/// Basis values/gradients tabulated at a fixed set of reference points.
struct LagrangeTable {
  Eigen::MatrixXd value;                  ///< (n_dofs_per_element) x (n_points)
  std::array<Eigen::MatrixXd, 2> dvalue;  ///< reference-gradient components
};

LagrangeTable tabulate_lagrange(int p, const std::vector<Vec2>& points);

/// Continuous Lagrange space of degree p in {1, 2} with homogeneous
/// Dirichlet conditions handled through the `dirichlet` mask.
struct LagrangeSpace {
  const Mesh* mesh = nullptr;
  int p = 1;
  int n_dofs = 0;
  int dofs_per_element = 3;
  std::vector<std::array<int, 6>> element_dofs;
  std::vector<Vec2> dof_coords;
  std::vector<char> dirichlet;  ///< 1 on dofs in the closure of the Dirichlet boundary
};

LagrangeSpace build_lagrange_space(const Mesh& mesh, int p);

/// Nodal interpolant of a scalar function.
Eigen::VectorXd interpolate(const LagrangeSpace& space, const std::function<double(const Vec2&)>& f);

/// Trace helper: reference coordinates of the point at arclength fraction s
/// (from the face's lower vertex id to the higher) on local edge `e` of an
/// element whose vertices are listed in `el`.
Vec2 edge_point_ref(const Element& el, const Face& face, int local_edge, double s);

}  // namespace waveq
