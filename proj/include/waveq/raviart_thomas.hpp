#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "waveq/mesh.hpp"
#include "waveq/quadrature.hpp"

namespace waveq {

/// dim RT_q = (q+1)(q+3) on a triangle.
int rt_dim(int q);

/// Exponent pairs (a,b) of the monomials x^a y^b with a+b <= q, ordered by
/// total degree. Shared by every basis construction in this project.
std::vector<std::pair<int, int>> monomial_exponents(int q);

/// Shifted Legendre polynomial P_l on [0,1].
double legendre01(int l, double s);

/// Values (rows) and divergences of a family of vector fields at one point.
struct RTValues {
  Eigen::Matrix<double, Eigen::Dynamic, 2> value;
  Eigen::VectorXd div;
};

/// Monomial spanning set of RT_q = (P_q)^2 + x P_q on the reference triangle:
/// pairs (m,0), (0,m) for each monomial m of degree <= q, then x m for the
/// homogeneous monomials of degree q.
RTValues rt_monomials(int q, const Vec2& x);

/// Reference RT_q basis dual to the reference dofs: per edge, q+1 normal
/// moments against shifted Legendre polynomials (edges directed from the
/// lower local vertex to the higher, normal (t_y, -t_x)); then q(q+1)
/// interior moments against monomial vector fields. Coefficients are cached
/// per degree.
RTValues rt_eval(int q, const Vec2& x);

/// Contravariant Piola transform: value B v / det, divergence div_ref / det.
RTValues piola_push(const ElementGeometry& geom, const RTValues& ref);

/// RT_q basis on a mesh element, dual to mesh-global functionals: for each
/// of its three faces, normal moments against shifted Legendre polynomials
/// taken along the face direction v0 -> v1 with normal (t_y, -t_x); then
/// interior moments against monomials centered at the element. Face
/// functionals are shared verbatim by both neighbours of a face, so global
/// coefficient vectors are H(div)-conforming with no orientation signs.
class RTElementBasis {
 public:
  RTElementBasis(const Mesh& mesh, int element, int q);

  int q() const { return q_; }
  int n() const { return n_; }
  const ElementGeometry& geometry() const { return geom_; }

  /// Basis values/divergences at a reference point.
  RTValues eval_ref(const Vec2& x_ref) const;

  /// The dof functionals applied to an arbitrary field given by its values
  /// at the edge/volume quadrature points used internally is not exposed;
  /// tests apply functionals directly from the documented definition.

 private:
  int q_ = 0;
  int n_ = 0;
  ElementGeometry geom_;
  Vec2 centroid_;
  double scale_ = 1.0;  ///< monomial centering scale (longest edge)
  Eigen::MatrixXd coeff_;  ///< column i: pushed-monomial coefficients of basis i
};

/// Global RT dof ids of one element, matching RTElementBasis local order.
std::vector<int> rt_element_dofs(const Mesh& mesh, int element, int q);

int rt_n_global_dofs(const Mesh& mesh, int q);

}  // namespace waveq
