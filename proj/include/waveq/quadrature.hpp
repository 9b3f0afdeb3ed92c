#pragma once

#include <vector>

#include "waveq/mesh.hpp"

namespace waveq {

/// Quadrature on the reference triangle (0,0), (1,0), (0,1).
/// Weights are positive and sum to the reference area 1/2.
struct QuadratureRule {
  int degree = 0;  ///< exact for polynomials of total degree <= degree
  std::vector<Vec2> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

/// Quadrature on [0,1]; weights sum to 1.
struct EdgeQuadratureRule {
  int degree = 0;
  std::vector<double> points;
  std::vector<double> weights;
  int size() const { return static_cast<int>(points.size()); }
};

/// Conical-product rule (Gauss-Jacobi x Gauss-Legendre), exact up to the
/// requested total degree.
QuadratureRule triangle_rule(int degree);

/// Gauss-Legendre rule on [0,1].
EdgeQuadratureRule edge_rule(int degree);

}  // namespace waveq
