#include "waveq/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace waveq {

namespace {

/// Nodes and weights of an m-point Gauss rule from the symmetric tridiagonal
/// Jacobi matrix of the orthogonal-polynomial recurrence (Golub-Welsch).
/// `mu0` is the total mass of the weight function.
void golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double mu0,
                  std::vector<double>& nodes, std::vector<double>& weights) {
  const int m = static_cast<int>(diag.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) J(i, i) = diag[i];
  for (int i = 0; i + 1 < m; ++i) J(i, i + 1) = J(i + 1, i) = off[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(m);
  weights.resize(m);
  for (int i = 0; i < m; ++i) {
    nodes[i] = es.eigenvalues()[i];
    double v = es.eigenvectors()(0, i);
    weights[i] = mu0 * v * v;
  }
}

/// Gauss-Legendre on [-1,1].
void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd off(m > 1 ? m - 1 : 0);
  for (int k = 1; k < m; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  golub_welsch(diag, off, 2.0, nodes, weights);
}

/// Gauss-Jacobi on [-1,1] with weight (1-x).
void gauss_jacobi10(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::VectorXd diag(m);
  Eigen::VectorXd off(m > 1 ? m - 1 : 0);
  diag[0] = -1.0 / 3.0;
  for (int k = 1; k < m; ++k) {
    diag[k] = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
    off[k - 1] = std::sqrt(k * (k + 1.0)) / (2.0 * k + 1.0);
  }
  golub_welsch(diag, off, 2.0, nodes, weights);
}

int point_count(int degree) { return (degree + 2) / 2; }

}  // namespace

QuadratureRule triangle_rule(int degree) {
  if (degree < 0 || degree > 30) throw std::invalid_argument("triangle_rule: unsupported degree");
  const int m = point_count(std::max(degree, 1));

  std::vector<double> xj, wj, xl, wl;
  gauss_jacobi10(m, xj, wj);
  gauss_legendre(m, xl, wl);

  QuadratureRule rule;
  rule.degree = degree;
  rule.points.reserve(m * m);
  rule.weights.reserve(m * m);
  // Triangle as a collapsed square: x = xi, y = eta (1 - xi), with the
  // Jacobian (1 - xi) absorbed into the Jacobi weight.
  for (int i = 0; i < m; ++i) {
    const double xi = 0.5 * (xj[i] + 1.0);
    const double wi = 0.25 * wj[i];
    for (int j = 0; j < m; ++j) {
      const double eta = 0.5 * (xl[j] + 1.0);
      rule.points.emplace_back(xi, eta * (1.0 - xi));
      rule.weights.push_back(wi * 0.5 * wl[j]);
    }
  }
  return rule;
}

EdgeQuadratureRule edge_rule(int degree) {
  if (degree < 0 || degree > 40) throw std::invalid_argument("edge_rule: unsupported degree");
  const int m = point_count(std::max(degree, 1));
  std::vector<double> x, w;
  gauss_legendre(m, x, w);
  EdgeQuadratureRule rule;
  rule.degree = degree;
  rule.points.resize(m);
  rule.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    rule.points[i] = 0.5 * (x[i] + 1.0);
    rule.weights[i] = 0.5 * w[i];
  }
  return rule;
}

}  // namespace waveq
