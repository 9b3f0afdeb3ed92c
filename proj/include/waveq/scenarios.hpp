#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "waveq/assembly.hpp"
#include "waveq/mesh.hpp"

namespace waveq {

/// C² smoothstep: 0 for t ≤ 0, 1 for t ≥ 1, 10t³ − 15t⁴ + 6t⁵ in between.
struct Smoothstep {
  double chi;
  double dchi;
  double ddchi;
};
Smoothstep smoothstep_chi(double t);

/// k-th derivative of the smoothstep (k = 0 is the function itself).
double smoothstep_derivative(int k, double t);

/// Pulse profile p(τ) = τ e^{−(τ/σ)²} and its derivatives of any order.
double pulse(double sigma, double tau);
double pulse_derivative(double sigma, int r, double tau);

/// Even-odd rule; points on the boundary are classified arbitrarily.
bool point_in_polygon(const std::vector<Vec2>& polygon, const Vec2& x);

/// A complete problem description: domain, boundary split, coefficients,
/// volume/boundary data with analytic time derivatives, and exact solution
/// fields when available.  Data evaluators take the derivative order r as
/// their first argument (r = 0 is the function itself); g is only ever
/// evaluated on absorbing faces.
struct Scenario {
  std::string name;

  double xmin = 0.0, xmax = 1.0;
  GridPattern pattern = GridPattern::Diagonal;
  BoundaryRule boundary;

  std::function<double(int region, const Vec2&)> mu;
  std::function<Eigen::Matrix2d(int region, const Vec2&)> A;
  std::function<double(const Vec2&)> gamma;
  std::function<int(const Vec2&)> region;  ///< centroid → region tag; unset keeps mesh tags

  std::function<double(int r, double t, const Vec2&)> f;
  std::function<double(int r, double t, const Vec2&)> g;

  bool has_exact = false;
  std::function<double(double t, const Vec2&)> exact_u;
  std::function<double(double t, const Vec2&)> exact_ut;
  std::function<Vec2(double t, const Vec2&)> exact_grad;

  double T = 10.0;
  std::vector<double> rho_values;
};

/// Unit square, all-Dirichlet boundary, u = χ(t) sin(√2πt) sin(πx₁) sin(πx₂)
/// driven by the matching analytic f; T = 10, ρ ∈ {1, 1/2, 1/4}.
Scenario standing_wave();

/// Unit square, Dirichlet on the bottom-left sides, absorbing on the
/// top-right; four-image traveling pulse of width σ, t₀ = 4, θ = 11π/8;
/// T = 10, ρ = 1/T.
Scenario reflection(double sigma);

/// Square (−1,1)², fully absorbing boundary, penetrable polygonal obstacle
/// with μ = 2, A = I/2 inside; incident pulse enters through g; no exact
/// solution; T = 10, ρ = 1/T.
Scenario obstacle(double sigma);

/// Generated mesh for a scenario at subdivision level n, with element
/// regions assigned by the scenario's centroid classifier when present.
Mesh build_scenario_mesh(const Scenario& scenario, int n);

MaterialData scenario_material(const Scenario& scenario, const Mesh& mesh);

}  // namespace waveq
