#include "waveq/wavesolver.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace waveq {

double wave_speed(const Mesh& mesh, const MaterialData& mat, int element) {
  double theta = std::sqrt(mat.a_min[element] / mat.mu[element]);
  double gamma_max = 0.0;
  for (int k = 0; k < 3; ++k) {
    const int f = mesh.elements[element].face[k];
    if (mesh.faces[f].boundary() && mesh.faces[f].kind == static_cast<int>(BoundaryKind::Absorbing))
      gamma_max = std::max(gamma_max, mat.gamma[f]);
  }
  if (gamma_max > 0.0) theta = std::min(theta, mat.a_min[element] / gamma_max);
  return theta;
}

CflParams cfl_dt(const Mesh& mesh, const MaterialData& mat, double alpha) {
  if (mesh.n_elements() == 0) throw std::runtime_error("cfl_dt: empty mesh");
  CflParams out;
  out.alpha = alpha;
  double best = std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double ratio = element_geometry(mesh, e).rho / wave_speed(mesh, mat, e);
    if (ratio < best) {
      best = ratio;
      out.argmin_element = e;
    }
  }
  out.dt = alpha * best;
  return out;
}

double default_alpha(int p) { return p <= 1 ? 1.5 : 0.6; }

LeapFrog::LeapFrog(const LagrangeSpace& space, SpMat M, SpMat K, SpMat B, double dt)
    : space_(&space), M_(std::move(M)), K_(std::move(K)), B_(std::move(B)), dt_(dt) {
  if (!(dt > 0.0)) throw std::runtime_error("LeapFrog: time step must be positive");
  SpMat S = M_ * (1.0 / (dt * dt)) + B_ * (1.0 / (2.0 * dt));
  apply_dirichlet(*space_, S);
  solver_ = std::make_unique<LinearSolver>(S);
}

LeapFrog::LeapFrog(const LagrangeSpace& space, const MaterialData& mat, double dt)
    : LeapFrog(space, assemble_mass(space, mat), assemble_stiffness(space, mat),
               assemble_boundary_mass(space, mat), dt) {}

void LeapFrog::step(TimeState& state, const Eigen::VectorXd& load) const {
  const double inv_dt2 = 1.0 / (dt_ * dt_);
  Eigen::VectorXd rhs = load - K_ * state.u_curr + (2.0 * inv_dt2) * (M_ * state.u_curr) -
                        inv_dt2 * (M_ * state.u_prev) + (0.5 / dt_) * (B_ * state.u_prev);
  zero_dirichlet(*space_, rhs);
  state.u_next = solver_->solve(rhs);

  // Blow-up guard: non-finite values, a single-step explosion relative to the
  // running peak, or sustained geometric growth (a factor 1e6 within the last
  // 20 steps on top of an O(1) floor) all abort the run.  Stable runs with
  // bounded loads keep mass norms bounded by the data, far from either bar.
  constexpr int kGrowthLag = 20;
  const double norm = mass_norm(state.u_next);
  bool grew = false;
  if (static_cast<int>(state.norm_hist.size()) >= kGrowthLag)
    grew = norm > 1e6 * (1.0 + state.norm_hist[state.norm_hist.size() - kGrowthLag]);
  if (!std::isfinite(norm) || norm > 1e6 * (1.0 + state.peak) || grew)
    throw std::runtime_error("leap-frog iterate blew up at step n = " + std::to_string(state.n) +
                             " (t = " + std::to_string(state.t()) + ")");
  state.peak = std::max(state.peak, norm);
  state.norm_hist.push_back(norm);
}

void LeapFrog::rotate(TimeState& state) const {
  state.u_prev.swap(state.u_curr);
  state.u_curr.swap(state.u_next);
  state.n += 1;
}

double LeapFrog::energy(const Eigen::VectorXd& u_new, const Eigen::VectorXd& u_old) const {
  const Eigen::VectorXd diff = (u_new - u_old) / dt_;
  return 0.5 * diff.dot(M_ * diff) + 0.5 * (K_ * u_new).dot(u_old);
}

double LeapFrog::mass_norm(const Eigen::VectorXd& v) const { return std::sqrt(v.dot(M_ * v)); }

TimeState LeapFrog::initial_state() const {
  TimeState state;
  state.n = 1;
  state.dt = dt_;
  state.u_prev = Eigen::VectorXd::Zero(space_->n_dofs);
  state.u_curr = Eigen::VectorXd::Zero(space_->n_dofs);
  state.u_next = Eigen::VectorXd::Zero(space_->n_dofs);
  return state;
}

TimeState LeapFrog::run(int n_solves, const LoadFn& load,
                        const std::vector<Observer>& observers) const {
  return run_from(initial_state(), n_solves, load, observers);
}

TimeState LeapFrog::run_from(TimeState state, int n_solves, const LoadFn& load,
                             const std::vector<Observer>& observers) const {
  Eigen::VectorXd load_vec(space_->n_dofs);
  for (int solve = 0; solve < n_solves; ++solve) {
    load_vec.setZero();
    if (load) load(state.n, state.t(), load_vec);
    step(state, load_vec);
    for (const auto& obs : observers) obs(state);
    rotate(state);
  }
  return state;
}

double estimate_dt_limit(const LagrangeSpace& space, const MaterialData& mat, int iters,
                         double tol) {
  SpMat M = assemble_mass(space, mat);
  SpMat K = assemble_stiffness(space, mat);
  apply_dirichlet(space, M);
  apply_dirichlet(space, K);
  LinearSolver mass_solver(M);

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v(space.n_dofs);
  for (int i = 0; i < space.n_dofs; ++i) v[i] = unif(rng);
  zero_dirichlet(space, v);
  v /= v.norm();

  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd w = mass_solver.solve(K * v);
    zero_dirichlet(space, w);
    const double lambda_new = v.dot(K * v) / v.dot(M * v);
    w /= w.norm();
    v.swap(w);
    if (it > 0 && std::abs(lambda_new - lambda) <= tol * std::abs(lambda_new)) {
      lambda = lambda_new;
      break;
    }
    lambda = lambda_new;
  }
  if (!(lambda > 0.0)) throw std::runtime_error("estimate_dt_limit: power iteration failed");
  return 2.0 / std::sqrt(lambda);
}

}  // namespace waveq
