#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "waveq/assembly.hpp"
#include "waveq/lagrange.hpp"

namespace waveq {

/// Slowest wave-speed bound on one element: min(sqrt(a_min/mu), a_min/gamma),
/// where the second term is only considered when the element has an absorbing
/// face (gamma taken as the largest value over those faces).
double wave_speed(const Mesh& mesh, const MaterialData& mat, int element);

struct CflParams {
  double alpha = 1.5;
  double dt = 0.0;
  int argmin_element = -1;  ///< element realizing min rho_K / theta_K
};

/// Time step dt = alpha * min_K rho_K / theta_K.
CflParams cfl_dt(const Mesh& mesh, const MaterialData& mat, double alpha);

/// Recommended CFL factor per polynomial degree.
double default_alpha(int p);

/// Rolling three-level window of the discrete solution.  After step(),
/// u_next = u^{n+1} while u_curr = u^n sits at time t() = n*dt, so central
/// time differences at t_n read off the window directly; rotate() advances n.
struct TimeState {
  int n = 1;
  double dt = 0.0;
  Eigen::VectorXd u_prev, u_curr, u_next;
  double peak = 0.0;               ///< largest mass norm seen so far, feeds the blow-up guard
  std::vector<double> norm_hist;   ///< per-step mass norms; sustained-growth detector input

  double t() const { return n * dt; }
  double t_prev() const { return (n - 1) * dt; }
  double t_next() const { return (n + 1) * dt; }
};

/// Second-order leap-frog integrator for M u'' + B u' + K u = F with the
/// damping term treated by centered differences:
///   (M/dt^2 + B/(2dt)) u^{n+1} = F(t_n) - K u^n + (2/dt^2) M u^n
///                                  - (M/dt^2 - B/(2dt)) u^{n-1}.
/// The stored matrices are kept raw; Dirichlet rows are eliminated only from
/// the factorized system matrix, and right-hand sides are zeroed on
/// constrained entries so those solution values stay exactly zero.
class LeapFrog {
 public:
  LeapFrog(const LagrangeSpace& space, SpMat M, SpMat K, SpMat B, double dt);
  LeapFrog(const LagrangeSpace& space, const MaterialData& mat, double dt);

  /// One solve: fills state.u_next from (u_prev, u_curr) and the assembled
  /// load F(t_n).  Throws when the iterate blows up or turns non-finite.
  void step(TimeState& state, const Eigen::VectorXd& load) const;

  /// Shift the window: u_prev <- u_curr <- u_next, n <- n + 1.
  void rotate(TimeState& state) const;

  /// Discrete energy 0.5 |(u_new - u_old)/dt|_M^2 + 0.5 (K u_new, u_old),
  /// conserved exactly by the scheme when B = 0 and F = 0.
  double energy(const Eigen::VectorXd& u_new, const Eigen::VectorXd& u_old) const;

  double mass_norm(const Eigen::VectorXd& v) const;

  TimeState initial_state() const;

  /// Assembles F(t_n) into a zeroed vector before each solve.
  using LoadFn = std::function<void(int n, double t, Eigen::VectorXd& load)>;
  /// Invoked right after each solve, before rotation.
  using Observer = std::function<void(const TimeState&)>;

  /// Run n_solves steps from rest (u^0 = u^1 = 0).
  TimeState run(int n_solves, const LoadFn& load, const std::vector<Observer>& observers = {}) const;

  /// Continue n_solves steps from an arbitrary window.
  TimeState run_from(TimeState state, int n_solves, const LoadFn& load,
                     const std::vector<Observer>& observers = {}) const;

  const SpMat& mass() const { return M_; }
  const SpMat& stiffness() const { return K_; }
  const SpMat& boundary_mass() const { return B_; }
  double dt() const { return dt_; }
  const LagrangeSpace& space() const { return *space_; }

 private:
  const LagrangeSpace* space_;
  SpMat M_, K_, B_;
  double dt_;
  std::unique_ptr<LinearSolver> solver_;
};

/// Largest stable time step 2/sqrt(lambda_max(M^{-1}K)) on the unconstrained
/// dofs, estimated by power iteration with a fixed-seed start vector.
double estimate_dt_limit(const LagrangeSpace& space, const MaterialData& mat, int iters = 3000,
                         double tol = 1e-12);

}  // namespace waveq
