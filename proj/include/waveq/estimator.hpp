#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "waveq/assembly.hpp"
#include "waveq/lagrange.hpp"
#include "waveq/mesh.hpp"

namespace waveq {

/// In-order trapezoidal accumulator of the damped integral
/// ∫ v(t) e^{-2ρt} dt.  The first sample only opens the interval; out-of-order
/// samples are rejected.
class DampedAccumulator {
 public:
  explicit DampedAccumulator(double rho);

  void add(double t, double value);
  double integral() const { return integral_; }
  double rho() const { return rho_; }
  bool empty() const { return !have_; }
  double last_time() const;

 private:
  double rho_;
  double integral_ = 0.0;
  double last_t_ = 0.0;
  double last_damped_ = 0.0;
  bool have_ = false;
};

/// Squared pieces of the instantaneous error at one time:
///   ‖ξ̇‖²_μ   +  (1/ρ)‖ξ̇‖²_{γ,Γ_A}  +  ‖∇ξ‖²_A
/// with ξ = u − u_h and the discrete velocity D_δt u_h^n standing in for u̇_h.
struct ErrorParts {
  double vel2 = 0.0;   ///< ‖ξ̇‖²_{μ,Ω}
  double bnd2 = 0.0;   ///< ‖ξ̇‖²_{γ,Γ_A} (unweighted; combined() applies 1/ρ)
  double grad2 = 0.0;  ///< ‖∇ξ‖²_{A,Ω}

  double combined(double rho) const { return vel2 + bnd2 / rho + grad2; }
};

/// Per-run evaluator of error norms against an exact solution or a same-mesh
/// finite element reference, plus the damped data norms used by the
/// oscillation terms.  Quadrature degree 2p+4 in the volume and on faces.
class ErrorEvaluator {
 public:
  ErrorEvaluator(const LagrangeSpace& space, const MaterialData& mat);

  /// Error against analytic velocity and gradient at a fixed time.
  ErrorParts exact_error(const Eigen::VectorXd& u, const Eigen::VectorXd& du,
                         const std::function<double(const Vec2&)>& ut,
                         const std::function<Vec2(const Vec2&)>& grad_u) const;

  /// Error against a reference solution on the same mesh (typically higher
  /// degree and a finer time step, sampled at matching times).
  ErrorParts fe_error(const Eigen::VectorXd& u, const Eigen::VectorXd& du,
                      const LagrangeSpace& ref_space, const Eigen::VectorXd& ref_u,
                      const Eigen::VectorXd& ref_du) const;

  double volume_norm2(const std::function<double(const Vec2&)>& f) const;    ///< ∫ μ f²
  double boundary_norm2(const std::function<double(const Vec2&)>& g) const;  ///< ∫_{Γ_A} γ g²

  const LagrangeSpace& space() const { return *space_; }

 private:
  struct FaceData {
    int face = -1, element = -1, local_edge = -1;
    double len = 0.0, gamma = 0.0;
    std::vector<double> s, w;
    std::vector<Vec2> x;
    Eigen::MatrixXd lag;  // adjacent-element basis values at the edge points
  };

  const LagrangeSpace* space_;
  const MaterialData* mat_;
  const Mesh* mesh_;
  std::vector<double> wq_;        // volume weights (per element x point)
  std::vector<Vec2> xq_;          // physical volume points
  Eigen::MatrixXd val_, gx_, gy_; // basis values/physical gradients, element-major
  int nq_ = 0;
  std::vector<Vec2> ref_points_;  // volume rule in reference coordinates
  std::vector<double> edge_s_;
  std::vector<FaceData> faces_;
};

/// Per-step series of the estimator and (optionally) the error, with the
/// damped running integrals Λ_ρ²(t) and C_ρ²(t) for each requested ρ.
class EstimatorTrace {
 public:
  explicit EstimatorTrace(std::vector<double> rho_values);

  void record(double t, double eta, const std::optional<ErrorParts>& error = std::nullopt);

  struct Row {
    double t = 0.0;
    double eta = 0.0;
    std::optional<ErrorParts> error;
    std::vector<double> lambda2;  ///< Λ_ρ²(t) per ρ
    std::vector<double> cumu2;    ///< C_ρ²(t) per ρ
  };

  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<double>& rho_values() const { return rho_; }

  double lambda(int rho_idx) const;      ///< Λ_ρ at the last recorded step
  double error_norm(int rho_idx) const;  ///< C_ρ at the last recorded step
  double effectivity(int rho_idx) const; ///< Λ_ρ / C_ρ; NaN when the error is zero

  /// (Λ(T) − Λ(t_tail)) / Λ(T) with t_tail at the given fraction from the
  /// end -- the stagnation measure used to justify finite simulation times.
  double tail_increase(int rho_idx, double tail_fraction = 0.1) const;

 private:
  std::vector<double> rho_;
  std::vector<DampedAccumulator> lambda_acc_, error_acc_;
  std::vector<Row> rows_;
};

double effectivity(double lambda, double error_norm);

/// Bounds on the approximation factor and the matching reliability
/// prefactors 1 + 4γ².
struct ApproximationBounds {
  double guaranteed = 0.0;  ///< √(1 + ω/ρ), always valid
  double guaranteed_prefactor = 0.0;
  std::optional<double> convex;  ///< 2 C_i (ρh/θ + (ω/ρ)(ωh/θ)), convex all-Dirichlet case
  std::optional<double> convex_prefactor;
};

struct ConvexCaseInputs {
  double C_i = 1.0;  ///< interpolation constant (user-supplied; no numeric claim)
  double h_max = 0.0;
  double theta_min = 0.0;
};

ApproximationBounds approximation_factor_bound(
    double rho, double omega, const std::optional<ConvexCaseInputs>& convex = std::nullopt);

/// osc_{ρ,r} from sampled data norms: the inputs are ‖f^{(r)}(t_i)‖²_{μ,Ω}
/// and ‖g^{(r)}(t_i)‖²_{γ,Γ_A} on an increasing time grid; the damped time
/// integrals use the same trapezoidal rule as the accumulators, and
///   osc² = (4/ρ^{2r}) [ (1/ρ²) I_f + I_g ].
double oscillation(double rho, int r, const std::vector<double>& t,
                   const std::vector<double>& f_norm2, const std::vector<double>& g_norm2);

/// Patch-wise coefficient contrast and resolution scales entering the
/// efficiency and approximation-factor statements.
struct ContrastReport {
  double kappa_A = 1.0;               ///< max_a κ_{A,a}
  std::vector<double> kappa_a;        ///< sup a_max / inf a_min per vertex patch
  std::vector<double> h_a;            ///< patch diameters
  std::vector<double> theta_a;        ///< patch minimum wave speeds
  double h_star_over_theta_star = 0.0;
};

ContrastReport contrast_and_patch_scales(const Mesh& mesh, const MaterialData& mat);

}  // namespace waveq
