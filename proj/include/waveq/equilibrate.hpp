#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "waveq/assembly.hpp"
#include "waveq/lagrange.hpp"
#include "waveq/mesh.hpp"
#include "waveq/raviart_thomas.hpp"

namespace waveq {

/// Step residuals of the three-level window at time t_n, reduced to moments
/// against elementwise L²-orthonormal polynomial bases.  For the hat function
/// ψ_a of each element vertex, the volume residual is
///   d^a = ψ_a μ (Π_p f − D²u_h) − A∇ψ_a·∇u_h   ∈ P_{p+1}(K),
/// and on each absorbing face with endpoint a the boundary residual is
///   b^a = ψ_a γ (Du_h − g)                      projected onto P_{p+1}(F).
struct StepResidual {
  /// column 3*K + v: moments of d^a over element K for its local vertex v.
  Eigen::MatrixXd d_moments;
  /// column 2*slot + j: moments (vs shifted Legendre) of b^a on absorbing
  /// face `slot` for its endpoint j ∈ {v0, v1}.
  Eigen::MatrixXd b_moments;
  /// column K: coefficients of Π_p f on element K in the orthonormal basis.
  Eigen::MatrixXd f_coeffs;
};

/// One vertex contribution σ^a: coefficients over the global flux dofs
/// supported on the patch (free values from the saddle-point solve,
/// prescribed normal-trace values substituted directly).
struct PatchFlux {
  int vertex = -1;
  std::vector<int> dofs;
  Eigen::VectorXd values;
  double kkt_residual = 0.0;  ///< ℓ² residual of the saddle system after refinement
  double kkt_scale = 0.0;     ///< ℓ² norm of its right-hand side
};

struct EtaResult {
  Eigen::VectorXd per_element;
  double total = 0.0;  ///< sqrt(Σ_K η_K²)
};

struct DefectReport {
  double max_defect = 0.0;  ///< worst element/face L² defect
  double scale = 0.0;       ///< global L² norm of the target data
};

/// Per-step equilibrated flux reconstruction in RT_{p+1} by vertex-patch
/// minimization: σ^a minimizes ‖A^{-1}τ + ψ_a∇u_h‖_{A,ω_a} subject to
/// div τ = d^a elementwise and prescribed normal traces (zero across the
/// patch rim, b^a on absorbing faces; Dirichlet faces of Dirichlet-vertex
/// patches stay free).  All patch systems are factorized once at setup;
/// per-step work is moment evaluation plus triangular solves.
class Equilibrator {
 public:
  Equilibrator(const LagrangeSpace& space, const MaterialData& mat);

  int flux_degree() const { return q_; }          ///< p + 1
  int n_flux_dofs() const { return n_flux_dofs_; }
  int n_scalar_moments() const { return nq_; }    ///< dim P_{p+1} per element
  const std::vector<Patch>& patches() const { return patches_; }
  const std::vector<int>& absorbing_faces() const { return abs_faces_; }
  const LagrangeSpace& space() const { return *space_; }

  /// f and g are the data at the step's time t_n.
  StepResidual residual_data(const Eigen::VectorXd& u_curr, const Eigen::VectorXd& d2u,
                             const Eigen::VectorXd& du,
                             const std::function<double(const Vec2&)>& f,
                             const std::function<double(const Vec2&)>& g) const;

  struct Compatibility {
    double defect = 0.0;  ///< |(d^a,1)_{ω_a} − (b^a,1)_{Γ_A}|
    double scale = 0.0;   ///< ‖d^a‖_{L¹} + ‖b^a‖_{L¹}
  };
  Compatibility compatibility(int vertex, const StepResidual& res) const;

  PatchFlux solve_patch(int vertex, const StepResidual& res, const Eigen::VectorXd& u_curr) const;

  /// σ_h = Σ_a σ^a with a deterministic (vertex-ordered) reduction; patch
  /// solves may run on n_threads without changing the result bytes.
  Eigen::VectorXd assemble_flux(const StepResidual& res, const Eigen::VectorXd& u_curr,
                                int n_threads = 1) const;

  /// η_K = ‖A^{-1}σ_h + ∇u_h‖_{A,K}.
  EtaResult eta_elements(const Eigen::VectorXd& flux, const Eigen::VectorXd& u_curr,
                         int n_threads = 1) const;

  /// max_K ‖div σ_h − μ(Π_p f − D²u_h)‖_K against ‖μ(Π_p f − D²u_h)‖_Ω.
  DefectReport divergence_defect(const Eigen::VectorXd& flux, const StepResidual& res) const;

  /// max_F ‖σ_h·n − γ(Du_h − g)‖_F over absorbing faces (projected sense)
  /// against ‖γ(Du_h − g)‖_{Γ_A}.
  DefectReport trace_defect(const Eigen::VectorXd& flux, const StepResidual& res) const;

  /// Moments of div σ restricted to one element (orthonormal basis) — the
  /// elementwise divergence a test can compare against d-moments.
  Eigen::VectorXd element_div_moments(int element, const Eigen::VectorXd& flux) const;

  /// A^{-1}-weighted Gram matrix of the element's flux basis.
  const Eigen::MatrixXd& element_gram(int element) const;

  const std::vector<int>& element_flux_dofs(int element) const;

 private:
  struct ElementCache {
    ElementGeometry geom;
    Eigen::Matrix2d Ainv;
    double mu = 0.0;
    std::vector<int> rt_dofs;
    Eigen::MatrixXd qA;            // orthonormal scalar basis at volume rule A
    std::vector<double> wA;        // rule-A weights * det
    std::vector<Vec2> xA;          // physical rule-A points
    Eigen::MatrixXd qB;            // basis at rule B
    Eigen::MatrixXd rtBx, rtBy;    // flux basis components at rule B
    Eigen::MatrixXd gradBx, gradBy;  // physical Lagrange gradients at rule B
    std::vector<double> wB;
    Eigen::MatrixXd G;     // (A^{-1}φ_j, φ_i)_K
    Eigen::MatrixXd Bdiv;  // (div φ_j, q_i)_K
    std::array<Eigen::MatrixXd, 3> E;  // (φ_i, ψ_v ∇L_j)_K
    std::array<Eigen::MatrixXd, 3> Mq;  // (ψ_v μ L_j, q_i)_K
    std::array<Eigen::MatrixXd, 3> Fq;  // (ψ_v μ q_m, q_i)_K
    std::array<Eigen::MatrixXd, 3> Gq;  // ((A∇ψ_v)·∇L_j, q_i)_K
  };

  struct FaceCache {
    int face = -1, element = -1, local_edge = -1;
    double len = 0.0, gamma = 0.0, orient = 1.0;  // orient: dof normal vs outward
    std::vector<double> s, w;                     // rule-F points and weights
    std::vector<Vec2> x;
    Eigen::MatrixXd leg;  // shifted Legendre values, (q+1) x n_points
    Eigen::MatrixXd lag;  // adjacent-element Lagrange values at the points
  };

  struct PatchSystem {
    std::vector<int> local_vertex;             // patch vertex's local id per element
    std::vector<int> patch_dofs;               // global flux dof per patch-local dof
    std::vector<std::vector<int>> elem_local;  // element rt dof -> patch-local dof
    std::vector<int> free_idx, pres_idx;
    std::vector<int> pres_col;                 // b_moments column, -1 for zero trace
    std::vector<int> pres_l;                   // Legendre index of the prescribed dof
    std::vector<double> pres_orient;
    bool drop_row = false;
    Eigen::VectorXd row_scale;  // per kept constraint row
    Eigen::MatrixXd G_ff, G_fp;
    Eigen::MatrixXd Cs;   // scaled kept divergence rows, free columns
    Eigen::MatrixXd Bp;   // kept divergence rows, prescribed columns (unscaled)
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  };

  void build_element_cache(int element, const LagrangeTable& tabA, const LagrangeTable& tabB,
                           const QuadratureRule& ruleA, const QuadratureRule& ruleB);
  void build_patch_system(int vertex);
  Eigen::VectorXd patch_rhs_values(const PatchSystem& ps, const StepResidual& res) const;

  const LagrangeSpace* space_;
  const MaterialData* mat_;
  const Mesh* mesh_;
  int p_ = 1, q_ = 2;
  int nq_ = 0, np_ = 0, nrt_ = 0, nloc_ = 0;
  int n_flux_dofs_ = 0;
  std::vector<Patch> patches_;
  std::vector<int> abs_faces_;
  std::vector<int> abs_slot_;  // face id -> slot, -1 otherwise
  std::vector<ElementCache> cache_;
  std::vector<FaceCache> fcache_;
  std::vector<PatchSystem> systems_;
};

}  // namespace waveq
