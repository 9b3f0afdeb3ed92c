#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/IterativeLinearSolvers>

#include "waveq/lagrange.hpp"
#include "waveq/mesh.hpp"

namespace waveq {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Piecewise-constant coefficients of the wave problem, sampled per element
/// (density mu, diffusion tensor A with its spectral bounds) and per face
/// (impedance gamma, nonzero only on absorbing faces).
struct MaterialData {
  std::vector<double> mu;           ///< per element
  std::vector<Eigen::Matrix2d> A;   ///< per element, symmetric positive definite
  std::vector<double> a_min;        ///< smallest eigenvalue of A per element
  std::vector<double> a_max;        ///< largest eigenvalue of A per element
  std::vector<double> gamma;        ///< per face; 0 away from the absorbing boundary
};

MaterialData build_material(const Mesh& mesh,
                            const std::function<double(int region, const Vec2&)>& mu,
                            const std::function<Eigen::Matrix2d(int region, const Vec2&)>& A,
                            const std::function<double(const Vec2&)>& gamma);

/// Raw (un-eliminated) Galerkin matrices.  Volume terms use a fixed triangle
/// rule of degree 2p+2, boundary terms a fixed edge rule of degree 2p+4; the
/// residual and flux computations rely on reusing exactly these rules.
SpMat assemble_mass(const LagrangeSpace& space, const MaterialData& mat);
SpMat assemble_stiffness(const LagrangeSpace& space, const MaterialData& mat);
SpMat assemble_boundary_mass(const LagrangeSpace& space, const MaterialData& mat);

/// Quadrature degrees shared across the volume/boundary assembly and the
/// flux-reconstruction pipeline.
int volume_rule_degree(int p);
int boundary_rule_degree(int p);

/// Symmetric elimination of Dirichlet rows/columns: constrained rows and
/// columns are zeroed and the diagonal set to one.  Valid for homogeneous
/// conditions together with zeroing the constrained right-hand side entries.
void apply_dirichlet(const LagrangeSpace& space, SpMat& mat);
void zero_dirichlet(const LagrangeSpace& space, Eigen::VectorXd& vec);

/// Repeated right-hand-side assembly with precomputed geometry and basis
/// tables.  Both calls accumulate into `out`.
class LoadAssembler {
 public:
  LoadAssembler(const LagrangeSpace& space, const MaterialData& mat);

  /// out += (mu f, v) over all elements.
  void volume(const std::function<double(const Vec2&)>& f, Eigen::VectorXd& out) const;
  /// out += (gamma g, v) over all absorbing faces.
  void boundary(const std::function<double(const Vec2&)>& g, Eigen::VectorXd& out) const;

 private:
  const LagrangeSpace* space_;
  struct VolumePoint {
    Vec2 x;
    double weight;  // quadrature weight * det * mu
  };
  std::vector<VolumePoint> vol_points_;       // element-major
  int vol_points_per_element_ = 0;
  Eigen::MatrixXd vol_basis_;                 // dofs_per_element x points_per_element

  struct FaceData {
    std::array<int, 6> dofs{};
    std::vector<Vec2> x;
    std::vector<double> weight;               // quadrature weight * len * gamma
    Eigen::MatrixXd basis;                    // dofs_per_element x n_points
  };
  std::vector<FaceData> faces_;
};

/// Sparse symmetric positive definite solve: Cholesky when the factorization
/// succeeds, otherwise Jacobi-preconditioned conjugate gradients.
class LinearSolver {
 public:
  explicit LinearSolver(const SpMat& mat);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  bool direct() const { return direct_; }

 private:
  Eigen::SparseMatrix<double> mat_;  // column-major copy owned by the factorization
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg_;
  bool direct_ = true;
};

}  // namespace waveq
