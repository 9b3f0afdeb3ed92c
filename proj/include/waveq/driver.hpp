#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "waveq/equilibrate.hpp"
#include "waveq/estimator.hpp"
#include "waveq/scenarios.hpp"
#include "waveq/wavesolver.hpp"

namespace waveq {

/// One experiment: scenario selection, discretization parameters, damping
/// weights, and output switches.  Parsed from a flat key=value file; zero /
/// empty values fall back to the scenario or degree defaults at run time.
struct ExperimentConfig {
  std::string scenario = "standing";
  double sigma = 0.5;              ///< pulse width (reflection / obstacle)
  int p = 1;
  double alpha = 0.0;              ///< CFL factor; 0 → default_alpha(p)
  std::vector<int> levels = {8};   ///< mesh subdivisions, strictly increasing
  double T = 0.0;                  ///< horizon; 0 → scenario value
  std::vector<double> rho;         ///< damping weights; empty → scenario list
  std::string out_dir = ".";
  bool emit_inst = true;
  bool emit_cumu = true;
  bool reference = false;          ///< measure against a discrete reference run
  std::vector<double> vtk_times;   ///< snapshot times (first step at or past each)
  int threads = 1;
};

/// Parse the flat key=value format ('#' comments, optional [section] headers,
/// lists comma- or space-separated).  Unknown keys raise std::runtime_error.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// Instantiate the scenario named by the config ("standing", "reflection",
/// "obstacle"), applying sigma where the scenario takes it.
Scenario make_scenario(const ExperimentConfig& config);

/// Worst relative feasibility defects of the reconstructed flux over a whole
/// run; each value is max over steps of defect / (scale + 1e-14).
struct DefectStats {
  double divergence = 0.0;     ///< element divergence misfit vs. global residual norm
  double trace = 0.0;          ///< absorbing-face normal-trace misfit
  double compatibility = 0.0;  ///< patch solvability defect (non-Dirichlet patches)
};

struct RunOptions {
  bool with_error = true;      ///< evaluate the error when exact/reference data exist
  bool reference = false;      ///< obstacle-style same-mesh reference (degree 2, dt/3)
  bool track_defects = false;  ///< accumulate DefectStats (adds per-step work)
  std::vector<double> vtk_times;
  std::string vtk_dir;         ///< empty: no snapshots
  int threads = 1;
};

struct RunResult {
  explicit RunResult(EstimatorTrace tr) : trace(std::move(tr)) {}

  int n = 0;  ///< mesh level
  int n_dofs = 0;
  double h_max = 0.0;
  double dt = 0.0;
  double alpha = 0.0;
  int steps = 0;
  bool has_error = false;
  std::vector<double> rho;
  std::vector<double> lambda;  ///< final estimator accumulations, one per rho
  std::vector<double> error;   ///< final error norms (zero when unavailable)
  DefectStats defects;
  EstimatorTrace trace;
};

/// Full leap-frog run with per-step flux equilibration: assembles loads from
/// the scenario data, reconstructs the flux and records eta after every
/// solve, and measures the damped error against the exact solution (or the
/// reference run) when available.  alpha == 0 picks the degree default;
/// T == 0 and an empty rho list pick the scenario values.
RunResult run_single(const Scenario& scenario, int n, int p, double alpha, double T,
                     std::vector<double> rho, const RunOptions& options = {});

struct ConvergenceRow {
  int n = 0;
  int n_dofs = 0;
  double h_max = 0.0;
  double dt = 0.0;
  double lambda = 0.0;
  double error = 0.0;
  double eff = 0.0;
  double eoc_est = 0.0;  ///< NaN on the coarsest level
  double eoc_err = 0.0;
};

struct ConvergenceResult {
  double rho = 0.0;
  std::vector<ConvergenceRow> rows;
};

/// Runs every level and tabulates estimator/error decay rates against
/// sqrt(n_dofs) (which scales like 1/h on these meshes).
ConvergenceResult run_convergence(const Scenario& scenario, const std::vector<int>& levels,
                                  int p, double alpha, double T, double rho,
                                  const RunOptions& options = {});

/// Shortest round-trip decimal form of v ("%.17g").
std::string format_full(double v);

/// Write rows as tab-separated text with a header line, atomically
/// (temp file + rename).  Values use format_full.
void write_tsv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Legacy ASCII VTK unstructured-grid snapshot with per-cell "eta" and
/// per-point "u" scalars.
void emit_vtk(const Mesh& mesh, const Eigen::VectorXd& eta_per_element,
              const Eigen::VectorXd& u_vertices, const std::string& path);

/// inst.tsv / cumu_<rho>.tsv / summary.tsv under config.out_dir.
void write_run_outputs(const ExperimentConfig& config, const RunResult& result);

/// conv.tsv under config.out_dir.
void write_convergence_output(const ExperimentConfig& config, const ConvergenceResult& result);

}  // namespace waveq
