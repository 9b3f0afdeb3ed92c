#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "waveq/driver.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  int threads_override = 0;
  unsigned long long seed = 0;  ///< accepted for tooling symmetry; runs are deterministic
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "experiment config file (key=value lines)")
      ->required();
  cmd->add_option("--out", args.out_override, "output directory (overrides config)");
  cmd->add_option("--threads", args.threads_override, "patch-solve threads (overrides config)");
  cmd->add_option("--seed", args.seed, "random seed (unused by deterministic runs)");
}

waveq::ExperimentConfig load_config(const CommonArgs& args) {
  waveq::ExperimentConfig cfg = waveq::parse_config_file(args.config_path);
  if (!args.out_override.empty()) cfg.out_dir = args.out_override;
  if (args.threads_override > 0) cfg.threads = args.threads_override;
  return cfg;
}

waveq::RunOptions run_options(const waveq::ExperimentConfig& cfg) {
  waveq::RunOptions opts;
  opts.threads = cfg.threads;
  opts.reference = cfg.reference;
  return opts;
}

double resolve_rho(const waveq::ExperimentConfig& cfg, const waveq::Scenario& sc) {
  if (!cfg.rho.empty()) return cfg.rho.front();
  if (!sc.rho_values.empty()) return sc.rho_values.front();
  return 1.0;
}

void print_summary(const waveq::RunResult& res) {
  for (size_t i = 0; i < res.rho.size(); ++i) {
    std::printf("rho=%-6g lambda=%.6e err=%.6e eff=%.4f  (dofs=%d h_max=%.4g dt=%.4g steps=%d)\n",
                res.rho[i], res.lambda[i], res.error[i],
                waveq::effectivity(res.lambda[i], res.error[i]), res.n_dofs, res.h_max, res.dt,
                res.steps);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scalar wave runs with equilibrated-flux error estimation"};
  app.require_subcommand(1);

  CommonArgs run_args, conv_args, sweep_args;
  CLI::App* run_cmd =
      app.add_subcommand("run", "single run: instantaneous/cumulative traces and a summary");
  attach_common(run_cmd, run_args);
  CLI::App* conv_cmd =
      app.add_subcommand("converge", "mesh-refinement sweep: convergence table with decay rates");
  attach_common(conv_cmd, conv_args);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep-rho", "one run reported across all damping weights");
  attach_common(sweep_cmd, sweep_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const waveq::ExperimentConfig cfg = load_config(run_args);
      const waveq::Scenario sc = waveq::make_scenario(cfg);
      waveq::RunOptions opts = run_options(cfg);
      if (!cfg.vtk_times.empty()) {
        opts.vtk_times = cfg.vtk_times;
        opts.vtk_dir = cfg.out_dir;
      }
      const waveq::RunResult res =
          waveq::run_single(sc, cfg.levels.front(), cfg.p, cfg.alpha, cfg.T, cfg.rho, opts);
      waveq::write_run_outputs(cfg, res);
      print_summary(res);
    } else if (conv_cmd->parsed()) {
      const waveq::ExperimentConfig cfg = load_config(conv_args);
      if (cfg.levels.size() < 3)
        throw std::runtime_error("converge: need at least 3 mesh levels");
      const waveq::Scenario sc = waveq::make_scenario(cfg);
      const double rho = resolve_rho(cfg, sc);
      const waveq::ConvergenceResult res =
          waveq::run_convergence(sc, cfg.levels, cfg.p, cfg.alpha, cfg.T, rho, run_options(cfg));
      waveq::write_convergence_output(cfg, res);
      for (const waveq::ConvergenceRow& row : res.rows)
        std::printf("n=%-4d dofs=%-7d est=%.6e err=%.6e eff=%.4f eoc_est=%.3f eoc_err=%.3f\n",
                    row.n, row.n_dofs, row.lambda, row.error, row.eff, row.eoc_est, row.eoc_err);
    } else if (sweep_cmd->parsed()) {
      waveq::ExperimentConfig cfg = load_config(sweep_args);
      cfg.emit_inst = false;  // the sweep reports per-rho accumulations only
      const waveq::Scenario sc = waveq::make_scenario(cfg);
      const waveq::RunResult res =
          waveq::run_single(sc, cfg.levels.front(), cfg.p, cfg.alpha, cfg.T, cfg.rho,
                            run_options(cfg));
      waveq::write_run_outputs(cfg, res);
      print_summary(res);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
