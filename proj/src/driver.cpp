#include "waveq/driver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace waveq {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  for (char c : value) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

double parse_double(const std::string& value, const std::string& key) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' expects a number, got '" + value + "'");
  }
  if (pos != value.size())
    throw std::runtime_error("config: key '" + key + "' expects a number, got '" + value + "'");
  return v;
}

int parse_int(const std::string& value, const std::string& key) {
  const double v = parse_double(value, key);
  const int i = static_cast<int>(std::llround(v));
  if (v != static_cast<double>(i))
    throw std::runtime_error("config: key '" + key + "' expects an integer, got '" + value + "'");
  return i;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw std::runtime_error("config: key '" + key + "' expects a boolean, got '" + value + "'");
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.scenario != "standing" && cfg.scenario != "reflection" && cfg.scenario != "obstacle")
    throw std::runtime_error("config: unknown scenario '" + cfg.scenario + "'");
  if (cfg.p != 1 && cfg.p != 2) throw std::runtime_error("config: p must be 1 or 2");
  if (!(cfg.sigma > 0.0)) throw std::runtime_error("config: sigma must be positive");
  if (cfg.alpha < 0.0) throw std::runtime_error("config: alpha must be non-negative");
  if (cfg.T < 0.0) throw std::runtime_error("config: T must be non-negative");
  if (cfg.levels.empty()) throw std::runtime_error("config: needs at least one mesh level");
  for (size_t i = 0; i < cfg.levels.size(); ++i) {
    if (cfg.levels[i] < 1) throw std::runtime_error("config: mesh levels must be positive");
    if (i > 0 && cfg.levels[i] <= cfg.levels[i - 1])
      throw std::runtime_error("config: mesh levels must be strictly increasing");
  }
  for (double r : cfg.rho)
    if (!(r > 0.0)) throw std::runtime_error("config: rho values must be positive");
  if (cfg.threads < 1) throw std::runtime_error("config: threads must be at least 1");
}

/// Cross-platform-safe atomic replace: write next to the target, then rename.
void commit_file(const std::string& tmp, const std::string& path) {
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("io: cannot move temporary output onto " + path);
  }
}

double eoc_between(double coarse, double fine, int n_coarse, int n_fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log(coarse / fine) /
         std::log(std::sqrt(static_cast<double>(n_fine) / static_cast<double>(n_coarse)));
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') continue;  // cosmetic section header
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not a key=value pair");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " has an empty key or value");

    if (key == "scenario") {
      cfg.scenario = value;
    } else if (key == "sigma") {
      cfg.sigma = parse_double(value, key);
    } else if (key == "p") {
      cfg.p = parse_int(value, key);
    } else if (key == "alpha") {
      cfg.alpha = parse_double(value, key);
    } else if (key == "levels") {
      cfg.levels.clear();
      for (const std::string& s : split_list(value)) cfg.levels.push_back(parse_int(s, key));
    } else if (key == "T") {
      cfg.T = parse_double(value, key);
    } else if (key == "rho") {
      cfg.rho.clear();
      for (const std::string& s : split_list(value)) cfg.rho.push_back(parse_double(s, key));
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "emit_inst") {
      cfg.emit_inst = parse_bool(value, key);
    } else if (key == "emit_cumu") {
      cfg.emit_cumu = parse_bool(value, key);
    } else if (key == "reference") {
      cfg.reference = parse_bool(value, key);
    } else if (key == "vtk_times") {
      cfg.vtk_times.clear();
      for (const std::string& s : split_list(value)) cfg.vtk_times.push_back(parse_double(s, key));
    } else if (key == "threads") {
      cfg.threads = parse_int(value, key);
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

Scenario make_scenario(const ExperimentConfig& config) {
  if (config.scenario == "standing") return standing_wave();
  if (config.scenario == "reflection") return reflection(config.sigma);
  if (config.scenario == "obstacle") return obstacle(config.sigma);
  throw std::runtime_error("config: unknown scenario '" + config.scenario + "'");
}

RunResult run_single(const Scenario& scenario, int n, int p, double alpha, double T,
                     std::vector<double> rho, const RunOptions& options) {
  if (p != 1 && p != 2) throw std::runtime_error("run: p must be 1 or 2");
  if (alpha == 0.0) alpha = default_alpha(p);
  if (T == 0.0) T = scenario.T;
  if (rho.empty()) rho = scenario.rho_values;
  if (rho.empty()) rho = {1.0};

  const Mesh mesh = build_scenario_mesh(scenario, n);
  const MaterialData mat = scenario_material(scenario, mesh);
  const LagrangeSpace space = build_lagrange_space(mesh, p);
  const CflParams cfl = cfl_dt(mesh, mat, alpha);
  const double dt = cfl.dt;
  // The power-iteration estimate only ever overshoots the spectral limit, so a
  // dt flagged here is certainly unstable; short runs may finish before the
  // growth detector can tell, hence the up-front warning.
  const double dt_limit = estimate_dt_limit(space, mat, 300, 1e-6);
  if (dt > dt_limit)
    std::fprintf(stderr,
                 "warning: dt = %.4g exceeds the estimated leap-frog stability limit %.4g "
                 "(alpha <= %.3g is stable on this mesh); expect blow-up\n",
                 dt, dt_limit, alpha * dt_limit / dt);
  const int n_steps = std::max(1, static_cast<int>(std::ceil(T / dt - 1e-9)));

  const LeapFrog solver(space, mat, dt);
  const Equilibrator eq(space, mat);
  const LoadAssembler loads(space, mat);

  const auto f_at = [&scenario](double t) {
    return [&scenario, t](const Vec2& x) { return scenario.f ? scenario.f(0, t, x) : 0.0; };
  };
  const auto g_at = [&scenario](double t) {
    return [&scenario, t](const Vec2& x) { return scenario.g ? scenario.g(0, t, x) : 0.0; };
  };

  RunResult result{EstimatorTrace(rho)};
  result.n = n;
  result.n_dofs = space.n_dofs;
  result.dt = dt;
  result.alpha = alpha;
  result.steps = n_steps;
  result.rho = rho;
  for (int k = 0; k < mesh.n_elements(); ++k)
    result.h_max = std::max(result.h_max, element_geometry(mesh, k).h);

  const bool use_exact = options.with_error && scenario.has_exact;
  const bool use_reference = options.with_error && !scenario.has_exact && options.reference;
  result.has_error = use_exact || use_reference;

  std::unique_ptr<ErrorEvaluator> eval;
  if (result.has_error) eval = std::make_unique<ErrorEvaluator>(space, mat);

  // Same-mesh reference discretization marched in lockstep at a third of the
  // step, one substep ahead so central differences at t_n are available.
  std::unique_ptr<LagrangeSpace> ref_space;
  std::unique_ptr<LeapFrog> ref_solver;
  std::unique_ptr<LoadAssembler> ref_loads;
  TimeState ref_state;
  if (use_reference) {
    ref_space = std::make_unique<LagrangeSpace>(build_lagrange_space(mesh, 2));
    ref_solver = std::make_unique<LeapFrog>(*ref_space, mat, dt / 3.0);
    ref_loads = std::make_unique<LoadAssembler>(*ref_space, mat);
    ref_state = ref_solver->initial_state();
  }

  std::vector<double> vtk_times = options.vtk_times;
  std::sort(vtk_times.begin(), vtk_times.end());
  size_t vtk_next = 0;
  int vtk_count = 0;

  Eigen::VectorXd ref_load(use_reference ? ref_space->n_dofs : 0);

  const LeapFrog::LoadFn load_fn = [&](int, double t, Eigen::VectorXd& out) {
    loads.volume(f_at(t), out);
    if (scenario.g) loads.boundary(g_at(t), out);
  };

  const LeapFrog::Observer observer = [&](const TimeState& state) {
    const double t = state.t();
    const double inv_dt2 = 1.0 / (dt * dt);
    const Eigen::VectorXd d2u =
        (state.u_next - 2.0 * state.u_curr + state.u_prev) * inv_dt2;
    const Eigen::VectorXd du = (state.u_next - state.u_prev) / (2.0 * dt);

    const StepResidual res = eq.residual_data(state.u_curr, d2u, du, f_at(t), g_at(t));
    const Eigen::VectorXd flux = eq.assemble_flux(res, state.u_curr, options.threads);
    const EtaResult eta = eq.eta_elements(flux, state.u_curr, options.threads);

    std::optional<ErrorParts> parts;
    if (use_exact) {
      parts = eval->exact_error(
          state.u_curr, du, [&](const Vec2& x) { return scenario.exact_ut(t, x); },
          [&](const Vec2& x) { return scenario.exact_grad(t, x); });
    } else if (use_reference) {
      for (int sub = 0; sub < 3; ++sub) {
        ref_load.setZero();
        const double tr = ref_state.t();
        ref_loads->volume(f_at(tr), ref_load);
        if (scenario.g) ref_loads->boundary(g_at(tr), ref_load);
        ref_solver->step(ref_state, ref_load);
        if (sub < 2) ref_solver->rotate(ref_state);
      }
      const Eigen::VectorXd ref_du =
          (ref_state.u_next - ref_state.u_prev) * (3.0 / (2.0 * dt));
      parts = eval->fe_error(state.u_curr, du, *ref_space, ref_state.u_curr, ref_du);
      ref_solver->rotate(ref_state);
    }
    result.trace.record(t, eta.total, parts);

    if (options.track_defects) {
      const DefectReport dr = eq.divergence_defect(flux, res);
      result.defects.divergence =
          std::max(result.defects.divergence, dr.max_defect / (dr.scale + 1e-14));
      const DefectReport tr = eq.trace_defect(flux, res);
      result.defects.trace = std::max(result.defects.trace, tr.max_defect / (tr.scale + 1e-14));
      for (const Patch& patch : eq.patches()) {
        if (patch.cls == PatchClass::TouchesDirichlet) continue;
        const Equilibrator::Compatibility comp = eq.compatibility(patch.vertex, res);
        result.defects.compatibility =
            std::max(result.defects.compatibility, comp.defect / (comp.scale + 1e-14));
      }
    }

    while (vtk_next < vtk_times.size() && t >= vtk_times[vtk_next] - 1e-12) {
      if (!options.vtk_dir.empty()) {
        const std::string path =
            options.vtk_dir + "/snap_" + std::to_string(vtk_count) + ".vtk";
        emit_vtk(mesh, eta.per_element, state.u_curr.head(mesh.n_vertices()), path);
      }
      ++vtk_count;
      ++vtk_next;
    }
  };

  solver.run(n_steps, load_fn, {observer});

  result.lambda.resize(rho.size());
  result.error.resize(rho.size());
  for (size_t i = 0; i < rho.size(); ++i) {
    result.lambda[i] = result.trace.lambda(static_cast<int>(i));
    result.error[i] = result.has_error ? result.trace.error_norm(static_cast<int>(i)) : 0.0;
  }
  return result;
}

ConvergenceResult run_convergence(const Scenario& scenario, const std::vector<int>& levels,
                                  int p, double alpha, double T, double rho,
                                  const RunOptions& options) {
  if (levels.empty()) throw std::runtime_error("convergence: needs at least one level");
  ConvergenceResult out;
  out.rho = rho;
  for (size_t i = 0; i < levels.size(); ++i) {
    const RunResult run = run_single(scenario, levels[i], p, alpha, T, {rho}, options);
    ConvergenceRow row;
    row.n = run.n;
    row.n_dofs = run.n_dofs;
    row.h_max = run.h_max;
    row.dt = run.dt;
    row.lambda = run.lambda[0];
    row.error = run.error[0];
    row.eff = effectivity(row.lambda, row.error);
    if (i == 0) {
      row.eoc_est = std::numeric_limits<double>::quiet_NaN();
      row.eoc_err = std::numeric_limits<double>::quiet_NaN();
    } else {
      const ConvergenceRow& prev = out.rows.back();
      row.eoc_est = eoc_between(prev.lambda, row.lambda, prev.n_dofs, row.n_dofs);
      row.eoc_err = eoc_between(prev.error, row.error, prev.n_dofs, row.n_dofs);
    }
    out.rows.push_back(row);
  }
  return out;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_tsv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot open " + tmp + " for writing");
    for (size_t i = 0; i < header.size(); ++i) out << (i ? "\t" : "") << header[i];
    out << "\n";
    for (const std::vector<double>& row : rows) {
      if (row.size() != header.size())
        throw std::runtime_error("io: row width does not match the header in " + path);
      for (size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << format_full(row[i]);
      out << "\n";
    }
    out.flush();
    if (!out) throw std::runtime_error("io: short write on " + tmp);
  }
  commit_file(tmp, path);
}

void emit_vtk(const Mesh& mesh, const Eigen::VectorXd& eta_per_element,
              const Eigen::VectorXd& u_vertices, const std::string& path) {
  if (eta_per_element.size() != mesh.n_elements() || u_vertices.size() != mesh.n_vertices())
    throw std::runtime_error("vtk: field sizes do not match the mesh");
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot open " + tmp + " for writing");
    out << "# vtk DataFile Version 3.0\n";
    out << "wave field snapshot\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.n_vertices() << " double\n";
    for (const Vec2& v : mesh.vertices)
      out << format_full(v.x()) << " " << format_full(v.y()) << " 0\n";
    out << "CELLS " << mesh.n_elements() << " " << 4 * mesh.n_elements() << "\n";
    for (const Element& el : mesh.elements)
      out << "3 " << el.v[0] << " " << el.v[1] << " " << el.v[2] << "\n";
    out << "CELL_TYPES " << mesh.n_elements() << "\n";
    for (int k = 0; k < mesh.n_elements(); ++k) out << "5\n";
    out << "CELL_DATA " << mesh.n_elements() << "\n";
    out << "SCALARS eta double 1\nLOOKUP_TABLE default\n";
    for (int k = 0; k < mesh.n_elements(); ++k) out << format_full(eta_per_element[k]) << "\n";
    out << "POINT_DATA " << mesh.n_vertices() << "\n";
    out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < mesh.n_vertices(); ++v) out << format_full(u_vertices[v]) << "\n";
    out.flush();
    if (!out) throw std::runtime_error("io: short write on " + tmp);
  }
  commit_file(tmp, path);
}

void write_run_outputs(const ExperimentConfig& config, const RunResult& result) {
  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  const std::vector<EstimatorTrace::Row>& rows = result.trace.rows();

  if (config.emit_inst) {
    std::vector<std::vector<double>> data;
    data.reserve(rows.size());
    const double rho0 = result.rho.at(0);
    for (const EstimatorTrace::Row& row : rows) {
      const double err = row.error ? std::sqrt(row.error->combined(rho0)) : 0.0;
      data.push_back({row.t, row.eta, err});
    }
    write_tsv((dir / "inst.tsv").string(), {"t", "est", "err"}, data);
  }

  if (config.emit_cumu) {
    for (size_t i = 0; i < result.rho.size(); ++i) {
      std::vector<std::vector<double>> data;
      data.reserve(rows.size());
      for (const EstimatorTrace::Row& row : rows)
        data.push_back({row.t, std::sqrt(row.lambda2[i]), std::sqrt(row.cumu2[i])});
      char name[64];
      std::snprintf(name, sizeof(name), "cumu_%g.tsv", result.rho[i]);
      write_tsv((dir / name).string(), {"t", "est", "err"}, data);
    }
  }

  std::vector<std::vector<double>> summary;
  for (size_t i = 0; i < result.rho.size(); ++i) {
    summary.push_back({result.rho[i], result.lambda[i], result.error[i],
                       effectivity(result.lambda[i], result.error[i]),
                       static_cast<double>(result.n_dofs), result.h_max, result.dt});
  }
  write_tsv((dir / "summary.tsv").string(),
            {"rho", "lambda", "err", "eff", "nr_dofs", "h_max", "dt"}, summary);
}

void write_convergence_output(const ExperimentConfig& config, const ConvergenceResult& result) {
  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::vector<double>> data;
  for (const ConvergenceRow& row : result.rows)
    data.push_back({static_cast<double>(row.n_dofs), row.lambda, row.error, row.eff,
                    row.eoc_est, row.eoc_err});
  write_tsv((dir / "conv.tsv").string(), {"nr_dofs", "est", "err", "eff", "eoc_est", "eoc_err"},
            data);
}

}  // namespace waveq
