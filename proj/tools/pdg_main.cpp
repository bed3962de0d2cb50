// pdg: command-line front end for the descent guidance stack.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pdg/errors.hpp"
#include "pdg/harness.hpp"

namespace fs = std::filesystem;
using namespace pdg;

namespace {

enum Exit { kOk = 0, kError = 1, kConfig = 2, kModels = 3, kUnconverged = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  bool no_retarget = false;
  std::string models;
};

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  if (c.out) cfg.output_dir = *c.out;
  if (c.no_retarget) cfg.retarget = false;
  cfg.validate();
  return cfg;
}

std::string models_dir(const Common& c, const RunConfig& cfg) {
  return c.models.empty() ? cfg.output_dir : c.models;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << s;
}

Vec3 parse_vec(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) throw ConfigError(std::string(what) + " needs three values");
  return {v[0], v[1], v[2]};
}

// Base-policy run with t_go from the feasibility set of the initial state.
GuidedResult run_without_models(const RunConfig& cfg, const LanderState& x0, std::optional<double> tgo) {
  GuidedResult g;
  g.target = cfg.scenario.target;
  const ReducedGuidanceState red = reduce_state(x0, cfg.scenario.target);
  g.decision.s = {red.S / red.v, red.H / red.w};
  g.decision.s_projected = g.decision.s;
  g.decision.new_target = g.target;
  if (tgo) {
    g.t_go = *tgo;
  } else {
    const FeasibilitySet fs = compute_feasibility_set(red, cfg.algorithm1, cfg.scenario, cfg.rollout_options());
    const auto best = best_entry(fs);
    g.t_go = best ? best->t_go : fs.bracket_hi;
    g.decision.feasible = best.has_value();
  }
  g.rollout = rollout_base_policy(x0, make_problem(x0, cfg.scenario, cfg.limits.g), g.t_go,
                                  cfg.rollout_options());
  return g;
}

int cmd_simulate(const Common& c, const std::string& scenario, const std::vector<double>& r0,
                 const std::vector<double>& v0, std::optional<double> tgo) {
  const RunConfig cfg = resolve(c);
  InitialCondition ic = scenario == "offnominal" ? cfg.offnominal : cfg.nominal;
  if (!r0.empty()) ic.r0 = parse_vec(r0, "--r0");
  if (!v0.empty()) ic.v0 = parse_vec(v0, "--v0");
  if (tgo && !(*tgo > 0.0)) throw ConfigError("--tgo must be positive (zero-duration run)");
  const LanderState x0 = cfg.initial_state(ic);

  GuidedResult g;
  const std::string mdir = models_dir(c, cfg);
  const bool have_models = fs::exists(fs::path(mdir) / "tgo_policy.txt");
  if (have_models && !tgo) {
    const Models m = load_models(mdir);
    g = guided_descent(x0, cfg.scenario, m.tgo, m.boundary, cfg.guided_options());
  } else {
    g = run_without_models(cfg, x0, tgo);
  }
  fs::create_directories(cfg.output_dir);
  write_trace_csv(g.rollout, (fs::path(cfg.output_dir) / ("trace_" + scenario + ".csv")).string());
  const std::string summary = rollout_summary_json(g, cfg);
  write_text(fs::path(cfg.output_dir) / ("summary_" + scenario + ".json"), summary);
  std::cout << summary;
  return g.rollout.converged ? kOk : kUnconverged;
}

int cmd_pipeline(const Common& c, std::optional<std::size_t> n) {
  RunConfig cfg = resolve(c);
  if (n) cfg.dataset_size = *n;
  cfg.validate();
  const PipelineResult r = run_pipeline(cfg, cfg.output_dir);
  std::ifstream is(fs::path(cfg.output_dir) / "pipeline_report.json");
  std::cout << is.rdbuf();
  for (const std::string& f : r.files) std::cerr << "wrote " << f << '\n';
  return kOk;
}

int cmd_montecarlo(const Common& c, std::optional<std::size_t> n, const std::string& mode) {
  const RunConfig cfg = resolve(c);
  const Models m = load_models(models_dir(c, cfg));
  SamplingMode sm = cfg.montecarlo_mode;
  if (mode == "uniform") sm = SamplingMode::Uniform;
  else if (mode == "gaussian") sm = SamplingMode::Gaussian;
  else if (!mode.empty()) throw ConfigError("--mode must be uniform or gaussian");
  const MonteCarloReport rep = run_montecarlo(cfg, m, n.value_or(cfg.montecarlo_runs), sm, cfg.retarget);
  fs::create_directories(cfg.output_dir);
  const std::string tag = std::string(sm == SamplingMode::Uniform ? "uniform" : "gaussian") +
                          (cfg.retarget ? "" : "_noretarget");
  write_decision_log(rep, (fs::path(cfg.output_dir) / ("decisions_" + tag + ".jsonl")).string());
  const std::string summary = montecarlo_summary_json(rep, cfg.retarget, sm);
  write_text(fs::path(cfg.output_dir) / ("montecarlo_" + tag + ".json"), summary);
  std::cout << summary;
  return rep.converged == rep.n ? kOk : kUnconverged;
}

int cmd_retarget_demo(const Common& c) {
  const RunConfig cfg = resolve(c);
  const Models m = load_models(models_dir(c, cfg));
  const LanderState x0 = cfg.initial_state(cfg.offnominal);
  fs::create_directories(cfg.output_dir);
  int rc = kOk;
  for (bool retarget : {false, true}) {
    if (retarget && !cfg.retarget) break;
    GuidedOptions go = cfg.guided_options();
    go.retarget = retarget;
    const GuidedResult g = guided_descent(x0, cfg.scenario, m.tgo, m.boundary, go);
    const std::string tag = retarget ? "retarget" : "base";
    write_trace_csv(g.rollout, (fs::path(cfg.output_dir) / ("trace_demo_" + tag + ".csv")).string());
    const std::string summary = rollout_summary_json(g, cfg);
    write_text(fs::path(cfg.output_dir) / ("summary_demo_" + tag + ".json"), summary);
    std::cout << "== " << tag << " ==\n" << summary;
    // the demo succeeds when the last run it performed converged
    rc = g.rollout.converged ? kOk : kUnconverged;
  }
  return rc;
}

int cmd_boundary_export(const Common& c, int n) {
  const RunConfig cfg = resolve(c);
  const Models m = load_models(models_dir(c, cfg));
  ConicBoundary l1 = m.boundary;
  l1.delta = {};
  fs::create_directories(cfg.output_dir);
  const std::string path = (fs::path(cfg.output_dir) / "boundary_polyline.csv").string();
  write_polyline_csv({{"level1", l1}, {"level2", m.boundary}}, path, n);
  std::cout << path << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terminal-descent guidance: simulation, offline pipeline and retargeting"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out;
  app.add_option("--config", c.config, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out, "output directory");
  app.add_flag("--no-retarget", c.no_retarget, "disable retargeting");
  app.add_option("--models", c.models, "model directory (default: output directory)");

  auto* sim = app.add_subcommand("simulate", "closed-loop rollout of one initial state");
  std::string scenario = "nominal";
  std::vector<double> r0, v0;
  double tgo = 0.0;
  sim->add_option("--scenario", scenario, "nominal or offnominal")
      ->check(CLI::IsMember({"nominal", "offnominal"}));
  sim->add_option("--r0", r0, "initial position x y z [m]")->expected(3);
  sim->add_option("--v0", v0, "initial velocity x y z [m/s]")->expected(3);
  auto* tgo_opt = sim->add_option("--tgo", tgo, "fixed time-to-go [s]");

  auto* pipe = app.add_subcommand("pipeline", "dataset generation and model fitting");
  std::size_t n_states = 0;
  auto* n_states_opt = pipe->add_option("--n", n_states, "number of sampled states");

  auto* mc = app.add_subcommand("montecarlo", "seeded campaign of guided descents");
  std::size_t n_runs = 0;
  std::string mode;
  auto* n_runs_opt = mc->add_option("--n", n_runs, "number of runs");
  mc->add_option("--mode", mode, "uniform or gaussian");

  auto* demo = app.add_subcommand("retarget-demo", "off-nominal case with and without retargeting");
  auto* bexp = app.add_subcommand("boundary-export", "write boundary polylines");
  int npts = 720;
  bexp->add_option("--points", npts, "points per curve")->check(CLI::PositiveNumber);
  auto* pcfg = app.add_subcommand("print-config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }
  if (*seed_opt) c.seed = seed;
  if (*workers_opt) c.workers = workers;
  if (*out_opt) c.out = out;

  try {
    if (*sim) return cmd_simulate(c, scenario, r0, v0, *tgo_opt ? std::optional<double>(tgo) : std::nullopt);
    if (*pipe) return cmd_pipeline(c, *n_states_opt ? std::optional<std::size_t>(n_states) : std::nullopt);
    if (*mc) return cmd_montecarlo(c, *n_runs_opt ? std::optional<std::size_t>(n_runs) : std::nullopt, mode);
    if (*demo) return cmd_retarget_demo(c);
    if (*bexp) return cmd_boundary_export(c, npts);
    if (*pcfg) {
      std::cout << dump_config(resolve(c));
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const MissingModels& e) {
    std::cerr << "missing models: " << e.what() << '\n';
    return kModels;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
