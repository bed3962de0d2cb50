#include "pdg/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "pdg/errors.hpp"

namespace pdg {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::vector<FeasibilitySet> generate_feasibility_sets(const RunConfig& cfg) {
  const auto states = sample_states(cfg.nominal_reduced(), cfg.dispersion_bound, cfg.dataset_size,
                                    cfg.seed, SamplingMode::Uniform);
  const RolloutOptions ro = cfg.rollout_options();
  return parallel_map<FeasibilitySet>(states.size(), cfg.workers, [&](std::size_t i) {
    return compute_feasibility_set(states[i], cfg.algorithm1, cfg.scenario, ro);
  });
}

PipelineResult fit_models(const RunConfig& cfg, std::vector<FeasibilitySet> sets) {
  PipelineResult r;
  r.sets = std::move(sets);
  r.labels = label_dataset(r.sets);

  r.lasso = fit_lasso_cv(extract_tgo_dataset(r.sets), cfg.lambda_grid(), cfg.lasso_folds, cfg.lasso);
  r.models.tgo = r.lasso.policy;
  r.models.tgo.tgo_min = cfg.algorithm1.tgo_min;
  r.models.tgo.tgo_max = cfg.algorithm1.tgo_max;

  std::vector<SvmSample> svm;
  std::vector<ReducedState2> s2;
  std::vector<int> d;
  for (const LabeledSample& l : r.labels) {
    const ReducedState2 s = reduce2(l.state);
    svm.push_back({featurize(s), l.label});
    s2.push_back(s);
    d.push_back(l.label);
  }
  r.svm = fit_level1_cv(svm, cfg.svm_gammas, cfg.svm_folds, cfg.svm);
  r.models.level1 = r.svm.model;
  const ConicBoundary b0 = boundary_from_level1(r.svm.model, cfg.level2.eta);
  r.level2 = fit_level2(b0, s2, d, cfg.level2);
  r.models.boundary = r.level2.boundary;
  return r;
}

void save_models(const Models& m, const std::string& dir) {
  fs::create_directories(dir);
  save_tgo_policy(m.tgo, (fs::path(dir) / "tgo_policy.txt").string());
  save_boundary(m.boundary, m.level1, (fs::path(dir) / "boundary.txt").string());
}

Models load_models(const std::string& dir) {
  const fs::path t = fs::path(dir) / "tgo_policy.txt", b = fs::path(dir) / "boundary.txt";
  if (!fs::exists(t) || !fs::exists(b)) throw MissingModels("no models in " + dir);
  Models m;
  m.tgo = load_tgo_policy(t.string());
  BoundaryFile bf = load_boundary(b.string());
  m.boundary = bf.boundary;
  m.level1 = bf.level1;
  return m;
}

namespace {

std::string pipeline_report(const RunConfig& cfg, const PipelineResult& r) {
  ojson j;
  std::size_t pos = 0;
  for (const LabeledSample& l : r.labels) pos += l.label > 0;
  j["samples"] = r.labels.size();
  j["controllable"] = pos;
  j["uncontrollable"] = r.labels.size() - pos;
  const TgoPolicy& p = r.models.tgo;
  j["lasso"] = {{"lambda", r.lasso.lambdas[r.lasso.chosen]},
                {"mu", p.mu},
                {"cv_rmse_s", r.lasso.cv_rmse[r.lasso.chosen]},
                {"train_rmse_s", p.rmse},
                {"sparsity", p.sparsity},
                {"records", extract_tgo_dataset(r.sets).size()}};
  j["svm"] = {{"gamma", r.svm.gammas[r.svm.chosen]},
              {"balanced_accuracy_cv", r.svm.balanced_accuracy},
              {"support_vectors", r.models.level1.support.size()},
              {"iterations", r.models.level1.iterations}};
  const Level2Report& l2 = r.level2;
  const ConicBoundary& b = l2.boundary;
  j["level1"] = {{"misclassified", l2.level1_misclassified},
                 {"false_controllable", l2.level1_false_controllable}};
  j["level2"] = {{"delta", {b.delta.dh, b.delta.dk, b.delta.dtheta}},
                 {"delta_norm", b.delta.norm()},
                 {"eta", b.eta},
                 {"max_uncontrollable_g", l2.max_neg_g},
                 {"controllable_shrinkage", l2.shrinkage}};
  const CanonicalConic& c = b.canonical;
  j["conic"] = {{"h", c.h}, {"k", c.k}, {"theta", c.theta}, {"M1", c.M1}, {"M2", c.M2},
                {"lambda", c.lambda}, {"sign", b.sign}};
  const ReducedGuidanceState nom = cfg.nominal_reduced();
  const ReducedGuidanceState f4 = reduce_state(cfg.initial_state(cfg.offnominal), cfg.scenario.target);
  j["nominal"] = {{"s1", nom.S / nom.v}, {"s2", nom.H / nom.w}, {"g", eval_g(b, reduce2(nom))},
                  {"tgo_policy", eval_tgo(p, nom)}};
  j["offnominal"] = {{"s1", f4.S / f4.v}, {"s2", f4.H / f4.w}, {"g", eval_g(b, reduce2(f4))}};
  return j.dump(2) + "\n";
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  auto path = [&](const char* name) {
    written.push_back((fs::path(out_dir) / name).string());
    return written.back();
  };
  try {
    PipelineResult r = fit_models(cfg, generate_feasibility_sets(cfg));
    write_dataset_csv(r.sets, path("dataset.csv"));
    write_feasibility_csv(r.sets, path("feasibility.csv"));
    path("tgo_policy.txt");
    path("boundary.txt");
    save_models(r.models, out_dir);
    ConicBoundary l1 = r.models.boundary;
    l1.delta = {};
    write_polyline_csv({{"level1", l1}, {"level2", r.models.boundary}},
                       path("boundary_polyline.csv"));
    std::ofstream(path("pipeline_report.json")) << pipeline_report(cfg, r);
    r.files = written;
    return r;
  } catch (...) {
    for (const std::string& f : written) {
      std::error_code ec;
      fs::remove(f, ec);
    }
    throw;
  }
}

MonteCarloReport run_montecarlo(const RunConfig& cfg, const Models& models, std::size_t n,
                                SamplingMode mode, bool retarget) {
  MonteCarloReport rep;
  rep.n = n;
  const std::uint64_t master = derive_seed(cfg.seed, 0x4d6f6e7465ULL);
  const Dispersion& disp = mode == SamplingMode::Uniform ? cfg.dispersion_bound : cfg.three_sigma;
  const ReducedGuidanceState nom = cfg.nominal_reduced();
  GuidedOptions go = cfg.guided_options();
  go.retarget = retarget;
  go.rollout.record_trace = false;
  rep.runs = parallel_map<RunRecord>(n, cfg.workers, [&](std::size_t i) {
    RunRecord r;
    r.index = i;
    r.seed = derive_seed(master, i);
    r.state = sample_state(nom, disp, mode, r.seed);
    const LanderState x0 = reconstruct_state(r.state, cfg.scenario);
    try {
      r.result = guided_descent(x0, cfg.scenario, models.tgo, models.boundary, go);
    } catch (const Error& e) {
      // recorded as an unconverged run; the campaign continues
      r.error = e.what();
      const ReducedGuidanceState red = reduce_state(x0, cfg.scenario.target);
      r.result.decision.feasible = false;
      r.result.decision.s = {red.S / red.v, red.H / red.w};
      r.result.decision.s_projected = r.result.decision.s;
      r.result.decision.new_target = cfg.scenario.target;
      r.result.target = cfg.scenario.target;
      r.result.rollout.initial = x0;
      r.result.rollout.terminal = x0;
    }
    return r;
  });
  for (const RunRecord& r : rep.runs) {
    rep.converged += r.result.rollout.converged;
    rep.retargeted += retarget && !r.result.decision.feasible && r.error.empty();
    rep.errors += !r.error.empty();
  }
  return rep;
}

std::string decision_log_line(const RunRecord& r) {
  const RetargetDecision& d = r.result.decision;
  ojson j;
  j["seed"] = r.seed;
  j["feasible"] = d.feasible;
  j["s1"] = d.s.s1;
  j["s2"] = d.s.s2;
  j["s1_projected"] = d.s_projected.s1;
  j["target_shift_m"] = d.target_shift;
  j["fuel_kg"] = r.result.rollout.fuel_used;
  j["tof_s"] = r.result.t_go;
  j["converged"] = r.result.rollout.converged;
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

void write_decision_log(const MonteCarloReport& rep, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  for (const RunRecord& r : rep.runs) os << decision_log_line(r) << '\n';
}

namespace {

ojson stats(std::vector<double> x) {
  if (x.empty()) return nullptr;
  std::sort(x.begin(), x.end());
  double m = 0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  return {{"min", x.front()}, {"median", x[x.size() / 2]}, {"mean", m}, {"max", x.back()}};
}

}  // namespace

std::string montecarlo_summary_json(const MonteCarloReport& rep, bool retarget, SamplingMode mode) {
  std::vector<double> fuel, tof, shift;
  for (const RunRecord& r : rep.runs) {
    fuel.push_back(r.result.rollout.fuel_used);
    tof.push_back(r.result.t_go);
    if (!r.result.decision.feasible && retarget) shift.push_back(r.result.decision.target_shift);
  }
  ojson j;
  j["runs"] = rep.n;
  j["mode"] = mode == SamplingMode::Uniform ? "uniform" : "gaussian";
  j["retarget_enabled"] = retarget;
  j["converged"] = rep.converged;
  j["convergence_rate"] = rep.convergence_rate();
  j["retargeted"] = rep.retargeted;
  j["errors"] = rep.errors;
  j["fuel_kg"] = stats(fuel);
  j["tof_s"] = stats(tof);
  j["target_shift_m"] = stats(shift);
  return j.dump(2) + "\n";
}

std::string rollout_summary_json(const GuidedResult& r, const RunConfig& cfg) {
  const RolloutResult& ro = r.rollout;
  ojson j;
  j["converged"] = ro.converged;
  j["fuel_kg"] = ro.fuel_used;
  j["tof_s"] = r.t_go;
  j["terminal_mass_kg"] = ro.terminal.m;
  j["terminal_position_error_m"] = (ro.terminal.r - r.target).norm();
  j["terminal_velocity_error_mps"] = (ro.terminal.v - cfg.scenario.vf).norm();
  j["max_theta_deg"] = ro.max_theta * 180.0 / std::numbers::pi;
  j["max_saturation_run_s"] = ro.max_saturation_run;
  j["time_saturated_s"] = ro.time_saturated;
  ojson viol = ojson::array();
  for (const Violation& v : ro.violated)
    viol.push_back({{"constraint", to_string(v.id)}, {"t", v.t}, {"margin", v.margin}});
  j["violations"] = viol;
  j["retarget"] = {{"feasible", r.decision.feasible},
                   {"s1", r.decision.s.s1},
                   {"s2", r.decision.s.s2},
                   {"s1_projected", r.decision.s_projected.s1},
                   {"target_shift_m", r.decision.target_shift},
                   {"target", {r.target.x(), r.target.y(), r.target.z()}}};
  j["reference"] = {{"polynomial_policy_fuel_kg", kPaperFuelKg},
                    {"polynomial_policy_tof_s", kPaperTofS},
                    {"fopdg_fuel_kg", kFopdgFuelKg},
                    {"fopdg_tof_s", kFopdgTofS}};
  return j.dump(2) + "\n";
}

}  // namespace pdg
