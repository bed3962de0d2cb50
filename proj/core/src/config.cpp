#include "pdg/config.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pdg/errors.hpp"

namespace pdg {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Reads keys from one object and rejects anything it did not consume.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }
  // Call after reading; checks this section and every child it handed out.
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown key " + path_ + "." + it.key());
    for (const auto& c : children_) c->done();
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  void num(const std::string& k, double& out) {
    if (!take(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(path_ + "." + k + " must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(path_ + "." + k + " must be finite");
  }
  template <class I>
  void integer(const std::string& k, I& out) {
    if (!take(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(path_ + "." + k + " must be an integer");
    if (std::is_unsigned_v<I> && v.get<long long>() < 0 && !v.is_number_unsigned())
      throw ConfigError(path_ + "." + k + " must be non-negative");
    out = v.get<I>();
  }
  void boolean(const std::string& k, bool& out) {
    if (!take(k)) return;
    if (!j_.at(k).is_boolean()) throw ConfigError(path_ + "." + k + " must be a boolean");
    out = j_.at(k).get<bool>();
  }
  void str(const std::string& k, std::string& out) {
    if (!take(k)) return;
    if (!j_.at(k).is_string()) throw ConfigError(path_ + "." + k + " must be a string");
    out = j_.at(k).get<std::string>();
  }
  void vec3(const std::string& k, Vec3& out) {
    if (!take(k)) return;
    const json& v = j_.at(k);
    if (!v.is_array() || v.size() != 3) throw ConfigError(path_ + "." + k + " must be [x, y, z]");
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw ConfigError(path_ + "." + k + " must hold numbers");
      out[i] = v[i].get<double>();
    }
  }
  void list(const std::string& k, std::vector<double>& out) {
    if (!take(k)) return;
    const json& v = j_.at(k);
    if (!v.is_array()) throw ConfigError(path_ + "." + k + " must be a list");
    out.clear();
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(path_ + "." + k + " must hold numbers");
      out.push_back(e.get<double>());
    }
  }
  Section* sub(const std::string& k) {
    if (!take(k)) return nullptr;
    children_.push_back(std::make_unique<Section>(j_.at(k), path_ + "." + k));
    return children_.back().get();
  }

private:
  bool take(const std::string& k) {
    if (!j_.contains(k)) return false;
    used_.insert(k);
    return true;
  }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
  std::vector<std::unique_ptr<Section>> children_;
};

void read_disp(Section& s, Dispersion& d) {
  s.num("S", d.S);
  s.num("H", d.H);
  s.num("w", d.w);
  s.num("v", d.v);
}

void read_ic(Section& s, InitialCondition& ic) {
  s.vec3("r0", ic.r0);
  s.vec3("v0", ic.v0);
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json disp_json(const Dispersion& d) { return {{"S", d.S}, {"H", d.H}, {"w", d.w}, {"v", d.v}}; }
json ic_json(const InitialCondition& ic) { return {{"r0", vec_json(ic.r0)}, {"v0", vec_json(ic.v0)}}; }

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  RunConfig c;
  {
    Section root(j, "config");
    if (!root.has("schema_version")) throw ConfigError("missing schema_version");
    root.integer("schema_version", c.schema_version);
    if (c.schema_version != kSchemaVersion)
      throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
    if (auto s = root.sub("physics")) {
      s->vec3("g", c.limits.g);
      s->num("alpha", c.limits.alpha);
      s->num("m_wet", c.scenario.m0);
      s->num("rho_min", c.limits.rho_min);
      s->num("rho_max", c.limits.rho_max);
    }
    if (auto s = root.sub("limits")) {
      s->num("thrust_rate_max", c.limits.thrust_rate_max);
      double deg = c.limits.theta_lim / kDeg;
      s->num("theta_lim_deg", deg);
      c.limits.theta_lim = deg * kDeg;
      s->num("vh_max", c.limits.vh_max);
      s->num("m_terminal_min", c.limits.m_terminal_min);
      s->num("subsurface_tol", c.limits.subsurface_tol);
      s->num("center_depth", c.limits.center_depth);
    }
    if (auto s = root.sub("guidance")) {
      s->num("dt", c.dt);
      s->integer("substeps", c.substeps);
      s->num("tgo_floor", c.tgo_floor);
      std::string ev = c.command_eval == CommandEval::CycleEnd ? "cycle_end" : "initial";
      s->str("command_eval", ev);
      if (ev == "cycle_end") c.command_eval = CommandEval::CycleEnd;
      else if (ev == "initial") c.command_eval = CommandEval::Initial;
      else throw ConfigError("guidance.command_eval must be cycle_end or initial");
      s->num("tol_pos", c.tol.pos);
      s->num("tol_vel", c.tol.vel);
    }
    if (auto s = root.sub("scenario")) {
      s->vec3("target", c.scenario.target);
      s->vec3("vf", c.scenario.vf);
      s->vec3("a0_thrust", c.scenario.a0_thrust);
      s->vec3("af_thrust", c.scenario.af_thrust);
      if (auto n = s->sub("nominal")) read_ic(*n, c.nominal);
      if (auto n = s->sub("offnominal")) read_ic(*n, c.offnominal);
    }
    if (auto s = root.sub("dispersion")) {
      if (auto b = s->sub("bound")) read_disp(*b, c.dispersion_bound);
      if (auto b = s->sub("three_sigma")) read_disp(*b, c.three_sigma);
    }
    if (auto s = root.sub("algorithm1")) {
      s->num("tgo_min", c.algorithm1.tgo_min);
      s->num("tgo_max", c.algorithm1.tgo_max);
      s->num("eps_T", c.algorithm1.eps_T);
      s->num("delta_tgo", c.algorithm1.delta_tgo);
      s->integer("dataset_size", c.dataset_size);
    }
    if (auto s = root.sub("lasso")) {
      s->num("lambda_min", c.lasso_lambda_min);
      s->num("lambda_max", c.lasso_lambda_max);
      s->integer("grid_per_decade", c.lasso_grid_per_decade);
      s->integer("folds", c.lasso_folds);
      s->num("tol", c.lasso.tol);
      s->integer("max_sweeps", c.lasso.max_sweeps);
    }
    if (auto s = root.sub("svm")) {
      s->list("gammas", c.svm_gammas);
      s->integer("folds", c.svm_folds);
      s->num("tol", c.svm.tol);
      s->integer("max_iter", c.svm.max_iter);
    }
    if (auto s = root.sub("level2")) {
      s->num("eta", c.level2.eta);
      s->integer("grid", c.level2.grid);
      double deg = c.level2.theta_span / kDeg;
      s->num("theta_span_deg", deg);
      c.level2.theta_span = deg * kDeg;
      s->num("tol", c.level2.tol);
    }
    if (auto s = root.sub("retarget")) {
      s->boolean("enabled", c.retarget);
      s->num("tgo_margin", c.tgo_margin);
      s->num("inset", c.retarget_inset);
    }
    if (auto s = root.sub("montecarlo")) {
      s->integer("runs", c.montecarlo_runs);
      std::string mode = c.montecarlo_mode == SamplingMode::Uniform ? "uniform" : "gaussian";
      s->str("mode", mode);
      if (mode == "uniform") c.montecarlo_mode = SamplingMode::Uniform;
      else if (mode == "gaussian") c.montecarlo_mode = SamplingMode::Gaussian;
      else throw ConfigError("montecarlo.mode must be uniform or gaussian");
    }
    if (auto s = root.sub("run")) {
      s->integer("seed", c.seed);
      s->integer("workers", c.workers);
      s->str("output_dir", c.output_dir);
    }
    root.done();
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["physics"] = {{"g", vec_json(c.limits.g)},
                  {"alpha", c.limits.alpha},
                  {"m_wet", c.scenario.m0},
                  {"rho_min", c.limits.rho_min},
                  {"rho_max", c.limits.rho_max}};
  j["limits"] = {{"thrust_rate_max", c.limits.thrust_rate_max},
                 {"theta_lim_deg", c.limits.theta_lim / kDeg},
                 {"vh_max", c.limits.vh_max},
                 {"m_terminal_min", c.limits.m_terminal_min},
                 {"subsurface_tol", c.limits.subsurface_tol},
                 {"center_depth", c.limits.center_depth}};
  j["guidance"] = {{"dt", c.dt},
                   {"substeps", c.substeps},
                   {"tgo_floor", c.tgo_floor},
                   {"command_eval", c.command_eval == CommandEval::CycleEnd ? "cycle_end" : "initial"},
                   {"tol_pos", c.tol.pos},
                   {"tol_vel", c.tol.vel}};
  j["scenario"] = {{"target", vec_json(c.scenario.target)},
                   {"vf", vec_json(c.scenario.vf)},
                   {"a0_thrust", vec_json(c.scenario.a0_thrust)},
                   {"af_thrust", vec_json(c.scenario.af_thrust)},
                   {"nominal", ic_json(c.nominal)},
                   {"offnominal", ic_json(c.offnominal)}};
  j["dispersion"] = {{"bound", disp_json(c.dispersion_bound)},
                     {"three_sigma", disp_json(c.three_sigma)}};
  j["algorithm1"] = {{"tgo_min", c.algorithm1.tgo_min},
                     {"tgo_max", c.algorithm1.tgo_max},
                     {"eps_T", c.algorithm1.eps_T},
                     {"delta_tgo", c.algorithm1.delta_tgo},
                     {"dataset_size", c.dataset_size}};
  j["lasso"] = {{"lambda_min", c.lasso_lambda_min},
                {"lambda_max", c.lasso_lambda_max},
                {"grid_per_decade", c.lasso_grid_per_decade},
                {"folds", c.lasso_folds},
                {"tol", c.lasso.tol},
                {"max_sweeps", c.lasso.max_sweeps}};
  j["svm"] = {{"gammas", c.svm_gammas},
              {"folds", c.svm_folds},
              {"tol", c.svm.tol},
              {"max_iter", c.svm.max_iter}};
  j["level2"] = {{"eta", c.level2.eta},
                 {"grid", c.level2.grid},
                 {"theta_span_deg", c.level2.theta_span / kDeg},
                 {"tol", c.level2.tol}};
  j["retarget"] = {{"enabled", c.retarget}, {"tgo_margin", c.tgo_margin}, {"inset", c.retarget_inset}};
  j["montecarlo"] = {{"runs", c.montecarlo_runs},
                     {"mode", c.montecarlo_mode == SamplingMode::Uniform ? "uniform" : "gaussian"}};
  j["run"] = {{"seed", c.seed}, {"workers", c.workers}, {"output_dir", c.output_dir}};
  return j.dump(2) + "\n";
}

void RunConfig::validate() const {
  limits.validate();
  algorithm1.validate();
  if (!(dt > 0.0)) throw ConfigError("guidance.dt must be positive");
  if (substeps < 1) throw ConfigError("guidance.substeps must be >= 1");
  if (!(tgo_floor >= dt)) throw ConfigError("guidance.tgo_floor must be >= dt");
  if (!(tol.pos > 0.0) || !(tol.vel > 0.0)) throw ConfigError("terminal tolerances must be positive");
  if (!(scenario.m0 > limits.m_terminal_min)) throw ConfigError("m_wet must exceed m_terminal_min");
  if (dataset_size == 0) throw ConfigError("algorithm1.dataset_size must be positive");
  if (!(lasso_lambda_min > 0.0 && lasso_lambda_min <= lasso_lambda_max) || lasso_grid_per_decade < 1)
    throw ConfigError("bad lasso grid");
  if (lasso_folds < 2 || svm_folds < 2) throw ConfigError("folds must be >= 2");
  if (svm_gammas.empty()) throw ConfigError("svm.gammas must not be empty");
  for (double g : svm_gammas)
    if (!(g > 0.0)) throw ConfigError("svm.gammas must be positive");
  if (!(level2.eta >= 0.0) || level2.grid < 3) throw ConfigError("bad level2 settings");
  if (!(tgo_margin >= 0.0) || !(retarget_inset >= 0.0)) throw ConfigError("bad retarget settings");
  if (workers < 1) throw ConfigError("run.workers must be >= 1");
  for (const Dispersion* d : {&dispersion_bound, &three_sigma})
    if (!(d->S >= 0 && d->H >= 0 && d->w >= 0 && d->v >= 0))
      throw ConfigError("dispersions must be non-negative");
}

RolloutOptions RunConfig::rollout_options() const {
  RolloutOptions o;
  o.limits = limits;
  o.tol = tol;
  o.substeps = substeps;
  o.guidance.dt = dt;
  o.guidance.tgo_floor = tgo_floor;
  o.guidance.center_depth = limits.center_depth;
  o.guidance.eval = command_eval;
  return o;
}

GuidedOptions RunConfig::guided_options() const {
  GuidedOptions g;
  g.rollout = rollout_options();
  g.retarget = retarget;
  g.tgo_margin = tgo_margin;
  g.inset = retarget_inset;
  return g;
}

std::vector<double> RunConfig::lambda_grid() const {
  std::vector<double> g;
  const double lo = std::log10(lasso_lambda_min), hi = std::log10(lasso_lambda_max);
  const int n = std::max(1, static_cast<int>(std::round((hi - lo) * lasso_grid_per_decade)));
  for (int i = 0; i <= n; ++i) g.push_back(std::pow(10.0, lo + (hi - lo) * i / n));
  return g;
}

ReducedGuidanceState RunConfig::nominal_reduced() const {
  return reduce_state(initial_state(nominal), scenario.target);
}

LanderState RunConfig::initial_state(const InitialCondition& ic) const {
  LanderState s;
  s.r = ic.r0;
  s.v = ic.v0;
  s.m = scenario.m0;
  return s;
}

}  // namespace pdg
