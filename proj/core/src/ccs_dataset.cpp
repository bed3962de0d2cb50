#include "pdg/ccs_dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "pdg/errors.hpp"

namespace pdg {

LanderState reconstruct_state(const ReducedGuidanceState& s, const Scenario& sc) {
  LanderState out;
  out.r = sc.target + Vec3(-s.S, 0.0, s.H);
  out.v = Vec3(s.v, 0.0, -s.w);
  out.m = sc.m0;
  return out;
}

ReducedGuidanceState reduce_state(const LanderState& s, const Vec3& target) {
  const Vec3 d = s.r - target;
  return {d.head<2>().norm(), d.z(), -s.v.z(), s.v.head<2>().norm()};
}

GuidanceProblem make_problem(const LanderState& s, const Scenario& sc, const Vec3& g) {
  GuidanceProblem p;
  p.r0 = s.r;
  p.v0 = s.v;
  p.a0 = sc.a0_thrust + g;
  p.rf = sc.target;
  p.vf = sc.vf;
  p.af = sc.af_thrust + g;
  return p;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ReducedGuidanceState sample_state(const ReducedGuidanceState& nom, const Dispersion& d,
                                  SamplingMode mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ReducedGuidanceState s = nom;
  if (mode == SamplingMode::Uniform) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    s.S += d.S * u(rng);
    s.H += d.H * u(rng);
    s.w += d.w * u(rng);
    s.v += d.v * u(rng);
  } else {
    std::normal_distribution<double> n(0.0, 1.0);
    s.S += d.S / 3.0 * n(rng);
    s.H += d.H / 3.0 * n(rng);
    s.w += d.w / 3.0 * n(rng);
    s.v += d.v / 3.0 * n(rng);
  }
  return s;
}

std::vector<ReducedGuidanceState> sample_states(const ReducedGuidanceState& nominal,
                                                const Dispersion& d, std::size_t n,
                                                std::uint64_t seed, SamplingMode mode) {
  std::vector<ReducedGuidanceState> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(sample_state(nominal, d, mode, derive_seed(seed, i)));
  return out;
}

void Algorithm1Params::validate() const {
  if (!(tgo_min > 0.0 && tgo_min < tgo_max)) throw ConfigError("need 0 < tgo_min < tgo_max");
  if (!(eps_T > 0.0) || !(delta_tgo > 0.0)) throw ConfigError("eps_T and delta_tgo must be positive");
}

FeasibilitySet compute_feasibility_set(const ReducedGuidanceState& state,
                                       const Algorithm1Params& prm, const ProbeOracle& probe) {
  prm.validate();
  FeasibilitySet out;
  out.state = state;
  std::map<double, ProbeOutcome> seen;
  auto run = [&](double t) {
    auto it = seen.find(t);
    if (it != seen.end()) return it->second;
    ++out.probes;
    return seen.emplace(t, probe(t)).first->second;
  };

  double lo = prm.tgo_min, hi = prm.tgo_max;
  while (hi - lo > prm.eps_T) {
    const double cur = 0.5 * (lo + hi);
    const ProbeOutcome o = run(cur);
    ++out.bisection_probes;
    if (o.feasible) {
      hi = cur;
      out.phase1 = FeasibilityEntry{cur, o.m_f};
    } else {
      lo = cur;
    }
  }
  out.bracket_lo = lo;
  out.bracket_hi = hi;

  std::map<double, double> entries;
  if (out.phase1) entries[out.phase1->t_go] = out.phase1->m_f;
  for (double t = prm.tgo_max; t - lo > prm.eps_T; t -= prm.delta_tgo) {
    const ProbeOutcome o = run(t);
    if (o.feasible) entries[t] = o.m_f;
  }
  for (const auto& [t, m] : entries) out.entries.push_back({t, m});
  return out;
}

RolloutResult probe_rollout(const ReducedGuidanceState& state, double t_go, const Scenario& sc,
                            RolloutOptions opts) {
  opts.record_trace = false;
  opts.abort_on_violation = true;
  const LanderState x0 = reconstruct_state(state, sc);
  return rollout_base_policy(x0, make_problem(x0, sc, opts.limits.g), t_go, opts);
}

FeasibilitySet compute_feasibility_set(const ReducedGuidanceState& state,
                                       const Algorithm1Params& params, const Scenario& sc,
                                       const RolloutOptions& opts) {
  return compute_feasibility_set(state, params, [&](double t) {
    try {
      const RolloutResult r = probe_rollout(state, t, sc, opts);
      return ProbeOutcome{r.converged, r.terminal.m};
    } catch (const Error&) {
      return ProbeOutcome{false, 0.0};
    }
  });
}

std::optional<FeasibilityEntry> best_entry(const FeasibilitySet& set) {
  std::optional<FeasibilityEntry> best;
  for (const FeasibilityEntry& e : set.entries)  // ascending t_go, strict > keeps the smaller on ties
    if (!best || e.m_f > best->m_f) best = e;
  return best;
}

std::vector<TgoRecord> extract_tgo_dataset(const std::vector<FeasibilitySet>& sets) {
  std::vector<TgoRecord> out;
  for (const FeasibilitySet& s : sets)
    if (auto b = best_entry(s)) out.push_back({s.state, b->t_go, b->m_f});
  return out;
}

std::vector<LabeledSample> label_dataset(const std::vector<FeasibilitySet>& sets) {
  std::vector<LabeledSample> out;
  bool pos = false, neg = false;
  for (const FeasibilitySet& s : sets) {
    const int d = s.entries.empty() ? -1 : +1;
    (d > 0 ? pos : neg) = true;
    out.push_back({s.state, d});
  }
  if (!(pos && neg)) throw DegenerateLabels("all samples share one label");
  return out;
}

std::string format_double(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double x = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
  return x;
}

}  // namespace

void write_dataset_csv(const std::vector<FeasibilitySet>& sets, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "S,H,w,v,label,tgo_star,mf_star\n";
  for (const FeasibilitySet& s : sets) {
    const auto b = best_entry(s);
    os << format_double(s.state.S) << ',' << format_double(s.state.H) << ','
       << format_double(s.state.w) << ',' << format_double(s.state.v) << ','
       << (b ? "1" : "-1") << ',';
    if (b) os << format_double(b->t_go) << ',' << format_double(b->m_f);
    else os << ',';
    os << '\n';
  }
}

std::vector<DatasetRow> read_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "S,H,w,v,label,tgo_star,mf_star") throw FormatError("unexpected dataset header");
  std::vector<DatasetRow> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw FormatError("expected 7 fields: " + line);
    DatasetRow r;
    r.state = {parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])};
    r.label = static_cast<int>(parse_double(f[4]));
    if (r.label != 1 && r.label != -1) throw FormatError("label must be +-1");
    if (!f[5].empty()) r.t_go_star = parse_double(f[5]);
    if (!f[6].empty()) r.m_f_star = parse_double(f[6]);
    out.push_back(r);
  }
  return out;
}

std::vector<LabeledSample> labels_from_rows(const std::vector<DatasetRow>& rows) {
  std::vector<LabeledSample> out;
  for (const DatasetRow& r : rows) out.push_back({r.state, r.label});
  return out;
}

std::vector<TgoRecord> tgo_from_rows(const std::vector<DatasetRow>& rows) {
  std::vector<TgoRecord> out;
  for (const DatasetRow& r : rows)
    if (r.label == 1 && r.t_go_star) out.push_back({r.state, *r.t_go_star, r.m_f_star.value_or(0.0)});
  return out;
}

void write_feasibility_csv(const std::vector<FeasibilitySet>& sets, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "S,H,w,v,tgo,mf\n";
  for (const FeasibilitySet& s : sets)
    for (const FeasibilityEntry& e : s.entries)
      os << format_double(s.state.S) << ',' << format_double(s.state.H) << ','
         << format_double(s.state.w) << ',' << format_double(s.state.v) << ','
         << format_double(e.t_go) << ',' << format_double(e.m_f) << '\n';
}

}  // namespace pdg
