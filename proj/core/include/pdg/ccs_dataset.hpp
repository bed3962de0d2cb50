#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pdg/guidance.hpp"

namespace pdg {

struct ReducedGuidanceState {
  double S = 0.0;  // downrange to target, m
  double H = 0.0;  // altitude above target, m
  double w = 0.0;  // descent rate, m/s (positive descending)
  double v = 0.0;  // horizontal speed, m/s

  bool operator==(const ReducedGuidanceState&) const = default;
};

// How reduced states map back to full lander states and boundary conditions.
// Accelerations are thrust accelerations; gravity is added when the problem
// is assembled.
struct Scenario {
  Vec3 target = Vec3(0.0, 0.0, 1300.0);
  Vec3 vf = Vec3::Zero();
  Vec3 a0_thrust = Vec3(-2.26, 0.0, 1.91);
  Vec3 af_thrust = Vec3(0.0, 0.0, 3.2);
  double m0 = 1050.0;
};

// Position (-S, 0, H) and velocity (v, 0, -w) relative to the target.
LanderState reconstruct_state(const ReducedGuidanceState& s, const Scenario& sc);

// Horizontal distance / speed and vertical offset / rate relative to `target`.
ReducedGuidanceState reduce_state(const LanderState& s, const Vec3& target);

GuidanceProblem make_problem(const LanderState& s, const Scenario& sc, const Vec3& g);

enum class SamplingMode { Uniform, Gaussian };

// Half-widths for uniform sampling, 3-sigma values for Gaussian sampling.
struct Dispersion {
  double S = 3000.0, H = 3000.0, w = 17.0, v = 17.0;
};

// Seed for sample `index`, independent of how samples are scheduled.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

ReducedGuidanceState sample_state(const ReducedGuidanceState& nominal, const Dispersion& d,
                                  SamplingMode mode, std::uint64_t seed);

std::vector<ReducedGuidanceState> sample_states(const ReducedGuidanceState& nominal,
                                                const Dispersion& d, std::size_t n,
                                                std::uint64_t seed,
                                                SamplingMode mode = SamplingMode::Uniform);

struct FeasibilityEntry {
  double t_go = 0.0;
  double m_f = 0.0;
  bool operator==(const FeasibilityEntry&) const = default;
};

struct FeasibilitySet {
  ReducedGuidanceState state;
  std::vector<FeasibilityEntry> entries;  // ascending in t_go
  std::optional<FeasibilityEntry> phase1;  // feasible end of the bisection bracket
  double bracket_lo = 0.0, bracket_hi = 0.0;
  int probes = 0;
  int bisection_probes = 0;
};

struct Algorithm1Params {
  double tgo_min = 100.0;
  double tgo_max = 300.0;
  double eps_T = 0.5;
  double delta_tgo = 2.0;

  void validate() const;
};

struct ProbeOutcome {
  bool feasible = false;
  double m_f = 0.0;
};

using ProbeOracle = std::function<ProbeOutcome(double t_go)>;

// Bisection on the feasibility edge followed by a downward sweep from tgo_max.
FeasibilitySet compute_feasibility_set(const ReducedGuidanceState& state,
                                       const Algorithm1Params& params, const ProbeOracle& probe);

// Same, probing with closed-loop rollouts of the base policy.
FeasibilitySet compute_feasibility_set(const ReducedGuidanceState& state,
                                       const Algorithm1Params& params, const Scenario& sc,
                                       const RolloutOptions& opts);

RolloutResult probe_rollout(const ReducedGuidanceState& state, double t_go, const Scenario& sc,
                            RolloutOptions opts);

struct TgoRecord {
  ReducedGuidanceState state;
  double t_go_star = 0.0;
  double m_f_star = 0.0;
};

struct LabeledSample {
  ReducedGuidanceState state;
  int label = -1;  // +1 controllable
};

std::optional<FeasibilityEntry> best_entry(const FeasibilitySet& set);
std::vector<TgoRecord> extract_tgo_dataset(const std::vector<FeasibilitySet>& sets);
std::vector<LabeledSample> label_dataset(const std::vector<FeasibilitySet>& sets);

// S,H,w,v,label,tgo_star,mf_star
void write_dataset_csv(const std::vector<FeasibilitySet>& sets, const std::string& path);
struct DatasetRow {
  ReducedGuidanceState state;
  int label = -1;
  std::optional<double> t_go_star, m_f_star;
};
std::vector<DatasetRow> read_dataset_csv(const std::string& path);
std::vector<LabeledSample> labels_from_rows(const std::vector<DatasetRow>& rows);
std::vector<TgoRecord> tgo_from_rows(const std::vector<DatasetRow>& rows);

// S,H,w,v,tgo,mf long form
void write_feasibility_csv(const std::vector<FeasibilitySet>& sets, const std::string& path);

std::string format_double(double x);  // shortest round-trip representation

}  // namespace pdg
