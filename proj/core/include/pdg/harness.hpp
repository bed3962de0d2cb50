#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pdg/config.hpp"

namespace pdg {

// Runs fn(i) for i in [0, n) on `workers` threads; results are stored by index.
template <class R>
std::vector<R> parallel_map(std::size_t n, int workers, const std::function<R(std::size_t)>& fn);

// Reference lines from the performance table; only reported, never reproduced.
inline constexpr double kPaperFuelKg = 154.5;
inline constexpr double kPaperTofS = 164.4;
inline constexpr double kFopdgFuelKg = 152.1;
inline constexpr double kFopdgTofS = 154.8;
inline constexpr double kPaperShiftM = 3027.0;

struct Models {
  TgoPolicy tgo;
  ConicBoundary boundary;
  Level1Model level1;
};

struct PipelineResult {
  std::vector<FeasibilitySet> sets;
  std::vector<LabeledSample> labels;
  LassoCvResult lasso;
  GammaCvResult svm;
  Level2Report level2;
  Models models;
  std::vector<std::string> files;
};

// Full offline chain. Writes into out_dir; removes what it wrote on failure.
PipelineResult run_pipeline(const RunConfig& cfg, const std::string& out_dir);

// Fit only (no rollouts), from already computed feasibility sets.
PipelineResult fit_models(const RunConfig& cfg, std::vector<FeasibilitySet> sets);

std::vector<FeasibilitySet> generate_feasibility_sets(const RunConfig& cfg);

Models load_models(const std::string& dir);  // MissingModels
void save_models(const Models& m, const std::string& dir);

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  ReducedGuidanceState state;
  GuidedResult result;
  std::string error;  // set when the run stopped on an exception
};

struct MonteCarloReport {
  std::size_t n = 0;
  std::size_t converged = 0;
  std::size_t retargeted = 0;
  std::size_t errors = 0;
  std::vector<RunRecord> runs;
  double convergence_rate() const { return n ? double(converged) / double(n) : 1.0; }
};

MonteCarloReport run_montecarlo(const RunConfig& cfg, const Models& models, std::size_t n,
                                SamplingMode mode, bool retarget);

// JSON-lines decision log, one object per run in index order.
std::string decision_log_line(const RunRecord& r);
void write_decision_log(const MonteCarloReport& rep, const std::string& path);
std::string montecarlo_summary_json(const MonteCarloReport& rep, bool retarget, SamplingMode mode);
std::string rollout_summary_json(const GuidedResult& r, const RunConfig& cfg);

}  // namespace pdg

#include "pdg/parallel.inl"
