#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdg/boundary.hpp"
#include "pdg/ccs_dataset.hpp"
#include "pdg/guidance.hpp"
#include "pdg/retarget.hpp"
#include "pdg/tgo_policy.hpp"

namespace pdg {

inline constexpr int kSchemaVersion = 1;

struct InitialCondition {
  Vec3 r0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
};

struct RunConfig {
  int schema_version = kSchemaVersion;

  // plant and limits
  ConstraintSet limits;

  // guidance
  double dt = 0.1;
  int substeps = 2;
  double tgo_floor = 2.0;
  CommandEval command_eval = CommandEval::CycleEnd;
  TerminalTolerances tol;

  Scenario scenario;
  InitialCondition nominal{Vec3(-28500.0, 0.0, 6800.0), Vec3(336.0, 0.0, -59.0)};
  InitialCondition offnominal{Vec3(-26000.0, 0.0, 5300.0), Vec3(344.0, 0.0, -54.0)};
  Dispersion dispersion_bound{3000.0, 3000.0, 17.0, 17.0};
  Dispersion three_sigma{750.0, 900.0, 2.5, 1.75};

  Algorithm1Params algorithm1;
  std::size_t dataset_size = 2000;

  double lasso_lambda_min = 1e-4, lasso_lambda_max = 1e1;
  int lasso_grid_per_decade = 4;
  int lasso_folds = 5;
  LassoOptions lasso;

  std::vector<double> svm_gammas{0.1, 1.0, 10.0, 100.0, 1000.0};
  int svm_folds = 5;
  SvmOptions svm;

  Level2Options level2;

  bool retarget = true;
  double tgo_margin = 2.0;
  double retarget_inset = 0.0;

  std::size_t montecarlo_runs = 500;
  SamplingMode montecarlo_mode = SamplingMode::Uniform;

  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "out";

  void validate() const;

  RolloutOptions rollout_options() const;
  GuidedOptions guided_options() const;
  std::vector<double> lambda_grid() const;
  ReducedGuidanceState nominal_reduced() const;
  LanderState initial_state(const InitialCondition& ic) const;
};

// Throws ConfigError on malformed input, unknown keys or bad values.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);
std::string dump_config(const RunConfig& cfg);  // full tree with every default

}  // namespace pdg
