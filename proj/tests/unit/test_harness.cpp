#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "pdg/errors.hpp"
#include "pdg/harness.hpp"

using namespace pdg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pdg_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig smoke_config(int workers) {
  RunConfig c;
  c.dataset_size = 50;
  c.workers = workers;
  return c;
}

}  // namespace

TEST(Parallel, ResultsIndependentOfWorkers) {
  const std::function<double(std::size_t)> fn = [](std::size_t i) { return std::sqrt(double(i)) * 3.0; };
  const auto a = parallel_map<double>(1000, 1, fn);
  const auto b = parallel_map<double>(1000, 4, fn);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(parallel_map<double>(0, 4, fn).empty());
}

class SmokePipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir1 = scratch("smoke1");
    dir2 = scratch("smoke2");
    const auto t0 = std::chrono::steady_clock::now();
    result = new PipelineResult(run_pipeline(smoke_config(1), dir1.string()));
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run_pipeline(smoke_config(2), dir2.string());
  }
  static void TearDownTestSuite() {
    delete result;
    fs::remove_all(dir1);
    fs::remove_all(dir2);
  }
  static inline fs::path dir1, dir2;
  static inline PipelineResult* result = nullptr;
  static inline double seconds = 0.0;
};

TEST_F(SmokePipeline, RunsQuickly) { EXPECT_LT(seconds, 60.0); }

TEST_F(SmokePipeline, ByteIdenticalAcrossRunsAndWorkers) {
  for (const char* f : {"dataset.csv", "feasibility.csv", "tgo_policy.txt", "boundary.txt",
                        "boundary_polyline.csv", "pipeline_report.json"}) {
    ASSERT_TRUE(fs::exists(dir1 / f)) << f;
    EXPECT_EQ(slurp(dir1 / f), slurp(dir2 / f)) << f;
  }
}

TEST_F(SmokePipeline, ZeroFalseControllable) {
  const ConicBoundary& b = result->models.boundary;
  for (const LabeledSample& s : result->labels)
    if (s.label < 0) EXPECT_LE(eval_g(b, reduce2(s.state)), -b.eta + 1e-12);
  EXPECT_LE(result->level2.max_neg_g, -b.eta + 1e-12);
}

TEST_F(SmokePipeline, ModelsRoundTrip) {
  const Models m = load_models(dir1.string());
  const ReducedGuidanceState nom = RunConfig{}.nominal_reduced();
  EXPECT_EQ(eval_tgo(m.tgo, nom), eval_tgo(result->models.tgo, nom));
  EXPECT_EQ(eval_g(m.boundary, reduce2(nom)), eval_g(result->models.boundary, reduce2(nom)));
  const auto report = nlohmann::json::parse(slurp(dir1 / "pipeline_report.json"));
  EXPECT_EQ(report["samples"], 50);
}

TEST_F(SmokePipeline, MonteCarloDeterministic) {
  RunConfig c1 = smoke_config(1), c3 = smoke_config(3);
  const auto a = run_montecarlo(c1, result->models, 12, SamplingMode::Uniform, true);
  const auto b = run_montecarlo(c3, result->models, 12, SamplingMode::Uniform, true);
  ASSERT_EQ(a.runs.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(decision_log_line(a.runs[i]), decision_log_line(b.runs[i]));
  EXPECT_EQ(montecarlo_summary_json(a, true, SamplingMode::Uniform),
            montecarlo_summary_json(b, true, SamplingMode::Uniform));
  const auto line = nlohmann::json::parse(decision_log_line(a.runs[0]));
  for (const char* k : {"seed", "feasible", "s1", "s2", "s1_projected", "target_shift_m", "fuel_kg",
                        "tof_s", "converged"})
    EXPECT_TRUE(line.contains(k)) << k;
}

TEST_F(SmokePipeline, EmptyMonteCarlo) {
  const auto rep = run_montecarlo(smoke_config(1), result->models, 0, SamplingMode::Uniform, true);
  EXPECT_EQ(rep.n, 0u);
  EXPECT_TRUE(rep.runs.empty());
  const auto j = nlohmann::json::parse(montecarlo_summary_json(rep, true, SamplingMode::Uniform));
  EXPECT_EQ(j["runs"], 0);
}

TEST(Models, MissingDirectory) {
  const fs::path p = scratch("empty");
  EXPECT_THROW(load_models(p.string()), MissingModels);
  fs::remove_all(p);
}
