#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pdg/errors.hpp"
#include "pdg/tgo_policy.hpp"

using namespace pdg;

namespace {

Eigen::Matrix<double, 15, 1> phi(const ReducedGuidanceState& s) {
  const double H = s.H, S = s.S, w = s.w, v = s.v;
  Eigen::Matrix<double, 15, 1> f;
  f << 1, H, S, w, v, H * H, S * S, w * w, v * v, H * S, H * w, H * v, S * w, S * v, w * v;
  return f;
}

std::vector<TgoRecord> synthetic(int n, double lo, double hi, const Eigen::Matrix<double, 15, 1>& K,
                                 double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::normal_distribution<double> e(0.0, 1.0);
  std::vector<TgoRecord> out;
  for (int i = 0; i < n; ++i) {
    TgoRecord r;
    r.state = {u(rng), u(rng), u(rng), u(rng)};
    r.t_go_star = K.dot(phi(r.state)) + noise * e(rng);
    out.push_back(r);
  }
  return out;
}

Eigen::Matrix<double, 15, 1> some_K() {
  Eigen::Matrix<double, 15, 1> K;
  K << 3.0, 1.5, -2.0, 0.5, 0.0, 0.25, -0.75, 0.0, 1.0, 0.5, 0.0, -0.5, 0.3, 0.0, 0.8;
  return K;
}

// Accelerated projected gradient on the split (beta+, beta-) >= 0 form,
// with its own standardization (population standard deviation).
Eigen::VectorXd oracle_beta(const std::vector<TgoRecord>& data, double mu) {
  const int n = static_cast<int>(data.size());
  Eigen::MatrixXd F(n, 14);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    F.row(i) = phi(data[i].state).tail<14>().transpose();
    y[i] = data[i].t_go_star;
  }
  const Eigen::RowVectorXd m = F.colwise().mean();
  Eigen::MatrixXd Z = F.rowwise() - m;
  for (int j = 0; j < 14; ++j) Z.col(j) /= std::sqrt(Z.col(j).squaredNorm() / n);
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::MatrixXd G = Z.transpose() * Z;
  const Eigen::VectorXd c = Z.transpose() * yc;
  const double L = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().maxCoeff();

  Eigen::VectorXd p = Eigen::VectorXd::Zero(14), q = p, yp = p, yq = q;
  double tk = 1.0;
  for (int it = 0; it < 1000000; ++it) {
    const Eigen::VectorXd grad = G * (yp - yq) - c;
    const Eigen::VectorXd pn = (yp - (grad.array() + mu).matrix() / L).cwiseMax(0.0);
    const Eigen::VectorXd qn = (yq - (-grad.array() + mu).matrix() / L).cwiseMax(0.0);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    yp = pn + ((tk - 1.0) / tn) * (pn - p);
    yq = qn + ((tk - 1.0) / tn) * (qn - q);
    p = pn;
    q = qn;
    tk = tn;
  }
  return p - q;
}

}  // namespace

TEST(FeatureMap, Order) {
  const auto& n = FeatureMap::names();
  EXPECT_STREQ(n[0], "1");
  EXPECT_STREQ(n[1], "H");
  EXPECT_STREQ(n[9], "HS");
  EXPECT_STREQ(n[14], "wv");
  const ReducedGuidanceState s{2.0, 3.0, 5.0, 7.0};
  EXPECT_EQ(FeatureMap::raw(s), phi(s));
}

TEST(Lasso, ExactRecoveryWithoutPenalty) {
  const auto K = some_K();
  const auto data = synthetic(300, 0.5, 2.0, K, 0.0, 1);
  const TgoPolicy p = fit_lasso(data, 0.0);
  for (int i = 0; i < 15; ++i) EXPECT_NEAR(p.K[i], K[i], 1e-6) << i;
  EXPECT_LE(p.rmse, 1e-8);
}

TEST(Lasso, LargePenaltyGivesMean) {
  const auto data = synthetic(100, 0.5, 2.0, some_K(), 0.1, 2);
  double mean = 0.0;
  for (const auto& r : data) mean += r.t_go_star;
  mean /= data.size();
  const TgoPolicy p = fit_lasso(data, 1e9);
  EXPECT_NEAR(p.K[0], mean, 1e-9 * std::abs(mean));
  for (int i = 1; i < 15; ++i) EXPECT_EQ(p.K[i], 0.0);
  EXPECT_EQ(p.sparsity, 1);
}

TEST(Lasso, MatchesProjectedGradientOracle) {
  const auto data = synthetic(50, 0.5, 2.0, some_K(), 0.2, 3);
  for (double mu : {0.5, 3.0}) {
    const TgoPolicy p = fit_lasso(data, mu);
    const Eigen::VectorXd ref = oracle_beta(data, mu);
    for (int j = 0; j < 14; ++j) EXPECT_NEAR(p.beta[j], ref[j], 1e-4) << "mu " << mu << " j " << j;
  }
}

TEST(Lasso, KktResidual) {
  const auto data = synthetic(400, 0.5, 2.0, some_K(), 0.3, 4);
  for (double mu : {0.0, 0.01, 1.0, 10.0, 100.0}) {
    const TgoPolicy p = fit_lasso(data, mu);
    EXPECT_LE(lasso_kkt_residual(p, data), 1e-6) << mu;
  }
}

TEST(Lasso, PathIsMonotone) {
  const auto data = synthetic(200, 0.5, 2.0, some_K(), 0.3, 5);
  double prev = std::numeric_limits<double>::infinity();
  for (double mu : {0.01, 0.1, 1.0, 5.0, 20.0, 100.0, 1000.0}) {
    const double l1 = fit_lasso(data, mu).beta.lpNorm<1>();
    EXPECT_LE(l1, prev * (1.0 + 1e-9)) << mu;
    prev = l1;
  }
}

TEST(Lasso, InsufficientData) {
  EXPECT_THROW(fit_lasso(synthetic(14, 0.5, 2.0, some_K(), 0.0, 6), 0.0), InsufficientData);
}

TEST(Lasso, CrossValidationOneStandardError) {
  const auto data = synthetic(250, 0.5, 2.0, some_K(), 0.5, 7);
  const LassoCvResult cv = fit_lasso_cv(data, default_lambda_grid(), 5);
  ASSERT_EQ(cv.lambdas.size(), 21u);
  EXPECT_DOUBLE_EQ(cv.lambdas.front(), 1e-4);
  EXPECT_NEAR(cv.lambdas.back(), 10.0, 1e-12);
  EXPECT_GE(cv.lambdas[cv.chosen], cv.lambdas[cv.best]);
  EXPECT_LE(cv.cv_rmse[cv.chosen], cv.cv_rmse[cv.best] + cv.cv_se[cv.best]);
  EXPECT_NEAR(cv.policy.mu, cv.lambdas[cv.chosen] * data.size(), 1e-9 * cv.policy.mu);
}

TEST(Policy, InterceptOnlyAndClamp) {
  TgoPolicy p;
  p.K = Eigen::VectorXd::Zero(15);
  p.beta = Eigen::VectorXd::Zero(14);
  p.mean = Eigen::VectorXd::Zero(14);
  p.sd = Eigen::VectorXd::Ones(14);
  p.K[0] = p.intercept_std = 170.0;
  const ReducedGuidanceState s{28500, 5500, 59, 336};
  EXPECT_DOUBLE_EQ(eval_tgo(p, s), 170.0);
  p.K[0] = p.intercept_std = 1000.0;
  EXPECT_DOUBLE_EQ(eval_tgo(p, s), p.tgo_max);
  p.K[0] = p.intercept_std = -5.0;
  EXPECT_DOUBLE_EQ(eval_tgo(p, s), p.tgo_min);
}

TEST(Policy, RawAndStandardizedAgree) {
  const auto data = synthetic(120, 0.5, 2.0, some_K(), 0.2, 8);
  const TgoPolicy p = fit_lasso(data, 0.3);
  for (const auto& r : data) {
    const double raw = p.K.dot(phi(r.state));
    EXPECT_NEAR(eval_tgo_raw(p, r.state), raw, 1e-9 * std::max(1.0, std::abs(raw)));
  }
}

TEST(Policy, SaveLoadRoundTrip) {
  const auto data = synthetic(120, 0.5, 2.0, some_K(), 0.2, 9);
  const TgoPolicy p = fit_lasso(data, 0.3);
  const auto path = (std::filesystem::temp_directory_path() / "pdg_tgo_test.txt").string();
  save_tgo_policy(p, path);
  const TgoPolicy q = load_tgo_policy(path);
  EXPECT_EQ(p.K, q.K);
  EXPECT_EQ(p.beta, q.beta);
  for (const auto& r : data) EXPECT_EQ(eval_tgo_raw(p, r.state), eval_tgo_raw(q, r.state));
  { std::ofstream(path) << "not a policy\n"; }
  EXPECT_THROW(load_tgo_policy(path), FormatError);
  std::filesystem::remove(path);
}
