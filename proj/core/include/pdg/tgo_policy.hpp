#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdg/ccs_dataset.hpp"

namespace pdg {

// Quadratic monomials over (H, S, w, v), intercept first:
// 1, H, S, w, v, H^2, S^2, w^2, v^2, HS, Hw, Hv, Sw, Sv, wv
struct FeatureMap {
  static constexpr int kTerms = 15;
  static const std::array<const char*, kTerms>& names();
  static Eigen::Matrix<double, kTerms, 1> raw(const ReducedGuidanceState& s);
};

struct LassoOptions {
  double tol = 1e-8;        // KKT residual, per-sample scaled
  long max_sweeps = 100000;
};

struct TgoPolicy {
  Eigen::VectorXd K;        // 15 coefficients on raw monomials, K[0] is the intercept
  Eigen::VectorXd beta;     // 14 coefficients on standardized monomials
  double intercept_std = 0.0;
  Eigen::VectorXd mean, sd; // standardization of monomials 1..14
  double mu = 0.0;          // penalty weight in the summed objective
  double rmse = 0.0;
  int sparsity = 0;         // count of |K_i| > 1e-12
  long sweeps = 0;
  double tgo_min = 100.0, tgo_max = 300.0;
};

// Minimizes 1/2 sum (t_i - pred_i)^2 + mu * ||beta||_1 on z-scored monomials
// with an unpenalized intercept. Throws InsufficientData, NonConvergence.
TgoPolicy fit_lasso(const std::vector<TgoRecord>& data, double mu, const LassoOptions& opts = {});

double eval_tgo_raw(const TgoPolicy& p, const ReducedGuidanceState& s);
double eval_tgo(const TgoPolicy& p, const ReducedGuidanceState& s);  // clamped

// Largest KKT violation of the summed objective, divided by the sample count.
double lasso_kkt_residual(const TgoPolicy& p, const std::vector<TgoRecord>& data);

struct LassoCvResult {
  std::vector<double> lambdas;  // per-sample penalty grid
  std::vector<double> cv_rmse, cv_se;
  std::size_t best = 0, chosen = 0;
  TgoPolicy policy;
};

// k-fold CV over mu = n * lambda, one-standard-error rule. Folds by index mod k.
LassoCvResult fit_lasso_cv(const std::vector<TgoRecord>& data, const std::vector<double>& lambdas,
                           int folds = 5, const LassoOptions& opts = {});
std::vector<double> default_lambda_grid();  // 1e-4 .. 1e1, 4 per decade

void save_tgo_policy(const TgoPolicy& p, const std::string& path);
TgoPolicy load_tgo_policy(const std::string& path);

}  // namespace pdg
