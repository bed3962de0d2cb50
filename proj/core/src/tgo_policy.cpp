#include "pdg/tgo_policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Cholesky>

#include "pdg/errors.hpp"

namespace pdg {

const std::array<const char*, FeatureMap::kTerms>& FeatureMap::names() {
  static const std::array<const char*, kTerms> n = {"1",   "H",   "S",   "w",  "v",
                                                    "H^2", "S^2", "w^2", "v^2", "HS",
                                                    "Hw",  "Hv",  "Sw",  "Sv",  "wv"};
  return n;
}

Eigen::Matrix<double, FeatureMap::kTerms, 1> FeatureMap::raw(const ReducedGuidanceState& s) {
  const double H = s.H, S = s.S, w = s.w, v = s.v;
  Eigen::Matrix<double, kTerms, 1> f;
  f << 1.0, H, S, w, v, H * H, S * S, w * w, v * v, H * S, H * w, H * v, S * w, S * v, w * v;
  return f;
}

namespace {

constexpr int kP = FeatureMap::kTerms - 1;

struct Design {
  Eigen::MatrixXd Z;  // standardized, n x 14
  Eigen::VectorXd y;
  Eigen::VectorXd mean, sd;
  double ybar = 0.0;
};

Design standardize(const std::vector<TgoRecord>& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Design d;
  Eigen::MatrixXd F(n, kP);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    F.row(i) = FeatureMap::raw(data[i].state).tail<kP>().transpose();
    d.y[i] = data[i].t_go_star;
  }
  d.mean = F.colwise().mean().transpose();
  d.sd.resize(kP);
  for (int j = 0; j < kP; ++j) {
    const double s = std::sqrt((F.col(j).array() - d.mean[j]).square().sum() / static_cast<double>(n));
    d.sd[j] = s > 0.0 ? s : 0.0;
  }
  d.Z.resize(n, kP);
  for (int j = 0; j < kP; ++j)
    d.Z.col(j) = d.sd[j] > 0.0 ? Eigen::VectorXd((F.col(j).array() - d.mean[j]) / d.sd[j])
                               : Eigen::VectorXd::Zero(n);
  d.ybar = d.y.mean();
  return d;
}

double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

double kkt(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, const Eigen::VectorXd& beta,
           double mu) {
  const Eigen::VectorXd g = G * beta - c;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (G(j, j) == 0.0) continue;
    const double r = beta[j] != 0.0 ? std::abs(g[j] + mu * (beta[j] > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(g[j]) - mu);
    worst = std::max(worst, r);
  }
  return worst;
}

// Exact solve on the current active set with signs fixed; accepted only if
// the signs hold and KKT is met.
bool polish(const Eigen::MatrixXd& G, const Eigen::VectorXd& c, Eigen::VectorXd& beta, double mu,
            double tol_abs) {
  // without a penalty the signs carry no condition: plain least squares
  const bool ols = mu == 0.0;
  std::vector<int> A;
  for (int j = 0; j < beta.size(); ++j)
    if (ols ? G(j, j) != 0.0 : beta[j] != 0.0) A.push_back(j);
  if (A.empty()) return kkt(G, c, beta, mu) <= tol_abs;
  const int k = static_cast<int>(A.size());
  Eigen::MatrixXd GA(k, k);
  Eigen::VectorXd rhs(k);
  for (int a = 0; a < k; ++a) {
    rhs[a] = ols ? c[A[a]] : c[A[a]] - mu * (beta[A[a]] > 0 ? 1.0 : -1.0);
    for (int b = 0; b < k; ++b) GA(a, b) = G(A[a], A[b]);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(GA);
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd x = ldlt.solve(rhs);
  Eigen::VectorXd cand = Eigen::VectorXd::Zero(beta.size());
  for (int a = 0; a < k; ++a) {
    if (!std::isfinite(x[a])) return false;
    if (!ols && ((x[a] > 0) != (beta[A[a]] > 0) || x[a] == 0.0)) return false;
    cand[A[a]] = x[a];
  }
  if (kkt(G, c, cand, mu) > tol_abs) return false;
  beta = cand;
  return true;
}

TgoPolicy fit_on(const Design& d, double mu, const LassoOptions& opts, const Eigen::VectorXd* warm) {
  const double n = static_cast<double>(d.y.size());
  const Eigen::VectorXd yc = d.y.array() - d.ybar;
  const Eigen::MatrixXd G = d.Z.transpose() * d.Z;
  const Eigen::VectorXd c = d.Z.transpose() * yc;
  const double tol_abs = opts.tol * n;

  Eigen::VectorXd beta = warm ? *warm : Eigen::VectorXd::Zero(kP);
  Eigen::VectorXd Gb = G * beta;
  long sweep = 0;
  bool done = kkt(G, c, beta, mu) <= tol_abs;
  while (!done) {
    if (sweep >= opts.max_sweeps) throw NonConvergence("lasso coordinate descent hit max sweeps");
    ++sweep;
    for (int j = 0; j < kP; ++j) {
      const double gjj = G(j, j);
      if (gjj == 0.0) continue;
      const double rho = c[j] - (Gb[j] - gjj * beta[j]);
      const double nb = soft(rho, mu) / gjj;
      const double delta = nb - beta[j];
      if (delta != 0.0) {
        beta[j] = nb;
        Gb += delta * G.col(j);
      }
    }
    if (kkt(G, c, beta, mu) <= tol_abs) break;
    if (sweep % 10 == 0 && polish(G, c, beta, mu, tol_abs)) break;
    if (sweep % 1000 == 0) Gb = G * beta;  // refresh accumulated rounding
  }
  polish(G, c, beta, mu, tol_abs);

  TgoPolicy p;
  p.mu = mu;
  p.sweeps = sweep;
  p.beta = beta;
  p.intercept_std = d.ybar;
  p.mean = d.mean;
  p.sd = d.sd;
  p.K = Eigen::VectorXd::Zero(FeatureMap::kTerms);
  double b0 = d.ybar;
  for (int j = 0; j < kP; ++j) {
    if (d.sd[j] == 0.0) continue;
    p.K[j + 1] = beta[j] / d.sd[j];
    b0 -= beta[j] * d.mean[j] / d.sd[j];
  }
  p.K[0] = b0;
  const Eigen::VectorXd resid = yc - d.Z * beta;
  p.rmse = std::sqrt(resid.squaredNorm() / n);
  p.sparsity = static_cast<int>((p.K.array().abs() > 1e-12).count());
  return p;
}

}  // namespace

TgoPolicy fit_lasso(const std::vector<TgoRecord>& data, double mu, const LassoOptions& opts) {
  if (data.size() < static_cast<std::size_t>(FeatureMap::kTerms))
    throw InsufficientData("lasso needs at least 15 records");
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
  return fit_on(standardize(data), mu, opts, nullptr);
}

double eval_tgo_raw(const TgoPolicy& p, const ReducedGuidanceState& s) {
  const auto f = FeatureMap::raw(s);
  double out = p.intercept_std;
  for (int j = 0; j < kP; ++j)
    if (p.sd[j] > 0.0) out += p.beta[j] * (f[j + 1] - p.mean[j]) / p.sd[j];
  return out;
}

double eval_tgo(const TgoPolicy& p, const ReducedGuidanceState& s) {
  const double t = eval_tgo_raw(p, s);
  if (!std::isfinite(t)) return p.tgo_max;
  return std::clamp(t, p.tgo_min, p.tgo_max);
}

double lasso_kkt_residual(const TgoPolicy& p, const std::vector<TgoRecord>& data) {
  const Design d = standardize(data);
  const Eigen::VectorXd yc = d.y.array() - d.ybar;
  const Eigen::MatrixXd G = d.Z.transpose() * d.Z;
  const Eigen::VectorXd c = d.Z.transpose() * yc;
  return kkt(G, c, p.beta, p.mu) / static_cast<double>(d.y.size());
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 20; ++i) g.push_back(std::pow(10.0, -4.0 + 0.25 * i));
  return g;
}

LassoCvResult fit_lasso_cv(const std::vector<TgoRecord>& data, const std::vector<double>& lambdas,
                           int folds, const LassoOptions& opts) {
  if (data.size() < static_cast<std::size_t>(FeatureMap::kTerms * 2))
    throw InsufficientData("cross-validation needs at least 30 records");
  if (folds < 2 || lambdas.empty()) throw std::invalid_argument("bad CV setup");
  LassoCvResult out;
  out.lambdas = lambdas;
  std::sort(out.lambdas.begin(), out.lambdas.end());
  const std::size_t L = out.lambdas.size();
  std::vector<std::vector<double>> err(L, std::vector<double>(folds));

  for (int k = 0; k < folds; ++k) {
    std::vector<TgoRecord> train, test;
    for (std::size_t i = 0; i < data.size(); ++i)
      (static_cast<int>(i % folds) == k ? test : train).push_back(data[i]);
    const Design d = standardize(train);
    const double n = static_cast<double>(train.size());
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(kP);
    for (std::size_t l = L; l-- > 0;) {  // large to small, warm started
      const TgoPolicy p = fit_on(d, n * out.lambdas[l], opts, &warm);
      warm = p.beta;
      double se = 0.0;
      for (const TgoRecord& r : test) se += std::pow(eval_tgo_raw(p, r.state) - r.t_go_star, 2);
      err[l][k] = std::sqrt(se / static_cast<double>(test.size()));
    }
  }
  out.cv_rmse.resize(L);
  out.cv_se.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    double m = 0.0;
    for (double e : err[l]) m += e;
    m /= folds;
    double v = 0.0;
    for (double e : err[l]) v += (e - m) * (e - m);
    out.cv_rmse[l] = m;
    out.cv_se[l] = std::sqrt(v / (folds - 1)) / std::sqrt(static_cast<double>(folds));
  }
  out.best = static_cast<std::size_t>(
      std::min_element(out.cv_rmse.begin(), out.cv_rmse.end()) - out.cv_rmse.begin());
  const double limit = out.cv_rmse[out.best] + out.cv_se[out.best];
  out.chosen = out.best;
  for (std::size_t l = out.best; l < L; ++l)
    if (out.cv_rmse[l] <= limit) out.chosen = l;
  out.policy = fit_lasso(data, static_cast<double>(data.size()) * out.lambdas[out.chosen], opts);
  return out;
}

namespace {

void put_vec(std::ostream& os, const char* key, const Eigen::VectorXd& v) {
  os << key;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << format_double(v[i]);
  os << '\n';
}

Eigen::VectorXd get_vec(std::istringstream& is, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(is >> v[i])) throw FormatError("short vector in model file");
  return v;
}

}  // namespace

void save_tgo_policy(const TgoPolicy& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "pdg-tgo-policy 1\n";
  os << "terms";
  for (const char* n : FeatureMap::names()) os << ' ' << n;
  os << '\n';
  put_vec(os, "K", p.K);
  put_vec(os, "beta", p.beta);
  os << "intercept_std " << format_double(p.intercept_std) << '\n';
  put_vec(os, "mean", p.mean);
  put_vec(os, "sd", p.sd);
  os << "mu " << format_double(p.mu) << '\n';
  os << "rmse " << format_double(p.rmse) << '\n';
  os << "sparsity " << p.sparsity << '\n';
  os << "tgo_range " << format_double(p.tgo_min) << ' ' << format_double(p.tgo_max) << '\n';
}

TgoPolicy load_tgo_policy(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingModels("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "pdg-tgo-policy 1") throw FormatError("not a tgo policy file: " + path);
  TgoPolicy p;
  std::map<std::string, bool> got;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    got[key] = true;
    if (key == "terms") continue;
    if (key == "K") p.K = get_vec(ls, FeatureMap::kTerms);
    else if (key == "beta") p.beta = get_vec(ls, kP);
    else if (key == "mean") p.mean = get_vec(ls, kP);
    else if (key == "sd") p.sd = get_vec(ls, kP);
    else if (key == "intercept_std") ls >> p.intercept_std;
    else if (key == "mu") ls >> p.mu;
    else if (key == "rmse") ls >> p.rmse;
    else if (key == "sparsity") ls >> p.sparsity;
    else if (key == "tgo_range") ls >> p.tgo_min >> p.tgo_max;
    else throw FormatError("unknown key " + key);
  }
  for (const char* k : {"K", "beta", "mean", "sd", "intercept_std", "mu", "tgo_range"})
    if (!got.count(k)) throw FormatError(std::string("missing ") + k);
  return p;
}

}  // namespace pdg
