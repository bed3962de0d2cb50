#include "pdg/boundary.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "pdg/errors.hpp"

namespace pdg {

ReducedState2 reduce2(const ReducedGuidanceState& s) {
  if (!(s.v > 0.0) || !(s.w > 0.0)) throw UndefinedReduction("need v > 0 and w > 0");
  return {s.S / s.v, s.H / s.w};
}

Feature5 featurize(const ReducedState2& s) {
  Feature5 z;
  z << s.s1, s.s2, s.s1 * s.s1, s.s2 * s.s2, s.s1 * s.s2;
  return z;
}

double Level1Model::decision_std(const Feature5& Z) const {
  return w_std.dot(((Z - mean).array() / sd.array()).matrix()) + b_std;
}

namespace {

struct SmoResult {
  Eigen::VectorXd alpha;
  Feature5 w;
  double b = 0;
  long iter = 0;
};

// Fan, Chen & Lin second-order working set selection, linear kernel.
SmoResult smo(const std::vector<Feature5>& X, const std::vector<int>& y, double C,
              const SvmOptions& opts) {
  const int n = static_cast<int>(X.size());
  constexpr double tau = 1e-12;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);  // grad of 1/2 a'Qa - e'a
  std::vector<double> Kd(n);
  for (int i = 0; i < n; ++i) Kd[i] = X[i].squaredNorm();
  Feature5 w = Feature5::Zero();

  auto in_up = [&](int t) { return (y[t] > 0 && a[t] < C) || (y[t] < 0 && a[t] > 0); };
  auto in_low = [&](int t) { return (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < C); };

  long it = 0;
  for (;; ++it) {
    if (it >= opts.max_iter) throw NonConvergence("SMO hit max iterations");
    double gmax = -INFINITY, gmax2 = -INFINITY;
    int i = -1;
    for (int t = 0; t < n; ++t)
      if (in_up(t) && -y[t] * G[t] > gmax) {
        gmax = -y[t] * G[t];
        i = t;
      }
    int j = -1;
    double best = INFINITY;
    for (int t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double yg = y[t] * G[t];
      gmax2 = std::max(gmax2, yg);
      if (i < 0) continue;
      const double diff = gmax + yg;
      if (diff > 0) {
        double quad = Kd[i] + Kd[t] - 2.0 * X[i].dot(X[t]);
        if (quad <= 0) quad = tau;
        const double obj = -diff * diff / quad;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < opts.tol || i < 0 || j < 0) break;

    const double Kij = X[i].dot(X[j]);
    const double ai = a[i], aj = a[j];
    if (y[i] != y[j]) {
      double quad = Kd[i] + Kd[j] - 2.0 * Kij;
      if (quad <= 0) quad = tau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) { a[j] = 0; a[i] = diff; }
      } else if (a[i] < 0) {
        a[i] = 0; a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) { a[i] = C; a[j] = C - diff; }
      } else if (a[j] > C) {
        a[j] = C; a[i] = C + diff;
      }
    } else {
      double quad = Kd[i] + Kd[j] - 2.0 * Kij;
      if (quad <= 0) quad = tau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) { a[i] = C; a[j] = sum - C; }
      } else if (a[j] < 0) {
        a[j] = 0; a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) { a[j] = C; a[i] = sum - C; }
      } else if (a[i] < 0) {
        a[i] = 0; a[j] = sum;
      }
    }
    const Feature5 dw = y[i] * (a[i] - ai) * X[i] + y[j] * (a[j] - aj) * X[j];
    w += dw;
    for (int t = 0; t < n; ++t) G[t] += y[t] * X[t].dot(dw);
  }

  // offset from free vectors, else midpoint of the feasible interval
  double ub = INFINITY, lb = -INFINITY, sum = 0;
  int nfree = 0;
  for (int t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (a[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (a[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++nfree;
      sum += yg;
    }
  }
  const double rho = nfree > 0 ? sum / nfree : 0.5 * (ub + lb);
  // recompute w from alpha to drop accumulated drift
  Feature5 wx = Feature5::Zero();
  for (int t = 0; t < n; ++t) wx += a[t] * y[t] * X[t];
  return {a, wx, -rho, it};
}

}  // namespace

Level1Model fit_level1(const std::vector<SvmSample>& data, double gamma, const SvmOptions& opts) {
  bool pos = false, neg = false;
  for (const SvmSample& s : data) (s.d > 0 ? pos : neg) = true;
  if (!(pos && neg)) throw DegenerateLabels("SVM needs both labels");
  if (data.size() < 6) throw InsufficientData("SVM needs at least 6 samples");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");

  const auto n = data.size();
  Level1Model m;
  m.gamma = gamma;
  m.mean.setZero();
  for (const SvmSample& s : data) m.mean += s.Z;
  m.mean /= static_cast<double>(n);
  m.sd.setZero();
  for (const SvmSample& s : data) m.sd += (s.Z - m.mean).cwiseAbs2();
  m.sd = (m.sd / static_cast<double>(n)).cwiseSqrt();
  for (int j = 0; j < 5; ++j)
    if (!(m.sd[j] > 0.0)) m.sd[j] = 1.0;

  std::vector<Feature5> X(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X[i] = ((data[i].Z - m.mean).array() / m.sd.array()).matrix();
    y[i] = data[i].d > 0 ? 1 : -1;
  }
  const SmoResult r = smo(X, y, gamma, opts);
  m.alpha = r.alpha;
  m.w_std = r.w;
  m.b_std = r.b;
  m.iterations = r.iter;
  m.c = (m.w_std.array() / m.sd.array()).matrix();
  m.b = m.b_std - m.c.dot(m.mean);
  m.slack.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double f = m.decision_std(data[i].Z);
    m.slack[static_cast<Eigen::Index>(i)] = std::max(0.0, 1.0 - y[i] * f);
    if (r.alpha[static_cast<Eigen::Index>(i)] > 0) m.support.push_back(static_cast<int>(i));
  }
  return m;
}

SvmKkt level1_kkt(const Level1Model& m, const std::vector<SvmSample>& data) {
  SvmKkt k;
  const double C = m.gamma;
  double eq = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double a = m.alpha[static_cast<Eigen::Index>(i)];
    const int y = data[i].d > 0 ? 1 : -1;
    eq += a * y;
    k.dual_feasibility = std::max({k.dual_feasibility, -a, a - C});
    const double yf = y * m.decision_std(data[i].Z);
    double viol = 0;
    if (a <= 0) viol = std::max(0.0, 1.0 - yf);
    else if (a >= C) viol = std::max(0.0, yf - 1.0);
    else viol = std::abs(yf - 1.0);
    k.complementarity = std::max(k.complementarity, viol);
    const double zeta = m.slack[static_cast<Eigen::Index>(i)];
    k.primal_feasibility = std::max({k.primal_feasibility, 1.0 - zeta - yf, -zeta});
  }
  k.dual_feasibility = std::max(k.dual_feasibility, std::abs(eq));
  return k;
}

GammaCvResult fit_level1_cv(const std::vector<SvmSample>& data, const std::vector<double>& gammas,
                            int folds, const SvmOptions& opts) {
  if (gammas.empty() || folds < 2) throw std::invalid_argument("bad CV setup");
  GammaCvResult out;
  out.gammas = gammas;
  double best = -1;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    long tp = 0, fn = 0, tn = 0, fp = 0;
    for (int k = 0; k < folds; ++k) {
      std::vector<SvmSample> train, test;
      for (std::size_t i = 0; i < data.size(); ++i)
        (static_cast<int>(i % folds) == k ? test : train).push_back(data[i]);
      const Level1Model m = fit_level1(train, gammas[g], opts);
      for (const SvmSample& s : test) {
        const bool pred = m.decision_std(s.Z) > 0;
        if (s.d > 0) (pred ? tp : fn)++;
        else (pred ? fp : tn)++;
      }
    }
    const double tpr = tp + fn > 0 ? double(tp) / double(tp + fn) : 1.0;
    const double tnr = tn + fp > 0 ? double(tn) / double(tn + fp) : 1.0;
    const double ba = 0.5 * (tpr + tnr);
    out.balanced_accuracy.push_back(ba);
    if (ba > best) {  // strict: ties keep the smaller gamma
      best = ba;
      out.chosen = g;
    }
  }
  out.model = fit_level1(data, gammas[out.chosen], opts);
  return out;
}

ConicCoefficients to_general_conic(const Level1Model& m) {
  ConicCoefficients q{m.c[2], m.c[4], m.c[3], m.c[0], m.c[1], m.b};
  if (q.A == 0.0 && q.B == 0.0 && q.C == 0.0) throw DegenerateConic("quadratic part is zero");
  return q;
}

CanonicalConic canonicalize(const ConicCoefficients& q) {
  const double scale = std::max({std::abs(q.A), std::abs(q.B), std::abs(q.C)});
  if (scale == 0.0) throw DegenerateConic("quadratic part is zero");
  const double den = q.B * q.B - 4.0 * q.A * q.C;
  if (std::abs(den) <= 1e-12 * scale * scale) throw DegenerateCenter("B^2 - 4AC is zero");
  CanonicalConic c;
  c.h = (2.0 * q.C * q.D - q.B * q.E) / den;
  c.k = (2.0 * q.A * q.E - q.B * q.D) / den;
  c.lambda = q(c.h, c.k);
  const double fscale = std::max({scale, std::abs(q.D), std::abs(q.E), std::abs(q.F)});
  if (std::abs(c.lambda) <= 1e-14 * fscale) throw ZeroLambda("conic passes through its center");
  c.Abar = -q.A / c.lambda;
  c.Bbar = -q.B / c.lambda;
  c.Cbar = -q.C / c.lambda;
  if (c.Bbar == 0.0) {
    c.theta = 0.0;
  } else {
    const double dc = c.Cbar - c.Abar;
    c.theta = std::atan((dc + std::sqrt(c.Bbar * c.Bbar + dc * dc)) / c.Bbar);
  }
  principal_coeffs(c, c.theta, c.M1, c.M2);
  return c;
}

void principal_coeffs(const CanonicalConic& c, double theta, double& M1, double& M2) {
  const double cs = std::cos(theta), sn = std::sin(theta);
  M1 = c.Abar * cs * cs + c.Bbar * cs * sn + c.Cbar * sn * sn;
  M2 = c.Abar * sn * sn - c.Bbar * cs * sn + c.Cbar * cs * cs;
}

ConicCoefficients from_canonical(const CanonicalConic& c) {
  const double cs = std::cos(c.theta), sn = std::sin(c.theta);
  const double A = c.M1 * cs * cs + c.M2 * sn * sn;
  const double B = 2.0 * (c.M1 - c.M2) * cs * sn;
  const double C = c.M1 * sn * sn + c.M2 * cs * cs;
  ConicCoefficients q;
  q.A = A;
  q.B = B;
  q.C = C;
  q.D = -2.0 * A * c.h - B * c.k;
  q.E = -B * c.h - 2.0 * C * c.k;
  q.F = A * c.h * c.h + B * c.h * c.k + C * c.k * c.k - 1.0;
  return q;
}

double eval_g(const ConicBoundary& b, const Level2Shift& d, const ReducedState2& s) {
  const CanonicalConic& c = b.canonical;
  const double th = c.theta + d.dtheta;
  double M1, M2;
  principal_coeffs(c, th, M1, M2);
  return eval_g_impl(c.h + d.dh, c.k + d.dk, std::cos(th), std::sin(th), M1, M2, b.sign, s.s1,
                     s.s2);
}

double eval_g(const ConicBoundary& b, const ReducedState2& s) { return eval_g(b, b.delta, s); }

ConicBoundary boundary_from_level1(const Level1Model& m, double eta) {
  ConicBoundary b;
  b.canonical = canonicalize(to_general_conic(m));
  // g_raw = -f / lambda at zero shift, so this sign gives g = f / |lambda|.
  b.sign = b.canonical.lambda > 0 ? -1.0 : 1.0;
  b.eta = eta;
  return b;
}

namespace {

struct NegEval {
  const ConicBoundary& b;
  const std::vector<ReducedState2>& pts;  // d = -1 only
  double eta;

  // Every uncontrollable sample at g <= -eta.
  bool feasible(const Level2Shift& d) const {
    const CanonicalConic& c = b.canonical;
    const double th = c.theta + d.dtheta;
    double M1, M2;
    principal_coeffs(c, th, M1, M2);
    const double cs = std::cos(th), sn = std::sin(th), h = c.h + d.dh, k = c.k + d.dk;
    for (const ReducedState2& p : pts)
      if (eval_g_impl(h, k, cs, sn, M1, M2, b.sign, p.s1, p.s2) > -eta) return false;
    return true;
  }
};

bool lex_less(const Level2Shift& a, const Level2Shift& b) {
  return std::tie(a.dh, a.dk, a.dtheta) < std::tie(b.dh, b.dk, b.dtheta);
}

}  // namespace

Level2Report fit_level2(const ConicBoundary& boundary0, const std::vector<ReducedState2>& s,
                        const std::vector<int>& d, const Level2Options& opts) {
  if (s.size() != d.size()) throw std::invalid_argument("fit_level2: size mismatch");
  Level2Report rep;
  ConicBoundary b = boundary0;
  b.delta = {};
  b.eta = opts.eta;

  std::vector<ReducedState2> neg;
  double s1lo = INFINITY, s1hi = -INFINITY, s2lo = INFINITY, s2hi = -INFINITY;
  for (std::size_t i = 0; i < s.size(); ++i) {
    s1lo = std::min(s1lo, s[i].s1);
    s1hi = std::max(s1hi, s[i].s1);
    s2lo = std::min(s2lo, s[i].s2);
    s2hi = std::max(s2hi, s[i].s2);
    const bool ctrl = eval_g(b, s[i]) > 0;
    if (ctrl != (d[i] > 0)) ++rep.level1_misclassified;
    if (d[i] < 0) {
      neg.push_back(s[i]);
      if (ctrl) ++rep.level1_false_controllable;
    }
  }
  const NegEval ev{b, neg, opts.eta};

  Level2Shift best{};
  if (!ev.feasible(best)) {
    // coarse grid, visited in order of (norm, lexicographic)
    const int n = std::max(3, opts.grid | 1);
    const double span[3] = {s1hi - s1lo, s2hi - s2lo, opts.theta_span};
    std::vector<Level2Shift> grid;
    grid.reserve(static_cast<std::size_t>(n) * n * n);
    const int half = n / 2;
    for (int i = -half; i <= half; ++i)
      for (int j = -half; j <= half; ++j)
        for (int l = -half; l <= half; ++l)
          grid.push_back({span[0] * i / half, span[1] * j / half, span[2] * l / half});
    std::sort(grid.begin(), grid.end(), [](const Level2Shift& a, const Level2Shift& b2) {
      const double na = a.norm(), nb = b2.norm();
      if (na != nb) return na < nb;
      return lex_less(a, b2);
    });
    bool found = false;
    for (const Level2Shift& g : grid) {
      if (ev.feasible(g)) {
        ++rep.grid_feasible;
        best = g;
        found = true;
        break;
      }
    }
    if (!found) throw NoFeasiblePerturbation("no zero-loss shift inside the grid bounds");

    // Radial pattern search: move the direction of the shift, then take the
    // first feasible point along the new ray (bisection from the origin).
    auto edge = [&](const Level2Shift& p) {
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ev.feasible({p.dh * mid, p.dk * mid, p.dtheta * mid})) hi = mid; else lo = mid;
      }
      return Level2Shift{p.dh * hi, p.dk * hi, p.dtheta * hi};
    };
    best = edge(best);
    double stepv[3] = {span[0] / half, span[1] / half, span[2] / half};
    for (int guard = 0; guard < 100000; ++guard) {
      bool moved = false;
      for (int o = 0; o < 27; ++o) {
        if (o == 13) continue;
        const Level2Shift c{best.dh + (o / 9 - 1) * stepv[0], best.dk + (o / 3 % 3 - 1) * stepv[1],
                            best.dtheta + (o % 3 - 1) * stepv[2]};
        const double cn = c.norm();
        if (cn == 0.0) continue;
        const double r = best.norm() / cn;
        for (const Level2Shift& p : {c, Level2Shift{c.dh * r, c.dk * r, c.dtheta * r}}) {
          if (!ev.feasible(p)) continue;
          const Level2Shift q = edge(p);
          if (q.norm() < best.norm() * (1.0 - 1e-12)) {
            best = q;
            moved = true;
          }
        }
      }
      if (moved) continue;
      if (std::max({stepv[0], stepv[1], stepv[2]}) > opts.tol) {
        for (double& st : stepv) st *= 0.5;
        continue;
      }
      // local minimality witness: 5% toward the origin must be infeasible
      const Level2Shift c{best.dh * 0.95, best.dk * 0.95, best.dtheta * 0.95};
      if (!ev.feasible(c)) break;
      best = edge(c);
    }
  }

  b.delta = best;
  rep.boundary = b;
  rep.max_neg_g = -INFINITY;
  long pos = 0, lost = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double g = eval_g(b, s[i]);
    if (d[i] < 0) rep.max_neg_g = std::max(rep.max_neg_g, g);
    else {
      ++pos;
      if (g <= 0) ++lost;
    }
  }
  rep.shrinkage = pos > 0 ? double(lost) / double(pos) : 0.0;
  return rep;
}

std::vector<PolylinePoint> boundary_polyline(const ConicBoundary& b, int n) {
  const CanonicalConic& c = b.canonical;
  const double th = c.theta + b.delta.dtheta;
  double M1, M2;
  principal_coeffs(c, th, M1, M2);
  const double h = c.h + b.delta.dh, k = c.k + b.delta.dk;
  std::vector<PolylinePoint> out;
  int seg = 0;
  bool open = false;
  for (int i = 0; i <= n; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / n;
    const double a = phi - th;
    const double M = M1 * std::cos(a) * std::cos(a) + M2 * std::sin(a) * std::sin(a);
    if (M > 1e-12) {
      const double r = 1.0 / std::sqrt(M);
      out.push_back({seg, h + r * std::cos(phi), k + r * std::sin(phi)});
      open = true;
    } else if (open) {
      ++seg;
      open = false;
    }
  }
  return out;
}

void write_polyline_csv(const std::vector<std::pair<std::string, ConicBoundary>>& curves,
                        const std::string& path, int n) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "curve,segment,s1,s2\n";
  for (const auto& [name, b] : curves)
    for (const PolylinePoint& p : boundary_polyline(b, n))
      os << name << ',' << p.segment << ',' << format_double(p.s1) << ',' << format_double(p.s2)
         << '\n';
}

void save_boundary(const ConicBoundary& b, const Level1Model& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  const CanonicalConic& c = b.canonical;
  auto f = [](double x) { return format_double(x); };
  os << "pdg-boundary 1\n";
  os << "h " << f(c.h) << "\nk " << f(c.k) << "\ntheta " << f(c.theta) << "\nM1 " << f(c.M1)
     << "\nM2 " << f(c.M2) << "\nlambda " << f(c.lambda) << "\nAbar " << f(c.Abar) << "\nBbar "
     << f(c.Bbar) << "\nCbar " << f(c.Cbar) << '\n';
  os << "delta " << f(b.delta.dh) << ' ' << f(b.delta.dk) << ' ' << f(b.delta.dtheta) << '\n';
  os << "eta " << f(b.eta) << "\nsign " << f(b.sign) << '\n';
  os << "gamma " << f(m.gamma) << '\n';
  auto vec = [&](const char* k, const Feature5& v) {
    os << k;
    for (int i = 0; i < 5; ++i) os << ' ' << f(v[i]);
    os << '\n';
  };
  vec("c", m.c);
  os << "b " << f(m.b) << '\n';
  vec("w_std", m.w_std);
  os << "b_std " << f(m.b_std) << '\n';
  vec("z_mean", m.mean);
  vec("z_sd", m.sd);
}

BoundaryFile load_boundary(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingModels("cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line != "pdg-boundary 1") throw FormatError("not a boundary file: " + path);
  BoundaryFile out;
  CanonicalConic& c = out.boundary.canonical;
  Level1Model& m = out.level1;
  std::map<std::string, double*> scalars = {
      {"h", &c.h},       {"k", &c.k},       {"theta", &c.theta}, {"M1", &c.M1},
      {"M2", &c.M2},     {"lambda", &c.lambda}, {"Abar", &c.Abar}, {"Bbar", &c.Bbar},
      {"Cbar", &c.Cbar}, {"eta", &out.boundary.eta}, {"sign", &out.boundary.sign},
      {"gamma", &m.gamma}, {"b", &m.b},   {"b_std", &m.b_std}};
  std::map<std::string, Feature5*> vecs = {
      {"c", &m.c}, {"w_std", &m.w_std}, {"z_mean", &m.mean}, {"z_sd", &m.sd}};
  int seen = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    ++seen;
    if (auto it = scalars.find(key); it != scalars.end()) {
      if (!(ls >> *it->second)) throw FormatError("bad value for " + key);
    } else if (auto iv = vecs.find(key); iv != vecs.end()) {
      for (int i = 0; i < 5; ++i)
        if (!(ls >> (*iv->second)[i])) throw FormatError("bad vector " + key);
    } else if (key == "delta") {
      Level2Shift& d = out.boundary.delta;
      if (!(ls >> d.dh >> d.dk >> d.dtheta)) throw FormatError("bad delta");
    } else {
      throw FormatError("unknown key " + key);
    }
  }
  if (seen < 19) throw FormatError("boundary file incomplete");
  return out;
}

}  // namespace pdg
