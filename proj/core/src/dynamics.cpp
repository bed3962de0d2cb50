#include "pdg/dynamics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "pdg/errors.hpp"

namespace pdg {

void ConstraintSet::validate() const {
  if (!(rho_min > 0.0 && rho_min < rho_max)) throw ConfigError("need 0 < rho_min < rho_max");
  if (!(thrust_rate_max > 0.0)) throw ConfigError("thrust_rate_max must be positive");
  if (!(theta_lim > 0.0 && theta_lim < std::numbers::pi / 2)) throw ConfigError("theta_lim out of (0, pi/2)");
  if (!(vh_max > 0.0)) throw ConfigError("vh_max must be positive");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!g.allFinite()) throw ConfigError("gravity must be finite");
  if (!(center_depth > 0.0)) throw ConfigError("center_depth must be positive");
}

const char* to_string(Constraint c) {
  switch (c) {
    case Constraint::ThrustBounds: return "ThrustBounds";
    case Constraint::ThrustRate: return "ThrustRate";
    case Constraint::SubSurface: return "SubSurface";
    case Constraint::AttitudeLimit: return "AttitudeLimit";
    case Constraint::HorizontalSpeed: return "HorizontalSpeed";
  }
  return "?";
}

namespace {

struct Deriv {
  Vec3 dr, dv;
  double dm;
};

inline Deriv rhs(const Vec3& v, double m, const Vec3& g, const Vec3& u, double Tc, double alpha) {
  return {v, g + u * (Tc / m), -alpha * Tc};
}

}  // namespace

StepResult step(const LanderState& state, const Vec3& a_net, double dt,
                const ConstraintSet& limits, std::optional<double> T_prev,
                const StepOptions& opts) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const Vec3 a = a_net - limits.g;
  const double an = a.norm();
  const Vec3 u = an > 0.0 ? Vec3(a / an) : Vec3(-limits.g.normalized());
  const double demand = state.m * an;

  double Tc = demand;
  switch (opts.mode) {
    case ThrustMode::Clamped:
      Tc = std::clamp(demand, limits.rho_min, limits.rho_max);
      if (T_prev) {
        const double d = limits.thrust_rate_max * dt;
        Tc = std::clamp(Tc, *T_prev - d, *T_prev + d);
      }
      break;
    case ThrustMode::Unclamped:
      break;
    case ThrustMode::Off:
      Tc = 0.0;
      break;
  }

  const int n = std::max(1, opts.substeps);
  const double h = dt / n;
  Vec3 r = state.r, v = state.v;
  double m = state.m;
  const Vec3& g = limits.g;
  for (int i = 0; i < n; ++i) {
    const Deriv k1 = rhs(v, m, g, u, Tc, limits.alpha);
    const Deriv k2 = rhs(v + 0.5 * h * k1.dv, m + 0.5 * h * k1.dm, g, u, Tc, limits.alpha);
    const Deriv k3 = rhs(v + 0.5 * h * k2.dv, m + 0.5 * h * k2.dm, g, u, Tc, limits.alpha);
    const Deriv k4 = rhs(v + h * k3.dv, m + h * k3.dm, g, u, Tc, limits.alpha);
    r += h / 6.0 * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
    v += h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    m += h / 6.0 * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
  }
  if (!r.allFinite() || !v.allFinite() || !std::isfinite(m) || !(m > 0.0))
    throw NonFiniteState("integration produced an invalid state");

  StepResult out;
  out.state = {state.t + dt, r, v, m};
  StepRecord& rec = out.record;
  rec.state = out.state;
  rec.a_cmd = a_net;
  rec.a_actual = g + u * (Tc / state.m);
  rec.T_c = Tc;
  rec.T_demand = demand;
  rec.T_prev = T_prev ? *T_prev : NAN;
  rec.dt = dt;
  rec.theta = opts.mode == ThrustMode::Off ? 0.0 : std::acos(std::clamp(u.z(), -1.0, 1.0));
  if (opts.target) rec.violations = check_constraints(rec, *opts.target, limits);
  return out;
}

std::vector<Violation> check_constraints(const StepRecord& rec, const Vec3& target_r,
                                         const ConstraintSet& limits) {
  std::vector<Violation> out;
  const double t = rec.state.t;
  if (rec.T_c < limits.rho_min)
    out.push_back({Constraint::ThrustBounds, limits.rho_min - rec.T_c, t});
  else if (rec.T_c > limits.rho_max)
    out.push_back({Constraint::ThrustBounds, rec.T_c - limits.rho_max, t});
  if (std::isfinite(rec.T_prev) && rec.dt > 0.0) {
    // small slack for the round trip through the clamp
    const double excess = std::abs(rec.T_c - rec.T_prev) - limits.thrust_rate_max * rec.dt;
    if (excess > 1e-9 * limits.rho_max) out.push_back({Constraint::ThrustRate, excess, t});
  }
  const double floor = target_r.z() - limits.subsurface_tol;
  if (rec.state.r.z() < floor)
    out.push_back({Constraint::SubSurface, floor - rec.state.r.z(), t});
  if (rec.theta > limits.theta_lim)
    out.push_back({Constraint::AttitudeLimit, rec.theta - limits.theta_lim, t});
  const Vec3 center = target_r - Vec3(0.0, 0.0, limits.center_depth);
  const Vec3 rhat = (rec.state.r - center).normalized();
  const Vec3& v = rec.state.v;
  const double vh = (v - v.dot(rhat) * rhat).norm();
  if (vh >= limits.vh_max) out.push_back({Constraint::HorizontalSpeed, vh - limits.vh_max, t});
  return out;
}

bool convergence_indicator(const RolloutResult& result, const TerminalTarget& target,
                           const TerminalTolerances& tol, const ConstraintSet& limits) {
  if (result.aborted || !result.violated.empty()) return false;
  const LanderState& s = result.terminal;
  return (s.r - target.rf).norm() <= tol.pos && (s.v - target.vf).norm() <= tol.vel &&
         s.m >= limits.m_terminal_min;
}

std::string trace_csv_header() { return "t,rx,ry,rz,vx,vy,vz,m,Tc,theta,ax,ay,az"; }

void write_trace_csv(const RolloutResult& result, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << trace_csv_header() << '\n';
  char buf[64];
  auto put = [&](double x, bool last) {
    std::snprintf(buf, sizeof buf, "%.9g", x);
    os << buf << (last ? '\n' : ',');
  };
  for (const StepRecord& rec : result.trace) {
    const LanderState& s = rec.state;
    put(s.t, false);
    for (int i = 0; i < 3; ++i) put(s.r[i], false);
    for (int i = 0; i < 3; ++i) put(s.v[i], false);
    put(s.m, false);
    put(rec.T_c, false);
    put(rec.theta, false);
    for (int i = 0; i < 3; ++i) put(rec.a_cmd[i], i == 2);
  }
}

}  // namespace pdg
