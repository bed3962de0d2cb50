#include "pdg/guidance.hpp"

#include <algorithm>
#include <cmath>

#include "pdg/errors.hpp"

namespace pdg {

Vec3 PolyCoeffs::velocity_delta(double t) const {
  return t * (C[0] + t * (C[1] / 2.0 + t * (C[2] / 3.0 + t * C[3] / 4.0)));
}

Vec3 PolyCoeffs::position_delta(double t) const {
  return t * t * (C[0] / 2.0 + t * (C[1] / 6.0 + t * (C[2] / 12.0 + t * C[3] / 20.0)));
}

Eigen::Matrix4d cubic_system_matrix(double T) {
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
  Eigen::Matrix4d M;
  M << 1.0, 0.0, 0.0, 0.0,
       1.0, T, T2, T3,
       T, T2 / 2.0, T3 / 3.0, T4 / 4.0,
       T2 / 2.0, T3 / 6.0, T4 / 12.0, T5 / 20.0;
  return M;
}

PolyCoeffs solve_cubic_coeffs(const GuidanceProblem& bc, double t_go) {
  if (!(t_go > 0.0) || !std::isfinite(t_go)) throw SingularSystem("t_go must be positive");
  Eigen::Matrix4d M = cubic_system_matrix(t_go);
  Eigen::Matrix<double, 4, 3> B;
  B.row(0) = bc.a0.transpose();
  B.row(1) = bc.af.transpose();
  B.row(2) = (bc.vf - bc.v0).transpose();
  B.row(3) = (bc.rf - bc.r0 - bc.v0 * t_go).transpose();

  // Row equilibration so the pivot-ratio condition estimate is scale free.
  for (int i = 0; i < 4; ++i) {
    const double s = M.row(i).cwiseAbs().maxCoeff();
    M.row(i) /= s;
    B.row(i) /= s;
  }

  double pmax = 0.0, pmin = INFINITY;
  for (int k = 0; k < 4; ++k) {
    int p = k;
    for (int i = k + 1; i < 4; ++i)
      if (std::abs(M(i, k)) > std::abs(M(p, k))) p = i;
    if (p != k) {
      M.row(k).swap(M.row(p));
      B.row(k).swap(B.row(p));
    }
    const double piv = M(k, k);
    pmax = std::max(pmax, std::abs(piv));
    pmin = std::min(pmin, std::abs(piv));
    if (piv == 0.0) throw SingularSystem("zero pivot");
    for (int i = k + 1; i < 4; ++i) {
      const double f = M(i, k) / piv;
      if (f == 0.0) continue;
      M.row(i).tail(4 - k) -= f * M.row(k).tail(4 - k);
      B.row(i) -= f * B.row(k);
    }
  }
  if (pmax / pmin > 1e14) throw SingularSystem("condition estimate above 1e14");

  Eigen::Matrix<double, 4, 3> X;
  for (int k = 3; k >= 0; --k) {
    Eigen::RowVector3d acc = B.row(k);
    for (int j = k + 1; j < 4; ++j) acc -= M(k, j) * X.row(j);
    X.row(k) = acc / M(k, k);
  }
  PolyCoeffs out;
  for (int k = 0; k < 4; ++k) out.C[k] = X.row(k).transpose();
  return out;
}

GuidanceCommand guidance_cycle(const LanderState& state, const GuidanceProblem& problem,
                               double t_go, const GuidanceOptions& opts,
                               std::optional<GuidanceFrame>* last_frame) {
  if (t_go < opts.dt - 1e-12) throw NearTerminal("t_go below one guidance cycle");

  const Vec3 center = problem.rf - opts.center_depth * opts.up;
  const Vec3 rc = state.r - center;
  const Vec3 rfc = problem.rf - center;
  GuidanceFrame frame;
  try {
    frame = build_guidance_frame(rc, rfc);
    if (last_frame) *last_frame = frame;
  } catch (const DegenerateFrame&) {
    if (!last_frame || !last_frame->has_value()) throw;
    frame = **last_frame;
  }

  GuidanceProblem g;
  g.r0 = to_guidance(frame, rc);
  g.v0 = to_guidance(frame, state.v);
  g.a0 = to_guidance(frame, problem.a0);
  g.rf = to_guidance(frame, rfc);
  g.vf = to_guidance(frame, problem.vf);
  g.af = to_guidance(frame, problem.af);

  const PolyCoeffs c = solve_cubic_coeffs(g, t_go);
  const double tau = opts.eval == CommandEval::CycleEnd ? opts.dt : 0.0;
  Vec3 aG = c.accel(tau);

  // Out-of-plane axis: finite-horizon double-integrator regulator to zero.
  const double rperp = g.r0.z() - g.rf.z();
  const double vperp = g.v0.z() - g.vf.z();
  aG.z() = -6.0 / (t_go * t_go) * rperp - 4.0 / t_go * vperp;

  return {to_navigation(frame, aG), t_go - opts.dt};
}

RolloutResult rollout_base_policy(const LanderState& initial, const GuidanceProblem& problem,
                                  double t_go, const RolloutOptions& opts) {
  if (!(t_go >= 0.0) || !std::isfinite(t_go)) throw std::invalid_argument("rollout: bad t_go");
  const double dt = opts.guidance.dt;
  RolloutResult res;
  res.initial = initial;
  if (opts.record_trace) res.trace.reserve(static_cast<size_t>(t_go / dt) + 2);

  StepOptions sopts;
  sopts.mode = opts.mode;
  sopts.substeps = opts.substeps;
  sopts.target = problem.rf;

  LanderState s = initial;
  GuidanceProblem p = problem;
  std::optional<GuidanceFrame> frame;
  std::optional<double> T_prev;
  double remaining = t_go;
  double sat_run = 0.0;
  const double sat_level = opts.limits.rho_max * (1.0 + opts.saturation_rel_tol);

  while (remaining > 1e-9) {
    const double h = std::min(dt, remaining);
    Vec3 a_cmd;
    if (remaining > opts.guidance.tgo_floor - 1e-9 && remaining >= dt - 1e-12) {
      GuidanceOptions gopts = opts.guidance;
      gopts.dt = h;
      a_cmd = guidance_cycle(s, p, remaining, gopts, &frame).a_net;
    } else {
      a_cmd = p.af;  // terminal hold
    }

    StepResult st = step(s, a_cmd, h, opts.limits, T_prev, sopts);
    T_prev = st.record.T_c;
    s = st.state;
    p.a0 = st.record.a_actual;

    if (st.record.T_demand > sat_level) {
      sat_run += h;
      res.time_saturated += h;
      res.max_saturation_run = std::max(res.max_saturation_run, sat_run);
    } else {
      sat_run = 0.0;
    }
    res.max_theta = std::max(res.max_theta, st.record.theta);

    bool violated = false;
    for (const Violation& v : st.record.violations) {
      violated = true;
      const bool seen = std::any_of(res.violated.begin(), res.violated.end(),
                                    [&](const Violation& w) { return w.id == v.id; });
      if (!seen) res.violated.push_back(v);
    }
    if (opts.record_trace) res.trace.push_back(std::move(st.record));
    remaining -= h;
    if (violated && opts.abort_on_violation) {
      res.aborted = remaining > 1e-9;
      break;
    }
  }
  res.terminal = s;
  res.fuel_used = initial.m - s.m;
  res.converged = convergence_indicator(res, problem.terminal(), opts.tol, opts.limits);
  return res;
}

}  // namespace pdg
