#include "pdg/retarget.hpp"

#include "pdg/errors.hpp"

namespace pdg {

ConicParams<double> onboard_params(const ConicBoundary& b) {
  const CanonicalConic& c = b.canonical;
  const double th = c.theta + b.delta.dtheta;
  double M1, M2;
  principal_coeffs(c, th, M1, M2);
  return {c.h + b.delta.dh, c.k + b.delta.dk, std::cos(th), std::sin(th), M1, M2, b.sign};
}

bool assess_feasibility(const ConicBoundary& b, const ReducedGuidanceState& state) {
  return eval_g(b, reduce2(state)) > 0.0;
}

ReducedState2 project_to_boundary(const ConicBoundary& b, const ReducedState2& s) {
  // S = s1, v = 1, H = s2, w = 1 reuses the onboard path directly in s-space
  const RetargetCore<double> r = retarget_core(onboard_params(b), s.s1, s.s2, 1.0, 1.0, 0.0);
  if (!r.intersects || !std::isfinite(r.s1_projected))
    throw NoHorizontalIntersection("horizontal line misses the boundary");
  return {r.s1_projected, s.s2};
}

RetargetDecision compute_retarget(const ConicBoundary& b, const LanderState& state,
                                  const Vec3& current_target, double inset) {
  const ReducedGuidanceState red = reduce_state(state, current_target);
  if (!(red.v > 0.0) || !(red.w > 0.0)) throw UndefinedReduction("need v > 0 and w > 0");
  const RetargetCore<double> r =
      retarget_core(onboard_params(b), red.S, red.H, red.w, red.v, inset);
  RetargetDecision d;
  d.s = {r.s1, r.s2};
  d.g = r.g;
  d.new_target = current_target;
  d.s_projected = d.s;
  if (r.feasible) return d;
  if (!r.intersects || !std::isfinite(r.s1_projected))
    throw RetargetInfeasible("no horizontal intersection with the boundary");
  d.feasible = false;
  d.s_projected = {r.s1_projected, r.s2};
  d.target_shift = r.shift;
  Vec3 u(state.v.x(), state.v.y(), 0.0);
  u.normalize();
  d.new_target = current_target + d.target_shift * u;
  return d;
}

GuidedResult guided_descent(const LanderState& initial, const Scenario& sc,
                            const TgoPolicy& tgo, const ConicBoundary& boundary,
                            const GuidedOptions& opts) {
  GuidedResult out;
  out.target = sc.target;
  if (opts.retarget) {
    out.decision = compute_retarget(boundary, initial, sc.target, opts.inset);
    out.target = out.decision.new_target;
  } else {
    const ReducedGuidanceState red = reduce_state(initial, sc.target);
    out.decision.s = reduce2(red);
    out.decision.s_projected = out.decision.s;
    out.decision.g = eval_g(boundary, out.decision.s);
    out.decision.feasible = out.decision.g > 0.0;
    out.decision.new_target = sc.target;
  }
  Scenario shifted = sc;
  shifted.target = out.target;
  out.t_go = eval_tgo(tgo, reduce_state(initial, out.target)) + opts.tgo_margin;
  out.rollout = rollout_base_policy(initial, make_problem(initial, shifted, opts.rollout.limits.g),
                                    out.t_go, opts.rollout);
  return out;
}

}  // namespace pdg
