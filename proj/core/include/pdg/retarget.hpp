#pragma once

#include <cmath>

#include "pdg/boundary.hpp"
#include "pdg/ccs_dataset.hpp"
#include "pdg/guidance.hpp"
#include "pdg/tgo_policy.hpp"

namespace pdg {

// Onboard constants of the shifted conic.
template <class T>
struct ConicParams {
  T h, k, c, s, M1, M2, sign;
};

ConicParams<double> onboard_params(const ConicBoundary& b);

template <class T>
struct RetargetCore {
  T s1, s2, g;
  T s1_projected;
  T shift;        // S' - S, m
  bool feasible;  // g > 0
  bool intersects;
};

// Fixed arithmetic path: conic evaluation, one quadratic solve, root pick.
// Everything is computed unconditionally so the operation count does not
// depend on the input.
template <class T>
RetargetCore<T> retarget_core(const ConicParams<T>& p, const T& S, const T& H, const T& w,
                              const T& v, const T& inset) {
  using std::abs;
  using std::sqrt;
  RetargetCore<T> r;
  r.s1 = S / v;
  r.s2 = H / w;
  r.g = eval_g_impl(p.h, p.k, p.c, p.s, p.M1, p.M2, p.sign, r.s1, r.s2);
  r.feasible = r.g > T(0);

  const T y = r.s2 - p.k;
  const T cc = p.c * p.c, ss = p.s * p.s, cs = p.c * p.s;
  const T a = p.M1 * cc + p.M2 * ss;
  const T b = T(2) * (p.M1 - p.M2) * cs * y;
  const T c0 = (p.M1 * ss + p.M2 * cc) * y * y - T(1);
  const T disc = b * b - T(4) * a * c0;
  r.intersects = disc >= T(0);
  const T sq = sqrt(r.intersects ? disc : T(0));
  const T x1 = (-b - sq) / (T(2) * a);
  const T x2 = (-b + sq) / (T(2) * a);
  const T r1 = p.h + x1, r2 = p.h + x2;
  const T d1 = abs(r1 - r.s1), d2 = abs(r2 - r.s1);
  const bool near1 = d1 < d2, near2 = d2 < d1, far1 = r1 > r2;
  const bool pick1 = near1 || (!near2 && far1);
  const T x = pick1 ? x1 : x2;
  // inward along s1: the side where g increases
  const T slope = p.sign * (T(2) * a * x + b);
  const T neg_inset = -inset;
  const T step = slope > T(0) ? inset : neg_inset;
  r.s1_projected = (pick1 ? r1 : r2) + step;
  r.shift = r.s1_projected * v - S;
  return r;
}

struct RetargetDecision {
  bool feasible = true;
  ReducedState2 s;
  ReducedState2 s_projected;
  double g = 0.0;
  double target_shift = 0.0;  // m, positive moves the site further along the ground track
  Vec3 new_target = Vec3::Zero();
};

bool assess_feasibility(const ConicBoundary& b, const ReducedGuidanceState& state);

// Nearest real root of g(s1', s2) = 0 with s2 fixed; ties go to the larger s1'.
ReducedState2 project_to_boundary(const ConicBoundary& b, const ReducedState2& s);

RetargetDecision compute_retarget(const ConicBoundary& b, const LanderState& state,
                                  const Vec3& current_target, double inset = 0.0);

struct GuidedOptions {
  RolloutOptions rollout;
  bool retarget = true;
  double tgo_margin = 2.0;  // s added to the policy output
  double inset = 0.0;
};

struct GuidedResult {
  RolloutResult rollout;
  RetargetDecision decision;
  double t_go = 0.0;
  Vec3 target = Vec3::Zero();
};

// One decision at phase start, then the base policy to completion.
GuidedResult guided_descent(const LanderState& initial, const Scenario& sc,
                            const TgoPolicy& tgo, const ConicBoundary& boundary,
                            const GuidedOptions& opts);

}  // namespace pdg
