#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pdg/errors.hpp"
#include "pdg/retarget.hpp"

using namespace pdg;

namespace {

ConicBoundary disc(double h, double k, double radius) {
  ConicBoundary b;
  b.canonical.h = h;
  b.canonical.k = k;
  b.canonical.M1 = b.canonical.M2 = 1.0 / (radius * radius);
  b.canonical.Abar = b.canonical.Cbar = b.canonical.M1;
  b.canonical.lambda = -1.0;
  b.sign = -1.0;  // controllable inside
  return b;
}

// Scalar that counts every arithmetic operation, comparison and math call.
struct Counted {
  double x = 0.0;
  static inline long ops = 0;

  Counted() = default;
  Counted(double v) : x(v) {}

  friend Counted operator+(Counted a, Counted b) { ++ops; return a.x + b.x; }
  friend Counted operator-(Counted a, Counted b) { ++ops; return a.x - b.x; }
  friend Counted operator*(Counted a, Counted b) { ++ops; return a.x * b.x; }
  friend Counted operator/(Counted a, Counted b) { ++ops; return a.x / b.x; }
  friend Counted operator-(Counted a) { ++ops; return -a.x; }
  friend bool operator<(Counted a, Counted b) { ++ops; return a.x < b.x; }
  friend bool operator>(Counted a, Counted b) { ++ops; return a.x > b.x; }
  friend bool operator>=(Counted a, Counted b) { ++ops; return a.x >= b.x; }
  friend Counted sqrt(Counted a) { ++ops; return std::sqrt(a.x); }
  friend Counted abs(Counted a) { ++ops; return std::abs(a.x); }
};

ConicParams<Counted> counted(const ConicParams<double>& p) {
  return {p.h, p.k, p.c, p.s, p.M1, p.M2, p.sign};
}

}  // namespace

TEST(Projection, UnitCircle) {
  const ConicBoundary b = disc(0, 0, 1);
  const ReducedState2 p = project_to_boundary(b, {2, 0});
  EXPECT_NEAR(p.s1, 1.0, 1e-12);
  EXPECT_EQ(p.s2, 0.0);
  EXPECT_NEAR(project_to_boundary(b, {-3, 0}).s1, -1.0, 1e-12);
  EXPECT_THROW(project_to_boundary(b, {0, 2}), NoHorizontalIntersection);
  // equidistant roots: the larger s1 wins
  EXPECT_NEAR(project_to_boundary(b, {0, 0}).s1, 1.0, 1e-12);
  EXPECT_NEAR(project_to_boundary(b, {0, 0.6}).s1, 0.8, 1e-12);
}

TEST(Projection, IdempotentAndNearest) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3, 3), r(0.5, 2.5), th(-1.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    ConicBoundary b;
    CanonicalConic c;
    c.h = u(rng);
    c.k = u(rng);
    c.theta = th(rng);
    c.M1 = 1.0 / (r(rng) * r(rng));
    c.M2 = (i % 2 ? 1.0 : -1.0) / (r(rng) * r(rng));  // ellipses and hyperbolas
    b.canonical = canonicalize(from_canonical(c));
    const ReducedState2 s{u(rng) * 3, u(rng)};
    ReducedState2 p;
    try {
      p = project_to_boundary(b, s);
    } catch (const NoHorizontalIntersection&) {
      continue;
    }
    EXPECT_LE(std::abs(eval_g(b, p)), 1e-9) << i;
    const ReducedState2 q = project_to_boundary(b, p);
    EXPECT_NEAR(q.s1, p.s1, 1e-9 * std::max(1.0, std::abs(p.s1))) << i;
    // brute-force scan of the horizontal line for a closer root
    const double d = std::abs(p.s1 - s.s1);
    const int n = 4000;
    for (int j = 0; j < n; ++j) {
      const double a = s.s1 - d + 2.0 * d * j / n, e = a + 2.0 * d / n;
      if (std::abs(a - s.s1) < d * 0.999 && std::abs(e - s.s1) < d * 0.999)
        EXPECT_FALSE(eval_g(b, {a, s.s2}) * eval_g(b, {e, s.s2}) < 0.0) << i;
    }
  }
}

TEST(Projection, InsetMovesInward) {
  const ConicBoundary b = disc(0, 0, 1);
  const RetargetCore<double> r = retarget_core(onboard_params(b), 2.0, 0.0, 1.0, 1.0, 0.1);
  EXPECT_NEAR(r.s1_projected, 0.9, 1e-12);
  EXPECT_GT(eval_g(b, {r.s1_projected, 0.0}), 0.0);
}

TEST(Retarget, FeasibleStateKeepsTarget) {
  const ConicBoundary b = disc(80, 90, 100);
  const Vec3 target(0, 0, 1300);
  const LanderState x{0.0, target + Vec3(-45000, 0, 4500), Vec3(300, 0, -50), 1050};
  const RetargetDecision d = compute_retarget(b, x, target);
  EXPECT_TRUE(d.feasible);
  EXPECT_EQ(d.target_shift, 0.0);
  EXPECT_EQ(d.new_target, target);
  EXPECT_NEAR(d.s.s1, 150.0, 1e-12);
  EXPECT_NEAR(d.s.s2, 90.0, 1e-12);
}

TEST(Retarget, InfeasibleStateLandsOnBoundary) {
  const ConicBoundary b = disc(80, 90, 100);
  const Vec3 target(0, 0, 1300);
  for (double az : {0.0, 0.7, -2.0}) {
    const Vec3 u(std::cos(az), std::sin(az), 0.0);
    const LanderState x{0.0, target - 60000.0 * u + Vec3(0, 0, 4500), 300.0 * u + Vec3(0, 0, -50), 1050};
    const RetargetDecision d = compute_retarget(b, x, target);
    EXPECT_FALSE(d.feasible);
    // s1 = 200 projects to the nearer root 180
    EXPECT_NEAR(d.s_projected.s1, 180.0, 1e-9);
    EXPECT_NEAR(d.target_shift, 180.0 * 300.0 - 60000.0, 1e-6);
    const ReducedState2 after = reduce2(reduce_state(x, d.new_target));
    EXPECT_NEAR(after.s1, 180.0, 1e-9);
    EXPECT_NEAR(after.s2, 90.0, 1e-9);
    EXPECT_LE(std::abs(eval_g(b, after)), 1e-9);
    EXPECT_NEAR(d.new_target.z(), target.z(), 1e-12);
  }
}

TEST(Retarget, Errors) {
  const ConicBoundary b = disc(80, 90, 100);
  const Vec3 target(0, 0, 1300);
  const LanderState hover{0.0, target + Vec3(-1000, 0, 500), Vec3(300, 0, 0), 1050};
  EXPECT_THROW(compute_retarget(b, hover, target), UndefinedReduction);
  EXPECT_THROW(assess_feasibility(b, reduce_state(hover, target)), UndefinedReduction);
  // s2 = 300 is above the disc
  const LanderState high{0.0, target + Vec3(-60000, 0, 15000), Vec3(300, 0, -50), 1050};
  EXPECT_THROW(compute_retarget(b, high, target), RetargetInfeasible);
}

TEST(Retarget, OperationCountIsInputIndependent) {
  const std::vector<ConicBoundary> bs{disc(80, 90, 100), disc(0, 0, 1)};
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> S(1e3, 6e4), H(1e2, 1e4), w(5, 80), v(50, 400);
  long expect = -1;
  int feasible = 0, infeasible = 0, miss = 0;
  for (const ConicBoundary& b : bs) {
    const auto p = counted(onboard_params(b));
    for (int i = 0; i < 500; ++i) {
      Counted::ops = 0;
      const auto r = retarget_core<Counted>(p, S(rng), H(rng), w(rng), v(rng), 0.0);
      if (!r.intersects) ++miss;
      else if (r.feasible) ++feasible;
      else ++infeasible;
      if (expect < 0) expect = Counted::ops;
      EXPECT_EQ(Counted::ops, expect);
    }
  }
  EXPECT_GT(expect, 0);
  EXPECT_GT(feasible, 0);
  EXPECT_GT(infeasible, 0);
  EXPECT_GT(miss, 0);
}

TEST(GuidedDescent, FeasibleStartMatchesBasePolicy) {
  const Scenario sc;
  const ReducedGuidanceState nom{28500, 5500, 59, 336};
  const LanderState x0 = reconstruct_state(nom, sc);
  TgoPolicy tgo;
  tgo.K = Eigen::VectorXd::Zero(15);
  tgo.beta = Eigen::VectorXd::Zero(14);
  tgo.mean = Eigen::VectorXd::Zero(14);
  tgo.sd = Eigen::VectorXd::Ones(14);
  tgo.K[0] = tgo.intercept_std = 166.0;
  GuidedOptions o;
  o.tgo_margin = 0.0;
  const GuidedResult g = guided_descent(x0, sc, tgo, disc(85, 93, 1e6), o);
  EXPECT_TRUE(g.decision.feasible);
  EXPECT_EQ(g.target, sc.target);
  const RolloutResult base =
      rollout_base_policy(x0, make_problem(x0, sc, o.rollout.limits.g), 166.0, o.rollout);
  ASSERT_EQ(g.rollout.trace.size(), base.trace.size());
  EXPECT_EQ(g.rollout.terminal.r, base.terminal.r);
  EXPECT_EQ(g.rollout.terminal.m, base.terminal.m);
  EXPECT_EQ(g.rollout.converged, base.converged);
}
