#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pdg/ccs_dataset.hpp"
#include "pdg/config.hpp"
#include "pdg/errors.hpp"
#include "pdg/guidance.hpp"

using namespace pdg;

namespace {

double det3(const Eigen::Matrix3d& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

double det4(const Eigen::Matrix4d& m) {
  // cofactor expansion along the first row
  double d = 0.0;
  for (int c = 0; c < 4; ++c) {
    Eigen::Matrix3d minor;
    for (int i = 1; i < 4; ++i)
      for (int j = 0, jj = 0; j < 4; ++j)
        if (j != c) minor(i - 1, jj++) = m(i, j);
    d += ((c % 2) ? -1.0 : 1.0) * m(0, c) * det3(minor);
  }
  return d;
}

// Cramer's rule on the per-axis system, written out independently of the library.
Eigen::Vector4d cramer(double T, double a0, double af, double dv, double dr) {
  Eigen::Matrix4d A;
  A << 1, 0, 0, 0,
       1, T, T * T, T * T * T,
       T, T * T / 2, T * T * T / 3, T * T * T * T / 4,
       T * T / 2, T * T * T / 6, T * T * T * T / 12, T * T * T * T * T / 20;
  const Eigen::Vector4d b(a0, af, dv, dr);
  const double D = det4(A);
  Eigen::Vector4d x;
  for (int i = 0; i < 4; ++i) {
    Eigen::Matrix4d Ai = A;
    Ai.col(i) = b;
    x[i] = det4(Ai) / D;
  }
  return x;
}

}  // namespace

TEST(CubicSolve, HomogeneousIsZero) {
  GuidanceProblem p;
  const PolyCoeffs c = solve_cubic_coeffs(p, 10.0);
  for (const Vec3& ci : c.C) EXPECT_EQ(ci.norm(), 0.0);
}

TEST(CubicSolve, MatchesCramer) {
  GuidanceProblem p;
  p.rf = Vec3(100.0, 0.0, -40.0);
  p.v0 = Vec3(3.0, 0.0, 1.0);
  p.a0 = Vec3(0.2, 0.0, -0.1);
  p.af = Vec3(0.0, 0.0, 0.5);
  const double T = 10.0;
  const PolyCoeffs c = solve_cubic_coeffs(p, T);
  for (int ax = 0; ax < 3; ++ax) {
    const Eigen::Vector4d x = cramer(T, p.a0[ax], p.af[ax], p.vf[ax] - p.v0[ax],
                                     p.rf[ax] - p.r0[ax] - p.v0[ax] * T);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(c.C[i][ax], x[i], 1e-10 * std::max(1.0, std::abs(x[i])));
  }
}

TEST(CubicSolve, RandomCramerAndBoundaryExactness) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-3e4, 3e4), vel(-400, 400), acc(-5, 5), tg(1, 300);
  for (int trial = 0; trial < 1000; ++trial) {
    GuidanceProblem p;
    p.r0 = Vec3(pos(rng), pos(rng), pos(rng));
    p.rf = Vec3(pos(rng), pos(rng), pos(rng));
    p.v0 = Vec3(vel(rng), vel(rng), vel(rng));
    p.vf = Vec3(vel(rng), vel(rng), vel(rng));
    p.a0 = Vec3(acc(rng), acc(rng), acc(rng));
    p.af = Vec3(acc(rng), acc(rng), acc(rng));
    const double T = tg(rng);
    const PolyCoeffs c = solve_cubic_coeffs(p, T);
    auto rel = [](const Vec3& got, const Vec3& want) {
      return (got - want).norm() / std::max(1.0, want.norm());
    };
    EXPECT_LE(rel(c.accel(0.0), p.a0), 1e-9) << trial;
    EXPECT_LE(rel(c.accel(T), p.af), 1e-9) << trial;
    EXPECT_LE(rel(p.v0 + c.velocity_delta(T), p.vf), 1e-9) << trial;
    EXPECT_LE(rel(p.r0 + p.v0 * T + c.position_delta(T), p.rf), 1e-9) << trial;
    if (trial < 50) {
      const Eigen::Vector4d x = cramer(T, p.a0.x(), p.af.x(), p.vf.x() - p.v0.x(),
                                       p.rf.x() - p.r0.x() - p.v0.x() * T);
      for (int i = 0; i < 4; ++i)
        EXPECT_NEAR(c.C[i].x(), x[i], 1e-10 * std::max(1.0, x.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(CubicSolve, NonPositiveHorizon) {
  GuidanceProblem p;
  EXPECT_THROW(solve_cubic_coeffs(p, 0.0), SingularSystem);
  EXPECT_THROW(solve_cubic_coeffs(p, -1.0), SingularSystem);
}

TEST(GuidanceCycle, RejectsHorizonBelowCycle) {
  const RunConfig cfg;
  const LanderState x0 = cfg.initial_state(cfg.nominal);
  GuidanceOptions o;
  EXPECT_THROW(guidance_cycle(x0, make_problem(x0, cfg.scenario, cfg.limits.g), 0.05, o), NearTerminal);
}

TEST(GuidanceCycle, FixedPointReturnsTerminalAcceleration) {
  const Vec3 target(0, 0, 1300);
  LanderState s{0.0, target, Vec3::Zero(), 900.0};
  GuidanceProblem p;
  p.r0 = s.r;
  p.rf = target;
  p.a0 = p.af = Vec3(0, 0, 1.52);
  GuidanceOptions o;
  o.eval = CommandEval::Initial;
  // frame with the vertical in plane: e_x up, e_y downrange, e_z = e_x x e_y
  GuidanceFrame f0;
  f0.basis.col(0) = Vec3(0, 0, 1);
  f0.basis.col(1) = Vec3(1, 0, 0);
  f0.basis.col(2) = Vec3(0, 1, 0);
  std::optional<GuidanceFrame> frame = f0;
  const GuidanceCommand c = guidance_cycle(s, p, 30.0, o, &frame);
  EXPECT_LE((c.a_net - p.af).norm(), 1e-12);

  p.a0 = p.af = Vec3::Zero();
  o.eval = CommandEval::CycleEnd;
  EXPECT_LE(guidance_cycle(s, p, 30.0, o, &frame).a_net.norm(), 1e-12);
}

TEST(Rollout, PlanarConfinement) {
  const RunConfig cfg;
  const LanderState x0 = cfg.initial_state(cfg.nominal);
  const RolloutResult r =
      rollout_base_policy(x0, make_problem(x0, cfg.scenario, cfg.limits.g), 170.0, cfg.rollout_options());
  ASSERT_FALSE(r.trace.empty());
  for (const StepRecord& rec : r.trace) {
    EXPECT_LE(std::abs(rec.a_cmd.y()), 1e-12);
    EXPECT_LE(std::abs(rec.state.r.y()), 1e-6);
  }
}

TEST(CubicSolve, ResolveAlongPlanIsIdempotent) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-3e4, 3e4), vel(-300, 300), acc(-4, 4), tg(20, 250),
      frac(0.05, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    GuidanceProblem p;
    p.r0 = Vec3(pos(rng), pos(rng), pos(rng));
    p.rf = Vec3(pos(rng), pos(rng), pos(rng));
    p.v0 = Vec3(vel(rng), vel(rng), vel(rng));
    p.a0 = Vec3(acc(rng), acc(rng), acc(rng));
    p.af = Vec3(acc(rng), acc(rng), acc(rng));
    const double T = tg(rng), t = frac(rng) * T;
    const PolyCoeffs c = solve_cubic_coeffs(p, T);
    GuidanceProblem q = p;
    q.r0 = p.r0 + p.v0 * t + c.position_delta(t);
    q.v0 = p.v0 + c.velocity_delta(t);
    q.a0 = c.accel(t);
    const PolyCoeffs d = solve_cubic_coeffs(q, T - t);
    const double scale = std::max({1.0, c.accel(t).norm(), p.af.norm()});
    for (double tau : {0.0, 0.1, 0.5 * (T - t), T - t})
      EXPECT_LE((d.accel(tau) - c.accel(t + tau)).norm(), 1e-8 * scale) << trial;
  }
}

TEST(Rollout, ClosedLoopTracksOpenLoop) {
  RunConfig cfg;
  RolloutOptions o = cfg.rollout_options();
  o.mode = ThrustMode::Unclamped;
  o.substeps = 8;
  const LanderState x0 = cfg.initial_state(cfg.nominal);
  const GuidanceProblem p = make_problem(x0, cfg.scenario, cfg.limits.g);
  const double T = 180.0;
  const PolyCoeffs c = solve_cubic_coeffs(p, T);

  auto deviation = [&](double dt, RolloutResult* out) {
    o.guidance.dt = dt;
    const RolloutResult r = rollout_base_policy(x0, p, T, o);
    double worst = 0.0;
    // the last cycles before the hold are where the plan and the hold diverge
    for (const StepRecord& rec : r.trace) {
      const double t = rec.state.t;
      if (t > T - cfg.tgo_floor) break;
      worst = std::max(worst, (rec.state.r - (p.r0 + p.v0 * t + c.position_delta(t))).norm());
    }
    if (out) *out = r;
    return worst;
  };
  RolloutResult r;
  const double d1 = deviation(0.1, &r);
  const double d2 = deviation(0.05, nullptr);
  // measured 0.89 m and 0.45 m: first order in the cycle length
  EXPECT_LE(d1, 1.5);
  EXPECT_LE(d2, 0.6 * d1);
  EXPECT_LE((r.terminal.r - p.rf).norm(), 1.0);
  EXPECT_LE((r.terminal.v - p.vf).norm(), 0.25);
}
