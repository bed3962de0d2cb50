#pragma once

#include <array>
#include <optional>

#include "pdg/dynamics.hpp"
#include "pdg/geometry.hpp"

namespace pdg {

// Boundary conditions. a0/af are NET accelerations (gravity included).
struct GuidanceProblem {
  Vec3 r0 = Vec3::Zero(), v0 = Vec3::Zero(), a0 = Vec3::Zero();
  Vec3 rf = Vec3::Zero(), vf = Vec3::Zero(), af = Vec3::Zero();

  TerminalTarget terminal() const { return {rf, vf}; }
};

// a(t) = C[0] + C[1] t + C[2] t^2 + C[3] t^3, one column per axis.
struct PolyCoeffs {
  std::array<Vec3, 4> C{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};

  Vec3 accel(double t) const { return C[0] + t * (C[1] + t * (C[2] + t * C[3])); }
  Vec3 velocity_delta(double t) const;  // integral of accel over [0, t]
  Vec3 position_delta(double t) const;  // double integral of accel over [0, t]
};

// The 4x4 system shared by every axis.
Eigen::Matrix4d cubic_system_matrix(double t_go);

// Solves the per-axis linear system with partial pivoting. `bc` must already
// be expressed in the frame the coefficients are wanted in.
PolyCoeffs solve_cubic_coeffs(const GuidanceProblem& bc, double t_go);

enum class CommandEval {
  CycleEnd,  // polynomial evaluated one cycle ahead (default)
  Initial,   // C0, i.e. the boundary value a0 itself
};

struct GuidanceOptions {
  double dt = 0.1;
  double tgo_floor = 2.0;
  double center_depth = kLunarRadius;
  Vec3 up = Vec3::UnitZ();
  CommandEval eval = CommandEval::CycleEnd;
};

struct GuidanceCommand {
  Vec3 a_net = Vec3::Zero();
  double t_go_remaining = 0.0;
};

// One cycle of the base policy. `problem.a0` is the current acceleration
// boundary value. If the frame degenerates (lander over the target) the
// previous frame in `last_frame` is reused; on success it is updated.
GuidanceCommand guidance_cycle(const LanderState& state, const GuidanceProblem& problem,
                               double t_go, const GuidanceOptions& opts,
                               std::optional<GuidanceFrame>* last_frame = nullptr);

struct RolloutOptions {
  GuidanceOptions guidance;
  ConstraintSet limits;
  TerminalTolerances tol;
  ThrustMode mode = ThrustMode::Clamped;
  int substeps = 2;
  bool record_trace = true;
  bool abort_on_violation = false;
  // Saturation counts when demand exceeds rho_max by this relative margin.
  double saturation_rel_tol = 1e-4;
};

// Closed-loop run of the base policy for exactly t_go seconds.
RolloutResult rollout_base_policy(const LanderState& initial, const GuidanceProblem& problem,
                                  double t_go, const RolloutOptions& opts);

}  // namespace pdg
