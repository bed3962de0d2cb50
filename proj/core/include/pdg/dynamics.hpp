#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pdg/geometry.hpp"

namespace pdg {

struct LanderState {
  double t = 0.0;
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double m = 1050.0;
};

// Path-constraint limits and plant constants. Defaults follow the
// simulation block of the nominal scenario; the unstated limits are
// configurable.
struct ConstraintSet {
  double rho_min = 1480.0;          // N
  double rho_max = 3120.0;          // N
  double thrust_rate_max = 200.0;   // N/s
  double theta_lim = 70.0 * std::numbers::pi / 180.0;
  double vh_max = 400.0;            // m/s
  double m_terminal_min = 850.0;    // kg
  Vec3 g = Vec3(0.0, 0.0, -1.68);   // m/s^2
  double alpha = 0.00035;           // kg/(N s)
  double subsurface_tol = 0.5;      // m below the target plane before flagging
  double center_depth = kLunarRadius;  // frame center below the target, m

  void validate() const;
};

enum class Constraint {
  ThrustBounds,
  ThrustRate,
  SubSurface,
  AttitudeLimit,
  HorizontalSpeed,
};

const char* to_string(Constraint c);

struct Violation {
  Constraint id;
  double margin;  // amount by which the limit was exceeded (positive)
  double t;       // time of the state that violated
};

struct StepRecord {
  LanderState state;             // state at the end of the step
  Vec3 a_cmd = Vec3::Zero();     // commanded net acceleration
  Vec3 a_actual = Vec3::Zero();  // net acceleration applied at the start of the step
  double T_c = 0.0;              // applied thrust, N
  double T_demand = 0.0;         // thrust needed for a_cmd, N
  double T_prev = NAN;           // previous cycle thrust (NaN on first cycle)
  double dt = 0.0;
  double theta = 0.0;            // thrust angle off local vertical, rad
  std::vector<Violation> violations;
};

enum class ThrustMode {
  Clamped,    // bounds and rate limit applied
  Unclamped,  // test mode: thrust follows demand exactly
  Off,        // test mode: no propulsive acceleration
};

struct StepOptions {
  ThrustMode mode = ThrustMode::Clamped;
  int substeps = 2;
  // When set, geometric constraints are evaluated against this target.
  std::optional<Vec3> target;
};

struct StepResult {
  LanderState state;
  StepRecord record;
};

// Advance one guidance cycle with RK4. The thrust magnitude is held constant
// over the cycle along the commanded direction.
StepResult step(const LanderState& state, const Vec3& a_net, double dt,
                const ConstraintSet& limits, std::optional<double> T_prev,
                const StepOptions& opts = {});

std::vector<Violation> check_constraints(const StepRecord& rec, const Vec3& target_r,
                                         const ConstraintSet& limits);

struct TerminalTolerances {
  double pos = 10.0;  // m
  double vel = 0.5;   // m/s
};

struct RolloutResult {
  std::vector<StepRecord> trace;
  LanderState initial;
  LanderState terminal;
  double fuel_used = 0.0;
  bool converged = false;
  bool aborted = false;                 // stopped early on a path violation
  std::vector<Violation> violated;      // first occurrence per constraint
  double max_saturation_run = 0.0;      // longest interval with demand above rho_max, s
  double time_saturated = 0.0;          // total time with demand above rho_max, s
  double max_theta = 0.0;
};

struct TerminalTarget {
  Vec3 rf = Vec3::Zero();
  Vec3 vf = Vec3::Zero();
};

bool convergence_indicator(const RolloutResult& result, const TerminalTarget& target,
                           const TerminalTolerances& tol, const ConstraintSet& limits);

// Trace export, header t,rx,ry,rz,vx,vy,vz,m,Tc,theta,ax,ay,az.
void write_trace_csv(const RolloutResult& result, const std::string& path);
std::string trace_csv_header();

}  // namespace pdg
