#pragma once

#include <Eigen/Core>

namespace pdg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kLunarRadius = 1737.4e3;  // m

// Orthonormal guidance basis. Columns of `basis` are e_x, e_y, e_z.
struct GuidanceFrame {
  Mat3 basis = Mat3::Identity();
  Vec3 origin = Vec3::Zero();

  Vec3 ex() const { return basis.col(0); }
  Vec3 ey() const { return basis.col(1); }
  Vec3 ez() const { return basis.col(2); }
};

// e_x along r0, e_z normal to the (r0, rf) plane, e_y completes the triad.
// Throws DegenerateFrame if r0 is zero or r0 and rf are parallel.
GuidanceFrame build_guidance_frame(const Vec3& r0, const Vec3& rf);

inline Vec3 to_guidance(const GuidanceFrame& f, const Vec3& v) {
  return f.basis.transpose() * v;
}

inline Vec3 to_navigation(const GuidanceFrame& f, const Vec3& v) {
  return f.basis * v;
}

// Unit norm, orthogonality and right-handedness within tol.
bool frame_is_valid(const GuidanceFrame& f, double tol = 1e-12);

inline constexpr double kParallelTol = 1e-9;

}  // namespace pdg
