#include "pdg/geometry.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "pdg/errors.hpp"

namespace pdg {

GuidanceFrame build_guidance_frame(const Vec3& r0, const Vec3& rf) {
  const double n0 = r0.norm();
  if (!(n0 > 0.0) || !std::isfinite(n0)) throw DegenerateFrame("zero or non-finite r0");
  const double nf = rf.norm();
  const Vec3 cross = r0.cross(rf);
  if (!(nf > 0.0) || cross.norm() / (n0 * nf) <= kParallelTol)
    throw DegenerateFrame("r0 parallel to rf");

  GuidanceFrame f;
  const Vec3 ex = r0 / n0;
  Vec3 ez = ex.cross(rf);
  ez.normalize();
  const Vec3 ey = ez.cross(ex);
  f.basis.col(0) = ex;
  f.basis.col(1) = ey;
  f.basis.col(2) = ez;
  f.origin = rf;
  return f;
}

bool frame_is_valid(const GuidanceFrame& f, double tol) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(f.basis.col(i).norm() - 1.0) > tol) return false;
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(f.basis.col(i).dot(f.basis.col(j))) > tol) return false;
  }
  return std::abs(f.basis.determinant() - 1.0) <= tol;
}

}  // namespace pdg
