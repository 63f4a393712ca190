#pragma once

#include <array>
#include <random>

namespace wkm {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

/// Unit quaternion, scalar first.
struct Quaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
};

/// A rotation in SO(3). Applied to a density as (R rho)(p) = rho(R^T p), so
/// the particle is seen along R^T (0, 0, 1).
class Orientation {
 public:
  Orientation() = default;

  /// Normalizes `q`; the zero quaternion is rejected.
  static Orientation from_quaternion(const Quaternion& q);
  static Orientation from_axis_angle(const Vec3& axis, double angle);

  const Quaternion& quaternion() const noexcept { return q_; }
  const Mat3& rotation() const noexcept { return r_; }
  Vec3 viewing_direction() const noexcept { return {r_[2][0], r_[2][1], r_[2][2]}; }

  /// Applies R^T to a point.
  Vec3 apply_inverse(const Vec3& p) const noexcept;

 private:
  explicit Orientation(const Quaternion& unit);

  Quaternion q_{};
  Mat3 r_{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
};

/// Haar-uniform draw: four standard normals, normalized.
Orientation sample_orientation(std::mt19937_64& rng);

/// Angle in [0, pi] between two unit vectors.
double angle_between(const Vec3& u, const Vec3& v);

/// Angle between the viewing directions of two orientations.
double angular_difference(const Orientation& u, const Orientation& v);

}  // namespace wkm
