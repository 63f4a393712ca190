#include "wkm/orientation.hpp"

#include "wkm/error.hpp"

#include <algorithm>
#include <cmath>

namespace wkm {

Orientation::Orientation(const Quaternion& q) : q_(q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  r_ = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
         {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
         {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

Orientation Orientation::from_quaternion(const Quaternion& q) {
  const double norm = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(Errc::invalid_argument, "quaternion must be nonzero and finite");
  return Orientation(Quaternion{q.w / norm, q.x / norm, q.y / norm, q.z / norm});
}

Orientation Orientation::from_axis_angle(const Vec3& axis, double angle) {
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(norm > 0.0)) throw Error(Errc::invalid_argument, "rotation axis must be nonzero");
  const double s = std::sin(angle / 2) / norm;
  return from_quaternion({std::cos(angle / 2), axis[0] * s, axis[1] * s, axis[2] * s});
}

Vec3 Orientation::apply_inverse(const Vec3& p) const noexcept {
  Vec3 out{};
  for (int i = 0; i < 3; ++i) out[i] = r_[0][i] * p[0] + r_[1][i] * p[1] + r_[2][i] * p[2];
  return out;
}

Orientation sample_orientation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  for (;;) {
    Quaternion q{normal(rng), normal(rng), normal(rng), normal(rng)};
    const double n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
    if (n2 > 1e-300) return Orientation::from_quaternion(q);
  }
}

double angle_between(const Vec3& u, const Vec3& v) {
  // atan2 stays accurate near 0 and pi, where acos of the dot product does not.
  const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  const Vec3 cross{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  return std::atan2(std::hypot(cross[0], cross[1], cross[2]), dot);
}

double angular_difference(const Orientation& u, const Orientation& v) {
  return angle_between(u.viewing_direction(), v.viewing_direction());
}

}  // namespace wkm
