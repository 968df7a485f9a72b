#include "posefuse/geometry.hpp"

#include <cmath>
#include <numbers>

#include "posefuse/error.hpp"

namespace posefuse {

namespace {

Quaternion axis_quaternion(int axis, double angle) {
  const double h = 0.5 * angle;
  Quaternion q{std::cos(h), 0.0, 0.0, 0.0};
  const double s = std::sin(h);
  switch (axis) {
    case 0: q.x = s; break;
    case 1: q.y = s; break;
    default: q.z = s; break;
  }
  return q;
}

RotationMatrix axis_matrix(int axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  RotationMatrix m;
  switch (axis) {
    case 0: m << 1, 0, 0, 0, c, -s, 0, s, c; break;
    case 1: m << c, 0, s, 0, 1, 0, -s, 0, c; break;
    default: m << c, -s, 0, s, c, 0, 0, 0, 1; break;
  }
  return m;
}

// Below this the roll/yaw split is numerically meaningless and we fold roll
// into yaw.
constexpr double kDegenerateCosPitch = 1e-10;

}  // namespace

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return {w / n, x / n, y / n, z / n};
}

std::array<double, 7> Pose::flatten() const { return {t.x, t.y, t.z, q.w, q.x, q.y, q.z}; }

Pose Pose::from_flat(const std::array<double, 7>& v) {
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5], v[6]}};
}

double dot(const Quaternion& a, const Quaternion& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

Quaternion hamilton_product(const Quaternion& a, const Quaternion& b) {
  return {
      a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
  };
}

RotationMatrix to_rotation_matrix(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  RotationMatrix m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

double canonicalize_angle(double radians) {
  constexpr double kPi = std::numbers::pi;
  double r = std::remainder(radians, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  if (r > kPi) r -= 2.0 * kPi;
  return r;
}

EulerAngles canonicalize(const EulerAngles& e) {
  return {canonicalize_angle(e.roll), canonicalize_angle(e.pitch), canonicalize_angle(e.yaw)};
}

Quaternion euler_to_quaternion_half_angle(const EulerAngles& e) {
  const double c1 = std::cos(e.roll / 2), s1 = std::sin(e.roll / 2);
  const double c2 = std::cos(e.yaw / 2), s2 = std::sin(e.yaw / 2);
  const double c3 = std::cos(e.pitch / 2), s3 = std::sin(e.pitch / 2);

  const double radicand = 1 + c1 * c2 + c1 * c3 - s1 * s2 * s3 + c2 * c3;
  if (radicand < 0.0) throw NegativeRadicand("half-angle conversion: negative radicand");
  const double w = std::sqrt(radicand) / 2;
  if (w < kSingularThreshold) throw SingularConversion("half-angle conversion: scalar part below 1e-6");

  const double x = (c2 * s3 + c1 * s3 + s1 * s2 * c3) / (4 * w);
  const double y = (s1 * c2 + s1 * c3 + c1 * s2 * s3) / (4 * w);
  const double z = (-s1 * s3 + c1 * s2 * c3 + s2) / (4 * w);
  return Quaternion{w, x, y, z}.normalized();
}

Quaternion euler_to_quaternion_standard(const EulerAngles& e, EulerConvention convention) {
  const Quaternion qx = axis_quaternion(0, e.roll);
  const Quaternion qy = axis_quaternion(1, e.pitch);
  const Quaternion qz = axis_quaternion(2, e.yaw);
  if (convention == EulerConvention::kIntrinsicZYX) return hamilton_product(hamilton_product(qz, qy), qx);
  return hamilton_product(hamilton_product(qx, qy), qz);
}

RotationMatrix rotation_matrix_from_euler(const EulerAngles& e, EulerConvention convention) {
  const RotationMatrix rx = axis_matrix(0, e.roll);
  const RotationMatrix ry = axis_matrix(1, e.pitch);
  const RotationMatrix rz = axis_matrix(2, e.yaw);
  if (convention == EulerConvention::kIntrinsicZYX) return rz * ry * rx;
  return rx * ry * rz;
}

Quaternion euler_to_quaternion(const EulerAngles& e, RotationConversion conversion,
                               EulerConvention convention) {
  if (conversion == RotationConversion::kHalfAngle) return euler_to_quaternion_half_angle(e);
  return euler_to_quaternion_standard(e, convention);
}

EulerDecomposition quaternion_to_euler(const Quaternion& q, EulerConvention convention) {
  const RotationMatrix r = to_rotation_matrix(q.normalized());
  EulerDecomposition out;
  EulerAngles& a = out.angles;

  if (convention == EulerConvention::kIntrinsicZYX) {
    const double cos_pitch = std::hypot(r(0, 0), r(1, 0));
    a.pitch = std::atan2(-r(2, 0), cos_pitch);
    if (cos_pitch > kDegenerateCosPitch) {
      a.roll = std::atan2(r(2, 1), r(2, 2));
      a.yaw = std::atan2(r(1, 0), r(0, 0));
    } else {
      a.roll = 0.0;
      a.yaw = std::atan2(-r(0, 1), r(1, 1));
    }
  } else {
    const double cos_pitch = std::hypot(r(0, 0), r(0, 1));
    a.pitch = std::atan2(r(0, 2), cos_pitch);
    if (cos_pitch > kDegenerateCosPitch) {
      a.roll = std::atan2(-r(1, 2), r(2, 2));
      a.yaw = std::atan2(-r(0, 1), r(0, 0));
    } else {
      a.yaw = 0.0;
      a.roll = std::atan2(std::copysign(1.0, r(0, 2)) * r(1, 0), r(1, 1));
    }
  }
  out.gimbal_lock = std::abs(std::abs(a.pitch) - std::numbers::pi / 2) < kGimbalLockTolerance;
  return out;
}

Quaternion sign_align(const Quaternion& reference, const Quaternion& q) {
  return dot(reference, q) < 0.0 ? -q : q;
}

double translation_error_m(const Translation& pred, const Translation& gt) {
  const double dx = pred.x - gt.x, dy = pred.y - gt.y, dz = pred.z - gt.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double rotation_error_deg(const Quaternion& pred, const Quaternion& gt) {
  const Quaternion a = pred.normalized();
  const Quaternion b = sign_align(a, gt.normalized());
  const Quaternion diff{a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
  const Quaternion sum{a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
  const double angle = 4.0 * std::atan2(diff.norm(), sum.norm());
  return angle * 180.0 / std::numbers::pi;
}

}  // namespace posefuse
