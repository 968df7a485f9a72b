#pragma once

#include <array>

#include <Eigen/Core>

namespace posefuse {

/// Roll/pitch/yaw in radians. Roll is about X, pitch about Y, yaw about Z.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// Hamilton quaternion, scalar first.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {}; }

  double norm() const;
  Quaternion normalized() const;
  Quaternion operator-() const { return {-w, -x, -y, -z}; }
  std::array<double, 4> as_array() const { return {w, x, y, z}; }
};

/// Translation in meters.
struct Translation {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  std::array<double, 3> as_array() const { return {x, y, z}; }
};

/// 6-DoF pose flattened to 7 coordinates: (tx, ty, tz, qw, qx, qy, qz).
struct Pose {
  Translation t;
  Quaternion q;

  std::array<double, 7> flatten() const;
  static Pose from_flat(const std::array<double, 7>& v);
};

enum class EulerConvention {
  kIntrinsicZYX,  // R = Rz(yaw) * Ry(pitch) * Rx(roll)
  kIntrinsicXYZ,  // R = Rx(roll) * Ry(pitch) * Rz(yaw)
};

using RotationMatrix = Eigen::Matrix3d;

double dot(const Quaternion& a, const Quaternion& b);
Quaternion hamilton_product(const Quaternion& a, const Quaternion& b);
RotationMatrix to_rotation_matrix(const Quaternion& q);

/// Wraps an angle into (-pi, pi].
double canonicalize_angle(double radians);
EulerAngles canonicalize(const EulerAngles& e);

/// Half-angle closed form, evaluated literally and then normalized:
///
///   c1 = cos(roll/2), c2 = cos(yaw/2), c3 = cos(pitch/2), s* likewise
///   w = sqrt(1 + c1c2 + c1c3 - s1s2s3 + c2c3) / 2
///   x = (c2s3 + c1s3 + s1s2c3) / 4w
///   y = (s1c2 + s1c3 + c1s2s3) / 4w
///   z = (-s1s3 + c1s2c3 + s2) / 4w
///
/// It does not coincide with any axis-composition convention away from the
/// identity; use euler_to_quaternion_standard for anything metric.
///
/// Throws NegativeRadicand when the radicand is negative and
/// SingularConversion when w < kSingularThreshold.
Quaternion euler_to_quaternion_half_angle(const EulerAngles& e);
inline constexpr double kSingularThreshold = 1e-6;

/// Product of three single-axis rotation quaternions.
Quaternion euler_to_quaternion_standard(
    const EulerAngles& e, EulerConvention convention = EulerConvention::kIntrinsicZYX);

/// Product of three single-axis rotation matrices. Independent of the
/// quaternion route; used as its oracle.
RotationMatrix rotation_matrix_from_euler(
    const EulerAngles& e, EulerConvention convention = EulerConvention::kIntrinsicZYX);

struct EulerDecomposition {
  EulerAngles angles;
  /// Set when |pitch| is within kGimbalLockTolerance of pi/2. The angles are
  /// still a valid decomposition (roll is folded into yaw).
  bool gimbal_lock = false;
};
inline constexpr double kGimbalLockTolerance = 1e-7;

EulerDecomposition quaternion_to_euler(
    const Quaternion& q, EulerConvention convention = EulerConvention::kIntrinsicZYX);

/// Which Euler -> quaternion route the data pipeline uses.
enum class RotationConversion { kStandard, kHalfAngle };

Quaternion euler_to_quaternion(const EulerAngles& e, RotationConversion conversion,
                               EulerConvention convention = EulerConvention::kIntrinsicZYX);

/// Returns q or -q, whichever has a non-negative dot product with reference.
Quaternion sign_align(const Quaternion& reference, const Quaternion& q);

/// Euclidean distance in meters.
double translation_error_m(const Translation& pred, const Translation& gt);

/// Geodesic angle between two rotations, in degrees, in [0, 180].
/// Equal to 2*acos(|<pred, gt>|) but evaluated as 4*atan2(|a - b|, |a + b|)
/// on sign-aligned inputs, which stays exact near zero. Inputs are
/// renormalized first so raw network outputs are accepted.
double rotation_error_deg(const Quaternion& pred, const Quaternion& gt);

}  // namespace posefuse
