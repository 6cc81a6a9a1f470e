#include "lidartraj/geometry.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "lidartraj/errors.h"

namespace lidartraj {

Quaternion::Quaternion(double w_in, double x_in, double y_in, double z_in) {
  const double n = std::sqrt(w_in * w_in + x_in * x_in + y_in * y_in + z_in * z_in);
  if (!(n > 1e-12) || !std::isfinite(n)) {
    throw ArgumentError("quaternion has zero or non-finite norm");
  }
  const double s = (w_in < 0.0 ? -1.0 : 1.0) / n;
  w = w_in * s;
  x = x_in * s;
  y = y_in * s;
  z = z_in * s;
}

Quaternion Quaternion::FromAxisAngle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw ArgumentError("rotation axis must be non-zero");
  const Vec3 a = axis / n;
  const double s = std::sin(0.5 * angle);
  return Quaternion(std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s);
}

double Quaternion::Norm() const { return std::sqrt(Dot(*this)); }

double Quaternion::Dot(const Quaternion& o) const {
  return w * o.w + x * o.x + y * o.y + z * o.z;
}

double Quaternion::AngleTo(const Quaternion& other) const {
  const double d = std::min(1.0, std::abs(Dot(other)));
  return 2.0 * std::acos(d);
}

RigidTransform RigidTransform::Inverse() const {
  RigidTransform inv;
  inv.R = R.transpose();
  inv.t = -(inv.R * t);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.R = R * rhs.R;
  out.t = R * rhs.t + t;
  return out;
}

Eigen::Matrix4d RigidTransform::Homogeneous() const {
  Eigen::Matrix4d H = Eigen::Matrix4d::Identity();
  H.topLeftCorner<3, 3>() = R;
  H.topRightCorner<3, 1>() = t;
  return H;
}

Vec3 LerpTranslation(const Vec3& tA, const Vec3& tB, int N, int n) {
  if (N < 2) throw ArgumentError("interpolation needs N >= 2, got " + std::to_string(N));
  if (n < 0 || n > N - 1) {
    throw ArgumentError("interpolation index " + std::to_string(n) +
                        " outside [0, " + std::to_string(N - 1) + "]");
  }
  return tA + (tB - tA) * (static_cast<double>(n) / N);
}

Quaternion Slerp(const Quaternion& qA, const Quaternion& qB, double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw ArgumentError("slerp fraction must lie in [0, 1]");
  }
  double bw = qB.w, bx = qB.x, by = qB.y, bz = qB.z;
  double cos_theta = qA.Dot(qB);
  if (cos_theta < 0.0) {
    bw = -bw;
    bx = -bx;
    by = -by;
    bz = -bz;
    cos_theta = -cos_theta;
  }
  cos_theta = std::min(cos_theta, 1.0);
  const double theta = std::acos(cos_theta);
  double ka = 1.0 - u;
  double kb = u;
  if (theta >= kSlerpSmallAngle) {
    const double s = std::sin(theta);
    ka = std::sin((1.0 - u) * theta) / s;
    kb = std::sin(u * theta) / s;
  }
  return Quaternion(ka * qA.w + kb * bw, ka * qA.x + kb * bx,
                    ka * qA.y + kb * by, ka * qA.z + kb * bz);
}

Mat3 QuatToRotmat(const Quaternion& q) {
  if (std::abs(q.Norm() - 1.0) > 1e-6) {
    throw ArgumentError("quat_to_rotmat requires a unit quaternion");
  }
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Quaternion RotmatToQuat(const Mat3& R) {
  const Eigen::Quaterniond q(R);
  return Quaternion(q.w(), q.x(), q.y(), q.z());
}

RigidTransform PoseToTransform(const Pose& p) {
  RigidTransform T;
  T.R = QuatToRotmat(p.q());
  T.t = p.t();
  return T;
}

RigidTransform RelativeTransform(const RigidTransform& Ta,
                                 const RigidTransform& Tb) {
  RigidTransform out;
  out.R = Ta.R.transpose() * Tb.R;
  out.t = Ta.R.transpose() * (Tb.t - Ta.t);
  return out;
}

InterpolatedTrack InterpolateTrack(const Pose& poseA, const Pose& poseB, int N) {
  if (N < 2) throw ArgumentError("interpolate_track needs N >= 2, got " + std::to_string(N));
  InterpolatedTrack track;
  track.transforms.reserve(N);
  for (int n = 0; n < N; ++n) {
    const Vec3 t = LerpTranslation(poseA.t(), poseB.t(), N, n);
    const Quaternion q = Slerp(poseA.q(), poseB.q(), static_cast<double>(n) / N);
    track.transforms.push_back(PoseToTransform(Pose(t, q)));
  }
  return track;
}

}  // namespace lidartraj
