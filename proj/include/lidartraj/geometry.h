#ifndef LIDARTRAJ_GEOMETRY_H_
#define LIDARTRAJ_GEOMETRY_H_

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lidartraj {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Unit quaternion stored as (w, x, y, z). Constructors normalize and pick the
// representative with w >= 0, so q and -q compare equal after construction.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Quaternion() = default;
  // Normalizes. Throws ArgumentError on a (near) zero quaternion.
  Quaternion(double w, double x, double y, double z);

  static Quaternion FromAxisAngle(const Vec3& axis, double angle);

  double Norm() const;
  double Dot(const Quaternion& other) const;
  // Geodesic angle of the rotation taking *this to other, in [0, pi].
  double AngleTo(const Quaternion& other) const;
};

class Pose {
 public:
  Pose() = default;
  Pose(const Vec3& t, const Quaternion& q, std::optional<double> stamp = {})
      : t_(t), q_(q), stamp_(stamp) {}

  const Vec3& t() const { return t_; }
  const Quaternion& q() const { return q_; }
  const std::optional<double>& stamp() const { return stamp_; }

 private:
  Vec3 t_ = Vec3::Zero();
  Quaternion q_;
  std::optional<double> stamp_;
};

// x -> R x + t. T^W_n maps points from frame n into the world frame.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidTransform Identity() { return {}; }

  Vec3 Apply(const Vec3& p) const { return R * p + t; }
  // Closed form (R^T, -R^T t).
  RigidTransform Inverse() const;
  RigidTransform operator*(const RigidTransform& rhs) const;
  Eigen::Matrix4d Homogeneous() const;
};

struct InterpolatedTrack {
  std::vector<RigidTransform> transforms;

  int size() const { return static_cast<int>(transforms.size()); }
  const RigidTransform& operator[](int n) const { return transforms[n]; }
};

// tA + (tB - tA) * n / N. Requires N >= 2 and 0 <= n <= N - 1.
Vec3 LerpTranslation(const Vec3& tA, const Vec3& tB, int N, int n);

// Shortest-arc spherical interpolation at fraction u in [0, 1]. Falls back to
// normalized linear interpolation when the endpoint angle is below
// kSlerpSmallAngle.
inline constexpr double kSlerpSmallAngle = 1e-7;
Quaternion Slerp(const Quaternion& qA, const Quaternion& qB, double u);

// Throws ArgumentError if |q| deviates from 1 by more than 1e-6.
Mat3 QuatToRotmat(const Quaternion& q);
Quaternion RotmatToQuat(const Mat3& R);

RigidTransform PoseToTransform(const Pose& p);

// Ta^{-1} * Tb. With Ta = T^W_n and Tb = T^W_A this is T^n_A.
RigidTransform RelativeTransform(const RigidTransform& Ta,
                                 const RigidTransform& Tb);

// N frames between keyframes A and B: translation lerped with weight n/N,
// rotation slerped at u = n/N. transforms[0] is pose A; pose B itself (n = N)
// is not part of the track.
InterpolatedTrack InterpolateTrack(const Pose& poseA, const Pose& poseB, int N);

}  // namespace lidartraj

#endif  // LIDARTRAJ_GEOMETRY_H_
