#ifndef LIDARTRAJ_TESTS_TEST_UTIL_H_
#define LIDARTRAJ_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "lidartraj/box.h"
#include "lidartraj/geometry.h"
#include "lidartraj/sweep.h"

namespace lidartraj::testing {

// Seeded generator of random geometric inputs for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int Int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double Normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  Vec3 Vector(double scale) {
    return Vec3(Uniform(-scale, scale), Uniform(-scale, scale), Uniform(-scale, scale));
  }
  Vec3 UnitVector() {
    Vec3 v;
    do {
      v = Vec3(Normal(), Normal(), Normal());
    } while (v.norm() < 1e-3);
    return v.normalized();
  }
  Quaternion UnitQuaternion() {
    double w, x, y, z;
    do {
      w = Normal(), x = Normal(), y = Normal(), z = Normal();
    } while (w * w + x * x + y * y + z * z < 1e-6);
    return Quaternion(w, x, y, z);
  }
  Pose RandomPose(double t_scale, std::optional<double> stamp = {}) {
    return Pose(Vector(t_scale), UnitQuaternion(), stamp);
  }
  // Keyframe B reached from A by a plausible ego motion (<= 1.5 m, <= 0.2 rad).
  Pose NearbyPose(const Pose& a, double stamp) {
    const Quaternion dq = Quaternion::FromAxisAngle(UnitVector(), Uniform(0.0, 0.2));
    const Mat3 R = QuatToRotmat(a.q()) * QuatToRotmat(dq);
    return Pose(a.t() + Vector(0.9), RotmatToQuat(R), stamp);
  }
  Box3D RandomBox(double center_scale) {
    return Box3D(Vector(center_scale), Vec3(Uniform(0.5, 5.0), Uniform(0.5, 3.0), Uniform(0.5, 2.5)),
                 Uniform(-M_PI, M_PI));
  }
  std::vector<Vec3> Cloud(int m, double scale) {
    std::vector<Vec3> out;
    for (int i = 0; i < m; ++i) out.push_back(Vector(scale));
    return out;
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Sweep in keyframe A partitioned into N packets.
inline Sweep SweepAtA(const std::vector<Vec3>& points, int N) {
  Sweep s;
  s.reference = SweepFrame::kKeyframeA;
  s.packets = PartitionPackets(points, N);
  return s;
}

// Plain 4x4 homogeneous matrix from R and t, built without RigidTransform.
inline Eigen::Matrix4d Homogeneous(const Mat3& R, const Vec3& t) {
  Eigen::Matrix4d M = Eigen::Matrix4d::Identity();
  M.block<3, 3>(0, 0) = R;
  M.block<3, 1>(0, 3) = t;
  return M;
}

// Rodrigues rotation of v about a unit axis by angle; independent of the
// quaternion code.
inline Vec3 RotateAxisAngle(const Vec3& v, const Vec3& axis, double angle) {
  return v * std::cos(angle) + axis.cross(v) * std::sin(angle) +
         axis * axis.dot(v) * (1.0 - std::cos(angle));
}

}  // namespace lidartraj::testing

#endif  // LIDARTRAJ_TESTS_TEST_UTIL_H_
