#ifndef LIDARTRAJ_BOX_H_
#define LIDARTRAJ_BOX_H_

#include <array>
#include <cmath>

#include <Eigen/Core>

#include "lidartraj/geometry.h"

namespace lidartraj {

// Wraps an angle into (-pi, pi].
double NormalizeYaw(double yaw);

// Upright box: center, (length, width, height) along the rotated (x, y, z)
// axes, and heading about +z.
struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();  // length, width, height
  double yaw = 0.0;

  Box3D() = default;
  // Validates positive sizes and normalizes yaw.
  Box3D(const Vec3& center, const Vec3& size, double yaw);

  Vec3 half() const { return 0.5 * size; }
  // Coordinates of a world point in the box frame.
  Vec3 ToLocal(const Vec3& p) const;
  bool Contains(const Vec3& p) const;
  // BEV corners, counter-clockwise.
  std::array<Eigen::Vector2d, 4> BevCorners() const;
  double Volume() const { return size.prod(); }
  Box3D Inflated(double factor) const;
  // Box expressed in another frame (yaw taken from the transformed heading).
  Box3D Transformed(const RigidTransform& T) const;
};

struct Detection {
  Box3D box;
  double score = 0.0;
};

}  // namespace lidartraj

#endif  // LIDARTRAJ_BOX_H_
