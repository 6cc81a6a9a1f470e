#include "lidartraj/box.h"

#include "lidartraj/errors.h"

namespace lidartraj {

double NormalizeYaw(double yaw) {
  double y = std::remainder(yaw, 2.0 * M_PI);  // [-pi, pi]
  if (y <= -M_PI) y += 2.0 * M_PI;
  return y;
}

Box3D::Box3D(const Vec3& c, const Vec3& s, double yaw_in) : center(c), size(s) {
  if (!(s.x() > 0.0 && s.y() > 0.0 && s.z() > 0.0)) {
    throw ArgumentError("box sizes must be positive");
  }
  yaw = NormalizeYaw(yaw_in);
}

Vec3 Box3D::ToLocal(const Vec3& p) const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Vec3 d = p - center;
  return Vec3(c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z());
}

bool Box3D::Contains(const Vec3& p) const {
  const Vec3 l = ToLocal(p).cwiseAbs();
  const Vec3 h = half();
  return l.x() <= h.x() && l.y() <= h.y() && l.z() <= h.z();
}

std::array<Eigen::Vector2d, 4> Box3D::BevCorners() const {
  const double c = std::cos(yaw), s = std::sin(yaw);
  const Eigen::Vector2d ax(c, s), ay(-s, c);
  const Eigen::Vector2d ctr(center.x(), center.y());
  const double hl = 0.5 * size.x(), hw = 0.5 * size.y();
  return {ctr + hl * ax + hw * ay, ctr - hl * ax + hw * ay, ctr - hl * ax - hw * ay,
          ctr + hl * ax - hw * ay};
}

Box3D Box3D::Inflated(double factor) const {
  Box3D b = *this;
  b.size *= factor;
  return b;
}

Box3D Box3D::Transformed(const RigidTransform& T) const {
  const Vec3 heading = T.R * Vec3(std::cos(yaw), std::sin(yaw), 0.0);
  return Box3D(T.Apply(center), size, std::atan2(heading.y(), heading.x()));
}

}  // namespace lidartraj
