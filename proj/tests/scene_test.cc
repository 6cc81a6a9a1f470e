#include <cmath>

#include <doctest.h>

#include "lidartraj/errors.h"
#include "lidartraj/metrics.h"
#include "lidartraj/scene.h"
#include "test_util.h"

namespace lidartraj {
namespace {

using testing::Gen;

bool OnSurface(const Vec3& p, const Box3D& box, double tol) {
  const Vec3 l = box.ToLocal(p).cwiseAbs();
  const Vec3 h = box.half();
  if ((l - h).maxCoeff() > tol) return false;
  return (h - l).minCoeff() < tol;
}

TEST_CASE("ray_box_hit closed forms") {
  const Box3D unit(Vec3(10, 0, 0), Vec3::Ones(), 0.0);
  CHECK(RayBoxHit(Vec3::Zero(), Vec3::UnitX(), unit) == doctest::Approx(9.5));
  CHECK(RayBoxHit(Vec3::Zero(), Vec3(2, 0, 0), unit) == doctest::Approx(4.75));
  CHECK(RayBoxHit(Vec3::Zero(), Vec3::UnitY(), unit) < 0.0);
  CHECK(RayBoxHit(Vec3::Zero(), -Vec3::UnitX(), unit) < 0.0);
  CHECK(RayBoxHit(Vec3(10, 0, 0), Vec3::UnitX(), unit) < 0.0);
  const Box3D diamond(Vec3(10, 0, 0), Vec3::Ones(), M_PI / 4);
  CHECK(RayBoxHit(Vec3::Zero(), Vec3::UnitX(), diamond) ==
        doctest::Approx(10.0 - std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("property: ray hits land on the box surface with nothing in front") {
  Gen g(71);
  int hits = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Box3D box = g.RandomBox(3.0);
    const Vec3 origin = g.Vector(15.0);
    if (box.Contains(origin)) continue;
    // Aim near the box so that roughly half of the rays hit.
    const Vec3 dir = (box.center + g.Vector(3.0) - origin).normalized();
    const double t = RayBoxHit(origin, dir, box);
    if (t < 0.0) {
      bool inside = false;
      for (double s = 0.0; s < 40.0; s += 0.05) inside = inside || box.Contains(origin + s * dir);
      CHECK(!inside);
      continue;
    }
    ++hits;
    CHECK(OnSurface(origin + t * dir, box, 1e-9));
    bool inside = false;
    for (int k = 1; k < 50; ++k) inside = inside || box.Contains(origin + (t * k / 50.0 - 1e-9) * dir);
    CHECK(!inside);
  }
  CHECK(hits > 50);
}

TEST_CASE("generate_scene honours its placement constraints") {
  SceneParams params;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const Scene s = GenerateScene(seed, 12, params);
    REQUIRE(s.vehicles.size() == 12);
    for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
      const Box3D& b = s.vehicles[i].box;
      CHECK(s.vehicles[i].id == static_cast<int>(i));
      const double r = std::hypot(b.center.x(), b.center.y());
      CHECK(r >= params.min_range);
      CHECK(r <= params.max_range);
      CHECK(b.center.z() - 0.5 * b.size.z() == doctest::Approx(params.ground_z));
      for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(b.size[k] - params.mean_size[k]) <= params.size_jitter[k] + 1e-12);
      }
      for (const auto& c : b.BevCorners()) {
        CHECK(!(c.x() >= params.corridor_x_lo && c.x() <= params.corridor_x_hi &&
                std::abs(c.y()) <= params.corridor_half_width));
      }
      for (std::size_t j = 0; j < i; ++j) CHECK(BevIntersection(b, s.vehicles[j].box) == 0.0);
    }
    const Scene again = GenerateScene(seed, 12, params);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(again.vehicles[i].box.center == s.vehicles[i].box.center);
    }
  }
  SceneParams tight = params;
  tight.extent = tight.max_range = 8.0;
  tight.max_tries = 500;
  CHECK_THROWS_AS(GenerateScene(1, 30, tight), ArgumentError);
  CHECK(GenerateScene(1, 0, params).vehicles.empty());
}

TEST_CASE("generate_trajectory") {
  const auto [a, b] = GenerateTrajectory(10.0, 0.5, 0.0, 2.0);
  CHECK(a.t() == Vec3::Zero());
  CHECK((b.t() - Vec3(5, 0, 0)).norm() < 1e-12);
  CHECK(*b.stamp() == doctest::Approx(2.5));
  const double k = 0.02;
  const auto [c, d] = GenerateTrajectory(10.0, 0.5, k);
  // The end point lies on the turning circle centered at (0, 1/k).
  CHECK((d.t() - Vec3(0, 1 / k, 0)).norm() == doctest::Approx(1 / k).epsilon(1e-12));
  CHECK(QuatToRotmat(d.q())(1, 0) == doctest::Approx(std::sin(5.0 * k)));
  CHECK_THROWS_AS(GenerateTrajectory(10.0, 0.0, 0.0), ArgumentError);
}

TEST_CASE("raycast from a stationary sensor") {
  const Scene scene = GenerateScene(11, 8);
  const InterpolatedTrack track = InterpolateTrack(Pose(), Pose(), 36);
  SensorModel sensor = SensorModel::Default(8);
  sensor.rays_per_degree = 1;
  const RaycastResult r = RaycastSweep(scene, track, sensor);
  REQUIRE(r.labels.size() == 8);
  REQUIRE(r.distorted.packet_count() == 36);
  int vehicle_points = 0, ground_points = 0;
  for (int n = 0; n < 36; ++n) {
    for (const Vec3& p : r.distorted.packets[n].points) {
      const double az = AzimuthDegrees(p);
      CHECK(az >= 10.0 * n - 1e-9);
      CHECK(az < 10.0 * (n + 1) + 1e-9);
      CHECK(p.norm() <= sensor.max_range + 1e-9);
      if (std::abs(p.z() - scene.ground_z) < 1e-9) {
        ++ground_points;
        continue;
      }
      bool on_some = false;
      for (const Box3D& b : r.labels) on_some = on_some || OnSurface(p, b, 1e-7);
      CHECK(on_some);
      ++vehicle_points;
    }
  }
  int counted = 0;
  for (int c : r.points_per_label) counted += c;
  CHECK(counted == vehicle_points);
  CHECK(ground_points > 0);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK((r.labels[i].center - scene.vehicles[i].box.center).norm() < 1e-12);
  }

  sensor.ground_returns = false;
  const RaycastResult no_ground = RaycastSweep(scene, track, sensor);
  CHECK(no_ground.distorted.Flatten().size() == static_cast<std::size_t>(vehicle_points));
  sensor.elevations_deg = {1.0, 0.0};
  CHECK_THROWS_AS(RaycastSweep(scene, track, sensor), ArgumentError);
}

}  // namespace
}  // namespace lidartraj
