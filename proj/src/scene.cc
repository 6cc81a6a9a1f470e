#include "lidartraj/scene.h"

#include <cmath>
#include <limits>
#include <random>

#include "lidartraj/errors.h"
#include "lidartraj/metrics.h"

namespace lidartraj {

std::vector<Box3D> Scene::boxes() const {
  std::vector<Box3D> out;
  out.reserve(vehicles.size());
  for (const Vehicle& v : vehicles) out.push_back(v.box);
  return out;
}

Scene GenerateScene(std::uint64_t seed, int n_vehicles, const SceneParams& params) {
  if (n_vehicles < 0) throw ArgumentError("vehicle count must be non-negative");
  Scene scene;
  scene.seed = seed;
  scene.extent = params.extent;
  scene.ground_z = params.ground_z;
  scene.has_ground = params.has_ground;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  int tries = 0;
  while (static_cast<int>(scene.vehicles.size()) < n_vehicles) {
    if (tries++ >= params.max_tries) {
      throw ArgumentError("generate_scene: placed " + std::to_string(scene.vehicles.size()) +
                          " of " + std::to_string(n_vehicles) + " vehicles after " +
                          std::to_string(params.max_tries) + " attempts");
    }
    const double x = uniform(-params.extent, params.extent);
    const double y = uniform(-params.extent, params.extent);
    const double yaw = NormalizeYaw(uniform(-M_PI, M_PI));
    Vec3 size;
    for (int k = 0; k < 3; ++k) {
      size[k] = params.mean_size[k] + uniform(-params.size_jitter[k], params.size_jitter[k]);
    }
    const double range = std::hypot(x, y);
    if (range < params.min_range || range > params.max_range) continue;
    const Box3D box(Vec3(x, y, params.ground_z + 0.5 * size.z()), size, yaw);
    // Reject boxes whose footprint reaches into the ego corridor.
    bool blocked = false;
    for (const auto& c : box.BevCorners()) {
      if (c.x() >= params.corridor_x_lo && c.x() <= params.corridor_x_hi &&
          std::abs(c.y()) <= params.corridor_half_width) {
        blocked = true;
      }
    }
    const Box3D corridor(
        Vec3(0.5 * (params.corridor_x_lo + params.corridor_x_hi), 0.0, 0.0),
        Vec3(params.corridor_x_hi - params.corridor_x_lo, 2 * params.corridor_half_width, 10.0),
        0.0);
    if (blocked || BevIntersection(box, corridor) > 0.0) continue;
    const Box3D padded(box.center, box.size + Vec3(params.min_gap, params.min_gap, 0.0), yaw);
    bool clash = false;
    for (const Vehicle& v : scene.vehicles) {
      if (BevIntersection(padded, v.box) > 0.0) {
        clash = true;
        break;
      }
    }
    if (clash) continue;
    scene.vehicles.push_back({static_cast<int>(scene.vehicles.size()), box});
  }
  return scene;
}

std::pair<Pose, Pose> GenerateTrajectory(double speed, double duration, double curvature,
                                         double stamp0) {
  if (!(duration > 0.0)) throw ArgumentError("trajectory duration must be positive");
  const double arc = speed * duration;
  const double heading = arc * curvature;
  Vec3 end;
  if (std::abs(curvature) < 1e-12) {
    end = Vec3(arc, 0.0, 0.0);
  } else {
    end = Vec3(std::sin(heading) / curvature, (1.0 - std::cos(heading)) / curvature, 0.0);
  }
  const Pose a(Vec3::Zero(), Quaternion(), stamp0);
  const Pose b(end, Quaternion::FromAxisAngle(Vec3::UnitZ(), heading), stamp0 + duration);
  return {a, b};
}

SensorModel SensorModel::Default(int beams, double lo_deg, double hi_deg) {
  SensorModel s;
  if (beams < 1) throw ArgumentError("sensor needs at least one beam");
  for (int b = 0; b < beams; ++b) {
    s.elevations_deg.push_back(beams == 1 ? lo_deg : lo_deg + (hi_deg - lo_deg) * b / (beams - 1));
  }
  return s;
}

void SensorModel::Validate() const {
  if (elevations_deg.empty()) throw ArgumentError("sensor has no beams");
  for (std::size_t i = 1; i < elevations_deg.size(); ++i) {
    if (!(elevations_deg[i] > elevations_deg[i - 1])) {
      throw ArgumentError("sensor elevations must be strictly increasing");
    }
  }
  if (!(max_range > 0.0)) throw ArgumentError("sensor max_range must be positive");
  if (rays_per_degree < 1) throw ArgumentError("rays_per_degree must be >= 1");
  if (!(rotation_rate > 0.0)) throw ArgumentError("rotation_rate must be positive");
}

double RayBoxHit(const Vec3& origin, const Vec3& dir, const Box3D& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const Vec3 o = origin - box.center;
  const Vec3 lo(c * o.x() + s * o.y(), -s * o.x() + c * o.y(), o.z());
  const Vec3 ld(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
  const Vec3 h = box.half();
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (ld[k] == 0.0) {
      if (std::abs(lo[k]) > h[k]) return -1.0;
      continue;
    }
    double a = (-h[k] - lo[k]) / ld[k];
    double b = (h[k] - lo[k]) / ld[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return -1.0;
  }
  if (t0 > 0.0) return t0;
  return -1.0;  // origin inside the box or box behind the ray
}

RaycastResult RaycastSweep(const Scene& scene, const InterpolatedTrack& track,
                           const SensorModel& sensor) {
  sensor.Validate();
  const int N = track.size();
  if (N < 1) throw ArgumentError("raycast needs a non-empty track");
  RaycastResult out;
  out.distorted.reference = SweepFrame::kCaptureFrames;
  out.distorted.packets.resize(N);
  for (int n = 0; n < N; ++n) {
    out.distorted.packets[n].frame_index = n;
    out.distorted.packets[n].azimuth_lo = 360.0 * n / N;
    out.distorted.packets[n].azimuth_hi = 360.0 * (n + 1) / N;
  }
  out.points_per_label.assign(scene.vehicles.size(), 0);

  const int rays = sensor.azimuth_rays();
  std::vector<Vec3> elev_dirs;
  for (double e : sensor.elevations_deg) {
    const double r = e * M_PI / 180.0;
    elev_dirs.emplace_back(std::cos(r), 0.0, std::sin(r));
  }
  for (int k = 0; k < rays; ++k) {
    const double az = (k + 0.5) / sensor.rays_per_degree;
    const int n = std::min(N - 1, static_cast<int>(std::floor(az * N / 360.0)));
    const RigidTransform& T = track[n];
    const double ca = std::cos(az * M_PI / 180.0), sa = std::sin(az * M_PI / 180.0);
    Packet& packet = out.distorted.packets[n];
    for (const Vec3& ed : elev_dirs) {
      const Vec3 local(ca * ed.x(), sa * ed.x(), ed.z());
      const Vec3 dir = T.R * local;
      double best = sensor.max_range;
      int hit = -2;  // -2 none, -1 ground, >= 0 vehicle
      for (std::size_t v = 0; v < scene.vehicles.size(); ++v) {
        const double t = RayBoxHit(T.t, dir, scene.vehicles[v].box);
        if (t > 0.0 && t <= best) {
          best = t;
          hit = static_cast<int>(v);
        }
      }
      if (scene.has_ground && sensor.ground_returns && dir.z() < 0.0) {
        const double t = (scene.ground_z - T.t.z()) / dir.z();
        if (t > 0.0 && t < best) {
          best = t;
          hit = -1;
        }
      }
      if (hit == -2) continue;
      packet.points.push_back(best * local);
      if (hit >= 0) out.points_per_label[hit]++;
    }
  }
  const RigidTransform to_A = track[0].Inverse();
  for (const Vehicle& v : scene.vehicles) out.labels.push_back(v.box.Transformed(to_A));
  return out;
}

}  // namespace lidartraj
