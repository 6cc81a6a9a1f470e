#ifndef LIDARTRAJ_SCENE_H_
#define LIDARTRAJ_SCENE_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "lidartraj/box.h"
#include "lidartraj/geometry.h"
#include "lidartraj/sweep.h"

namespace lidartraj {

struct Vehicle {
  int id = 0;
  Box3D box;  // world frame
};

struct Scene {
  std::vector<Vehicle> vehicles;
  double ground_z = -1.8;
  bool has_ground = true;
  double extent = 55.0;  // BEV half-width of the placement square, m
  std::uint64_t seed = 0;

  std::vector<Box3D> boxes() const;
};

struct SceneParams {
  double extent = 55.0;
  double ground_z = -1.8;
  bool has_ground = true;
  // Vehicle centers lie at BEV range [min_range, max_range] from the origin.
  double min_range = 6.0;
  double max_range = 55.0;
  // Keep-out rectangle around the ego path: x in [lo, hi], |y| <= half width.
  double corridor_x_lo = -6.0;
  double corridor_x_hi = 12.0;
  double corridor_half_width = 3.5;
  // Minimum BEV clearance between vehicles.
  double min_gap = 1.0;
  Vec3 mean_size = Vec3(4.5, 1.9, 1.7);
  Vec3 size_jitter = Vec3(0.2, 0.08, 0.08);  // uniform +- around the mean
  int max_tries = 20000;
};

// Rejection sampling of non-overlapping vehicles resting on the ground.
// Throws ArgumentError naming the achieved count if placement fails.
Scene GenerateScene(std::uint64_t seed, int n_vehicles, const SceneParams& params = {});

// Constant-speed arc from the origin heading +x. The curvature is signed
// (positive turns left); keyframes are stamped stamp0 and stamp0 + duration.
std::pair<Pose, Pose> GenerateTrajectory(double speed, double duration, double curvature,
                                         double stamp0 = 0.0);

struct SensorModel {
  std::vector<double> elevations_deg;  // strictly increasing
  double max_range = 70.0;
  double rotation_rate = 2.0;  // Hz; one sweep per keyframe interval of 0.5 s
  int rays_per_degree = 4;
  bool ground_returns = true;

  // beams evenly spaced from lo_deg to hi_deg.
  static SensorModel Default(int beams = 32, double lo_deg = -25.0, double hi_deg = 5.0);
  int beams() const { return static_cast<int>(elevations_deg.size()); }
  int azimuth_rays() const { return 360 * rays_per_degree; }
  void Validate() const;
};

// Nearest positive hit distance of a ray against an upright box, or a
// negative value on a miss. The direction need not be unit length; the
// result is in units of the direction's length.
double RayBoxHit(const Vec3& origin, const Vec3& dir, const Box3D& box);

struct RaycastResult {
  Sweep distorted;            // capture frames
  std::vector<Box3D> labels;  // scene boxes in keyframe A
  // Per label, the number of returns from that vehicle.
  std::vector<int> points_per_label;
};

// Casts the rays of packet n from track pose n. Ray k of a beam has azimuth
// (k + 0.5) / rays_per_degree degrees in the sensor frame and belongs to
// packet floor(azimuth * N / 360).
RaycastResult RaycastSweep(const Scene& scene, const InterpolatedTrack& track,
                           const SensorModel& sensor);

}  // namespace lidartraj

#endif  // LIDARTRAJ_SCENE_H_
