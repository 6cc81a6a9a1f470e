#ifndef LIDARTRAJ_PIPELINE_H_
#define LIDARTRAJ_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidartraj/attack.h"
#include "lidartraj/detector.h"
#include "lidartraj/metrics.h"
#include "lidartraj/scene.h"

namespace lidartraj {

// A family of seeded synthetic scenes with one sweep each.
struct SuiteConfig {
  int scenes = 20;
  std::uint64_t seed = 1;
  int n_vehicles = 12;
  SceneParams scene;
  SensorModel sensor = SensorModel::Default();
  double speed = 10.0;          // m/s
  double duration = 0.5;        // s between keyframes
  double max_curvature = 0.02;  // 1/m; each scene draws uniformly in +-max
  int N = 100;
};

struct SceneCase {
  int index = 0;
  Scene scene;
  Pose pose_a, pose_b;
  InterpolatedTrack track;
  Sweep distorted;
  std::vector<Box3D> labels;
  std::vector<int> label_points;  // returns per label in the clean sweep
};

std::uint64_t CaseSeed(std::uint64_t suite_seed, int index);
SceneCase MakeCase(const SuiteConfig& cfg, int index);
std::vector<SceneCase> MakeSuite(const SuiteConfig& cfg);

struct EvalConfig {
  double iou = 0.7;
  std::vector<double> depth_edges = kDefaultDepthEdges;
  std::vector<double> center_thresholds = kDefaultCenterThresholds;
  std::vector<CountBin> count_bins = kDefaultCountBins;
  // Labels with fewer clean returns are ignored in every bin except the
  // point-count bins: they are neither recalled nor missed, and detections
  // matched to them are not false positives.
  int min_label_points = 30;

  void Validate() const;
};

struct SceneDetections {
  std::vector<Detection> dets;
  std::vector<Box3D> gts;
  std::vector<int> gt_points;   // clean returns per label
  std::vector<int> det_points;  // evaluated-cloud points inside each detection
};

// Pooled AP per bin ("all", depth bins, count bins), center-distance AP.
EvalReport Evaluate(std::span<const SceneDetections> scenes, const EvalConfig& cfg);
// AP@cfg.iou of one scene in the "all" bin (0 when it has no counted labels).
double SceneAp(const SceneDetections& scene, const EvalConfig& cfg);

enum class ConditionKind {
  kClean,
  kRandomTrajectory,  // Gaussian trajectory noise in attack.mode, clipped
  kRandomPoints,      // Gaussian point noise, sigma = attack.eps_t
  kTrajectoryAttack,  // PGD on the trajectory (attack.mode)
  kCoordinateAttack,  // PGD on point coordinates, clip attack.eps_t
};
const char* ConditionKindName(ConditionKind k);
ConditionKind ParseConditionKind(const std::string& name);

struct Condition {
  std::string name;
  ConditionKind kind = ConditionKind::kClean;
  AttackConfig attack;
};

// Named conditions built from a base attack config: "clean",
// "random-translation", "random-rotation", "random-full", "random-points",
// "coordinate", and the trajectory attacks "translation", "rotation", "full",
// "polynomial". Throws ArgumentError on other names.
Condition StandardCondition(const std::string& name, const AttackConfig& base);

struct SceneOutcome {
  SceneDetections detections;
  double ap = 0.0;
  std::optional<AttackResult> attack;
  double smoothness = 0.0;  // S of the perturbation (lambda_t = lambda_R = 1)
  double lp = 0.0;          // D_L between clean and perturbed clouds
  double chamfer = 0.0;     // D_C between clean and perturbed clouds
};

struct ConditionOutcome {
  Condition condition;
  EvalReport report;
  std::vector<SceneOutcome> scenes;
};

// Perturbed compensated points of one scene under a condition.
std::vector<Vec3> PerturbedPoints(const SceneCase& scene, const Condition& condition,
                                  const DetectorConfig& detector, SceneOutcome* outcome);

// Runs a condition on every scene. Scenes are processed in parallel on up to
// `threads` workers; results do not depend on the thread count.
ConditionOutcome RunCondition(std::span<const SceneCase> suite, const Condition& condition,
                              const DetectorConfig& detector, const EvalConfig& eval,
                              int threads = 1);

// Fills report.drop relative to a baseline, and regularizer means.
void AttachDrop(const EvalReport& baseline, ConditionOutcome& outcome);

}  // namespace lidartraj

#endif  // LIDARTRAJ_PIPELINE_H_
