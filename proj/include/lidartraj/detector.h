#ifndef LIDARTRAJ_DETECTOR_H_
#define LIDARTRAJ_DETECTOR_H_

#include <span>
#include <string>
#include <vector>

#include "lidartraj/autodiff.h"
#include "lidartraj/box.h"
#include "lidartraj/sweep.h"

namespace lidartraj {

// Single-stage, single-class box detector built from soft point membership.
// The classification branch scores a box by its soft point count; the
// regression branch estimates a box center as a soft-weighted centroid.
struct DetectorConfig {
  double temperature = 50.0;      // 1/m
  double count_threshold = 20.0;  // points
  double score_gain = 0.5;
  double proposal_spacing = 1.0;  // m
  std::vector<double> proposal_yaws = {0.0, M_PI / 2};
  double nms_iou = 0.3;
  double score_floor = 0.5;
  Vec3 size_prior = Vec3(4.5, 1.9, 1.7);
  // Points below ground_z + ground_clearance are ground returns and ignored.
  double ground_z = -1.8;
  double ground_clearance = 0.2;
  // Points farther than this beyond a box face contribute nothing (their soft
  // weight is below sigmoid(-temperature * margin)).
  double support_margin = 1.0;
  double regression_inflation = 1.5;
  double proposal_range = 70.0;  // m, BEV half-extent of the proposal lattice
  // Minimum lattice score for a proposal to seed a box fit.
  double seed_floor = 0.05;
  // Points closer than this (BEV) are linked into the same object cluster.
  double cluster_link = 0.6;
  // Fitted boxes are pushed this far past the outermost visible points.
  double fit_margin = 0.1;
  // Fraction of cluster points ignored at each end of an extent.
  double fit_trim = 0.05;

  void Validate() const;
};

enum class Branch { kClassification, kRegression };
const char* BranchName(Branch b);
Branch ParseBranch(const std::string& name);

// Product over the three box axes of
// sigmoid(temperature * (half_extent - |coordinate in box frame|)).
template <class S>
S SoftPointInBox(const S& px, const S& py, const S& pz, const Box3D& box, double temperature);

double SoftPointInBox(const Vec3& p, const Box3D& box, double temperature);

// sigmoid(a * (soft count - tau)) over the non-ground points of a sweep.
double ClassificationScore(std::span<const Vec3> points, const Box3D& box,
                           const DetectorConfig& cfg);
double ClassificationScore(const Sweep& sweep, const Box3D& box, const DetectorConfig& cfg);

// Soft-weighted centroid over a box inflated by cfg.regression_inflation.
// Falls back to box.center when the total weight is below 1e-9.
Vec3 RegressionEstimate(std::span<const Vec3> points, const Box3D& box,
                        const DetectorConfig& cfg);
Vec3 RegressionEstimate(const Sweep& sweep, const Box3D& box, const DetectorConfig& cfg);

// Loss to be minimized by an attacker: the negated detector loss.
// Classification: L = sum over labels of -log(score). Regression:
// L = sum over labels and axes of smooth-L1(estimate - center).
// Returns -L as a node on cloud.tape(). An empty label list yields a zero
// constant and a warning.
Var DetectorLoss(DiffCloud& cloud, std::span<const Box3D> labels, Branch branch,
                 const DetectorConfig& cfg);
// Plain-number evaluation of the same quantity.
double DetectorLossValue(std::span<const Vec3> points, std::span<const Box3D> labels,
                         Branch branch, const DetectorConfig& cfg);

// Scores the proposal lattice, fits a box to the object cluster under each
// surviving proposal, rescores the fitted box, then applies the score floor and
// greedy NMS. Sorted by score, descending. Deterministic.
std::vector<Detection> Detect(std::span<const Vec3> points, const DetectorConfig& cfg);
std::vector<Detection> Detect(const Sweep& sweep, const DetectorConfig& cfg);

// Box of the prior size fitted to one object's (non-ground) points: heading
// by the closeness criterion over 0..90 degrees, then anchored on the faces
// visible from the sensor at the origin.
Box3D FitBoxToCluster(std::span<const Vec3> cluster, const DetectorConfig& cfg);

// Greedy NMS over detections already sorted by descending score.
std::vector<Detection> NonMaxSuppression(std::vector<Detection> dets, double iou_threshold);

}  // namespace lidartraj

#endif  // LIDARTRAJ_DETECTOR_H_
