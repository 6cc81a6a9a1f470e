#ifndef LIDARTRAJ_METRICS_H_
#define LIDARTRAJ_METRICS_H_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lidartraj/box.h"

namespace lidartraj {

// Area of the intersection of two boxes' BEV rectangles.
double BevIntersection(const Box3D& a, const Box3D& b);
double BevIou(const Box3D& a, const Box3D& b);
// BEV intersection times vertical overlap, over the union volume.
double Iou3d(const Box3D& a, const Box3D& b);

// Decides whether a detection may be matched to a ground truth, and how good
// the match is (higher is better).
using MatchScore = std::function<std::optional<double>(const Box3D& det, const Box3D& gt)>;
MatchScore IouMatcher(double iou_threshold);
MatchScore CenterDistanceMatcher(double max_distance);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double score = 0.0;
};

struct ApResult {
  double ap = 0.0;
  bool undefined = false;  // no ground truth to recall
  int num_gt = 0;
  int num_tp = 0;
  int num_fp = 0;
  std::vector<PrPoint> curve;
};

// Pools detections over several scenes. Matching is greedy in descending
// score order inside each scene; every ground truth is matched at most once.
// Optional bin predicates restrict evaluation to a subset: ground truths
// outside the bin are ignored along with detections matched to them, and
// unmatched detections count as false positives only if they fall in the bin.
class ApAccumulator {
 public:
  using DetPredicate = std::function<bool(const Detection&)>;
  using GtPredicate = std::function<bool(std::size_t gt_index, const Box3D&)>;

  explicit ApAccumulator(MatchScore matcher) : matcher_(std::move(matcher)) {}

  void AddScene(std::span<const Detection> dets, std::span<const Box3D> gts,
                const GtPredicate& gt_in_bin = {}, const DetPredicate& det_in_bin = {});
  // All-point interpolated area under the precision envelope.
  ApResult Compute() const;

 private:
  MatchScore matcher_;
  std::vector<std::pair<double, bool>> scored_;  // (score, is_tp)
  int num_gt_ = 0;
};

ApResult AveragePrecision(std::span<const Detection> dets, std::span<const Box3D> gts,
                          double iou_threshold);

struct CenterApResult {
  std::map<double, ApResult> by_threshold;
  double mean = 0.0;
};
CenterApResult CenterDistanceAp(std::span<const Detection> dets, std::span<const Box3D> gts,
                                std::span<const double> thresholds);

inline const std::vector<double> kDefaultDepthEdges = {0.0, 30.0, 50.0, 70.0};
inline const std::vector<double> kDefaultCenterThresholds = {0.5, 1.0, 2.0, 4.0};

// Index of the [edges[i], edges[i+1]) bin holding the BEV range of the box
// center, or -1 when out of range.
int DepthBin(const Box3D& box, std::span<const double> edges);
std::vector<int> BinByDepth(std::span<const Box3D> gts, std::span<const double> edges);
std::string DepthBinName(std::span<const double> edges, int bin);

// Point-count bins on the clean sweep: ">=100", "20-99", "1-19" by default.
struct CountBin {
  std::string name;
  int min_points;
  int max_points;  // inclusive; <0 means unbounded
};
inline const std::vector<CountBin> kDefaultCountBins = {
    {"pts>=100", 100, -1}, {"pts20-99", 20, 99}, {"pts1-19", 1, 19}};
int CountBinIndex(int points, std::span<const CountBin> bins);

struct Drop {
  double absolute = 0.0;
  double relative = 0.0;
  bool relative_defined = false;  // before > 0
};

struct EvalReport {
  std::map<std::string, double> ap_by_bin;
  std::map<std::string, bool> undefined;  // bins with no ground truth
  std::map<double, double> ap_center;
  double ap_center_mean = 0.0;
  std::map<std::string, Drop> drop;
  std::map<std::string, double> regularizer_stats;
};

// Absolute and relative drop per bin. Bins and center thresholds must match.
std::map<std::string, Drop> PerformanceDrop(const EvalReport& before, const EvalReport& after);

}  // namespace lidartraj

#endif  // LIDARTRAJ_METRICS_H_
