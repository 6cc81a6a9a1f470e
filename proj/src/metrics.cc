#include "lidartraj/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lidartraj/errors.h"

namespace lidartraj {

namespace {

using Pt = Eigen::Vector2d;

double Cross(const Pt& a, const Pt& b) { return a.x() * b.y() - a.y() * b.x(); }

double PolygonArea(const std::vector<Pt>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    a += Cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of `subject` against the convex CCW polygon `clip`.
std::vector<Pt> ClipConvex(std::vector<Pt> subject, const std::array<Pt, 4>& clip) {
  for (int e = 0; e < 4 && !subject.empty(); ++e) {
    const Pt& a = clip[e];
    const Pt& b = clip[(e + 1) % 4];
    const Pt edge = b - a;
    auto side = [&](const Pt& p) { return Cross(edge, p - a); };
    std::vector<Pt> out;
    out.reserve(subject.size() + 2);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Pt& cur = subject[i];
      const Pt& nxt = subject[(i + 1) % subject.size()];
      const double sc = side(cur), sn = side(nxt);
      if (sc >= 0.0) out.push_back(cur);
      if ((sc >= 0.0) != (sn >= 0.0)) {
        const double t = sc / (sc - sn);
        out.push_back(cur + t * (nxt - cur));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

double VerticalOverlap(const Box3D& a, const Box3D& b) {
  const double lo = std::max(a.center.z() - 0.5 * a.size.z(), b.center.z() - 0.5 * b.size.z());
  const double hi = std::min(a.center.z() + 0.5 * a.size.z(), b.center.z() + 0.5 * b.size.z());
  return std::max(0.0, hi - lo);
}

}  // namespace

double BevIntersection(const Box3D& a, const Box3D& b) {
  const auto ca = a.BevCorners();
  const auto cb = b.BevCorners();
  const double r = 0.5 * (std::hypot(a.size.x(), a.size.y()) + std::hypot(b.size.x(), b.size.y()));
  if ((a.center.head<2>() - b.center.head<2>()).norm() > r) return 0.0;
  const auto poly = ClipConvex(std::vector<Pt>(ca.begin(), ca.end()), cb);
  if (poly.size() < 3) return 0.0;
  return PolygonArea(poly);
}

double BevIou(const Box3D& a, const Box3D& b) {
  const double inter = BevIntersection(a, b);
  const double uni = a.size.x() * a.size.y() + b.size.x() * b.size.y() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double Iou3d(const Box3D& a, const Box3D& b) {
  const double dz = VerticalOverlap(a, b);
  if (dz <= 0.0) return 0.0;
  const double inter = BevIntersection(a, b) * dz;
  const double uni = a.Volume() + b.Volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

MatchScore IouMatcher(double iou_threshold) {
  return [iou_threshold](const Box3D& det, const Box3D& gt) -> std::optional<double> {
    const double iou = Iou3d(det, gt);
    if (iou >= iou_threshold && iou > 0.0) return iou;
    return std::nullopt;
  };
}

MatchScore CenterDistanceMatcher(double max_distance) {
  return [max_distance](const Box3D& det, const Box3D& gt) -> std::optional<double> {
    const double d = (det.center.head<2>() - gt.center.head<2>()).norm();
    if (d <= max_distance) return -d;
    return std::nullopt;
  };
}

void ApAccumulator::AddScene(std::span<const Detection> dets, std::span<const Box3D> gts,
                             const GtPredicate& gt_in_bin, const DetPredicate& det_in_bin) {
  std::vector<char> counted(gts.size(), 1);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gt_in_bin && !gt_in_bin(g, gts[g])) counted[g] = 0;
    num_gt_ += counted[g];
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<char> taken(gts.size(), 0);
  for (std::size_t idx : order) {
    const Detection& d = dets[idx];
    int best = -1;
    double best_q = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const auto q = matcher_(d.box, gts[g]);
      if (q && (best < 0 || *q > best_q)) {
        best = static_cast<int>(g);
        best_q = *q;
      }
    }
    if (best >= 0) {
      taken[best] = 1;
      if (counted[best]) scored_.emplace_back(d.score, true);
    } else if (!det_in_bin || det_in_bin(d)) {
      scored_.emplace_back(d.score, false);
    }
  }
}

ApResult ApAccumulator::Compute() const {
  ApResult r;
  r.num_gt = num_gt_;
  auto scored = scored_;
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  int tp = 0, fp = 0;
  for (const auto& [score, is_tp] : scored) {
    (is_tp ? tp : fp)++;
    PrPoint p;
    p.score = score;
    p.precision = static_cast<double>(tp) / (tp + fp);
    p.recall = num_gt_ > 0 ? static_cast<double>(tp) / num_gt_ : 0.0;
    r.curve.push_back(p);
  }
  r.num_tp = tp;
  r.num_fp = fp;
  if (num_gt_ == 0) {
    r.undefined = true;
    return r;
  }
  // Precision envelope from the right, then integrate over recall steps.
  std::vector<double> env(r.curve.size());
  double run = 0.0;
  for (std::size_t i = r.curve.size(); i-- > 0;) {
    run = std::max(run, r.curve[i].precision);
    env[i] = run;
  }
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < r.curve.size(); ++i) {
    r.ap += (r.curve[i].recall - prev_recall) * env[i];
    prev_recall = r.curve[i].recall;
  }
  return r;
}

ApResult AveragePrecision(std::span<const Detection> dets, std::span<const Box3D> gts,
                          double iou_threshold) {
  ApAccumulator acc(IouMatcher(iou_threshold));
  acc.AddScene(dets, gts);
  return acc.Compute();
}

CenterApResult CenterDistanceAp(std::span<const Detection> dets, std::span<const Box3D> gts,
                                std::span<const double> thresholds) {
  CenterApResult out;
  for (double t : thresholds) {
    ApAccumulator acc(CenterDistanceMatcher(t));
    acc.AddScene(dets, gts);
    out.by_threshold[t] = acc.Compute();
    out.mean += out.by_threshold[t].ap;
  }
  if (!thresholds.empty()) out.mean /= thresholds.size();
  return out;
}

int DepthBin(const Box3D& box, std::span<const double> edges) {
  const double r = std::hypot(box.center.x(), box.center.y());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (r >= edges[i] && r < edges[i + 1]) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> BinByDepth(std::span<const Box3D> gts, std::span<const double> edges) {
  std::vector<int> out;
  out.reserve(gts.size());
  for (const Box3D& b : gts) out.push_back(DepthBin(b, edges));
  return out;
}

std::string DepthBinName(std::span<const double> edges, int bin) {
  std::ostringstream os;
  os << edges[bin] << "-" << edges[bin + 1] << "m";
  return os.str();
}

int CountBinIndex(int points, std::span<const CountBin> bins) {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (points >= bins[i].min_points && (bins[i].max_points < 0 || points <= bins[i].max_points)) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

std::map<std::string, Drop> PerformanceDrop(const EvalReport& before, const EvalReport& after) {
  std::map<std::string, Drop> out;
  if (before.ap_by_bin.size() != after.ap_by_bin.size()) {
    throw ArgumentError("performance_drop: reports have different bin structures");
  }
  for (const auto& [bin, ap_before] : before.ap_by_bin) {
    auto it = after.ap_by_bin.find(bin);
    if (it == after.ap_by_bin.end()) {
      throw ArgumentError("performance_drop: bin '" + bin + "' missing from the second report");
    }
    Drop d;
    d.absolute = ap_before - it->second;
    if (ap_before > 0.0) {
      d.relative = d.absolute / ap_before;
      d.relative_defined = true;
    }
    out[bin] = d;
  }
  if (before.ap_center.size() != after.ap_center.size()) {
    throw ArgumentError("performance_drop: reports have different center thresholds");
  }
  for (const auto& [thr, ap_before] : before.ap_center) {
    auto it = after.ap_center.find(thr);
    if (it == after.ap_center.end()) {
      throw ArgumentError("performance_drop: center threshold missing from the second report");
    }
    std::ostringstream key;
    key << "center@" << thr << "m";
    Drop d;
    d.absolute = ap_before - it->second;
    if (ap_before > 0.0) {
      d.relative = d.absolute / ap_before;
      d.relative_defined = true;
    }
    out[key.str()] = d;
  }
  return out;
}

}  // namespace lidartraj
