#include "lidartraj/detector.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "lidartraj/errors.h"
#include "lidartraj/logging.h"
#include "lidartraj/metrics.h"

namespace lidartraj {

namespace {

// Visible extents up to this much beyond the prior width can still be a
// front or back face.
constexpr double kWidthSlack = 0.2;

// Distances below this count alike in the heading search.
constexpr double kClosenessFloor = 0.01;

bool IsGround(const Vec3& p, const DetectorConfig& cfg) {
  return p.z() < cfg.ground_z + cfg.ground_clearance;
}

bool InSupport(const Vec3& p, const Box3D& box, double margin) {
  const Vec3 l = box.ToLocal(p).cwiseAbs();
  const Vec3 h = box.half();
  return l.x() <= h.x() + margin && l.y() <= h.y() + margin && l.z() <= h.z() + margin;
}

// Single-node affine maps with the same summation order for both scalar types.
inline double Affine1(double x, double c, double off) { return off + c * x; }
inline Var Affine1(Var x, double c, double off) {
  const std::array<Var, 1> in{x};
  const std::array<double, 1> k{c};
  return Affine(in, k, off);
}
inline double Affine2(double x, double cx, double y, double cy, double off) {
  return off + cx * x + cy * y;
}
inline Var Affine2(Var x, double cx, Var y, double cy, double off) {
  const std::array<Var, 2> in{x, y};
  const std::array<double, 2> k{cx, cy};
  return Affine(in, k, off);
}

template <class S>
S SmoothL1(const S& e) {
  if (std::abs(ValueOf(e)) < 1.0) return 0.5 * (e * e);
  return Abs(e) - 0.5;
}

std::vector<std::size_t> SupportIndices(std::span<const Vec3> pts, const Box3D& box,
                                        const DetectorConfig& cfg) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!IsGround(pts[i], cfg) && InSupport(pts[i], box, cfg.support_margin)) idx.push_back(i);
  }
  return idx;
}

struct CellKey {
  long long x, y;
  bool operator==(const CellKey& o) const { return x == o.x && y == o.y; }
};
struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<long long>()(k.x * 73856093LL ^ k.y * 19349663LL);
  }
};

class BevGrid {
 public:
  BevGrid(std::span<const Vec3> pts, double cell) : pts_(pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[Key(pts[i].x(), pts[i].y())].push_back(i);
  }

  CellKey Key(double x, double y) const {
    return {static_cast<long long>(std::floor(x / cell_)),
            static_cast<long long>(std::floor(y / cell_))};
  }

  template <class Fn>
  void ForEachNear(double x, double y, double radius, Fn&& fn) const {
    const CellKey lo = Key(x - radius, y - radius), hi = Key(x + radius, y + radius);
    for (long long cx = lo.x; cx <= hi.x; ++cx) {
      for (long long cy = lo.y; cy <= hi.y; ++cy) {
        auto it = cells_.find({cx, cy});
        if (it == cells_.end()) continue;
        for (std::size_t i : it->second) fn(i);
      }
    }
  }

  const std::unordered_map<CellKey, std::vector<std::size_t>, CellHash>& cells() const {
    return cells_;
  }

 private:
  std::span<const Vec3> pts_;
  double cell_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

std::vector<int> ClusterLabels(std::span<const Vec3> pts, double link) {
  std::vector<int> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  BevGrid grid(pts, link);
  const double link2 = link * link;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    grid.ForEachNear(pts[i].x(), pts[i].y(), link, [&](std::size_t j) {
      if (j <= i) return;
      const double dx = pts[i].x() - pts[j].x(), dy = pts[i].y() - pts[j].y();
      if (dx * dx + dy * dy <= link2) {
        const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    });
  }
  std::vector<int> label(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) label[i] = find(static_cast<int>(i));
  return label;
}

// Extents of a cluster along (cos theta, sin theta) and its normal, ignoring
// the `trim` fraction of points at each end so that a few stray returns do not
// move the box.
struct Extents {
  double min1, max1, min2, max2;
};

Extents TrimmedExtents(std::span<const Vec3> cluster, double theta, double trim) {
  const double c = std::cos(theta), s = std::sin(theta);
  std::vector<double> a(cluster.size()), b(cluster.size());
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    a[i] = c * cluster[i].x() + s * cluster[i].y();
    b[i] = -s * cluster[i].x() + c * cluster[i].y();
  }
  const std::size_t k = static_cast<std::size_t>(trim * static_cast<double>(cluster.size()));
  auto nth = [](std::vector<double>& v, std::size_t i) {
    std::nth_element(v.begin(), v.begin() + i, v.end());
    return v[i];
  };
  const std::size_t last = cluster.size() - 1 - k;
  return {nth(a, k), nth(a, last), nth(b, k), nth(b, last)};
}

}  // namespace

Box3D FitBoxToCluster(std::span<const Vec3> cluster, const DetectorConfig& cfg) {
  if (cluster.empty()) throw ArgumentError("cannot fit a box to an empty cluster");
  auto closeness = [&](double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const Extents e = TrimmedExtents(cluster, theta, cfg.fit_trim);
    double score = 0.0;
    for (const Vec3& p : cluster) {
      const double a = c * p.x() + s * p.y(), b = -s * p.x() + c * p.y();
      const double d1 = std::max(0.0, std::min(e.max1 - a, a - e.min1));
      const double d2 = std::max(0.0, std::min(e.max2 - b, b - e.min2));
      score += 1.0 / std::max(std::min(d1, d2), kClosenessFloor);
    }
    return score;
  };
  const double deg = M_PI / 180.0;
  double best_theta = 0.0, best = -1.0;
  for (int k = 0; k < 90; ++k) {
    const double s = closeness(k * deg);
    if (s > best) {
      best = s;
      best_theta = k * deg;
    }
  }
  const double coarse = best_theta;
  for (int k = -4; k <= 4; ++k) {
    const double th = coarse + 0.25 * k * deg;
    const double s = closeness(th);
    if (s > best) {
      best = s;
      best_theta = th;
    }
  }

  const double c = std::cos(best_theta), s = std::sin(best_theta);
  const Eigen::Vector2d e1(c, s), e2(-s, c);
  const auto [min1, max1, min2, max2] = TrimmedExtents(cluster, best_theta, cfg.fit_trim);
  const double ext1 = max1 - min1, ext2 = max2 - min2;
  const double L = cfg.size_prior.x(), W = cfg.size_prior.y();
  // A visible extent clearly wider than a car can only be a long side. A
  // single narrow face is taken as the front or back; otherwise the longer
  // visible side is the long one.
  const double emax = std::max(ext1, ext2), emin = std::min(ext1, ext2);
  const bool longer_is_length = emax > W + kWidthSlack || emin >= 0.5 * W;
  const bool axis1_is_length = longer_is_length ? ext1 >= ext2 : ext1 < ext2;
  auto anchor = [&](double lo, double hi, double size) {
    if (lo >= 0.0) return lo - cfg.fit_margin + 0.5 * size;
    if (hi <= 0.0) return hi + cfg.fit_margin - 0.5 * size;
    return 0.5 * (lo + hi);
  };
  const double c1 = anchor(min1, max1, axis1_is_length ? L : W);
  const double c2 = anchor(min2, max2, axis1_is_length ? W : L);
  const Eigen::Vector2d ctr = c1 * e1 + c2 * e2;
  const double yaw = axis1_is_length ? best_theta : best_theta + M_PI / 2;
  const double h = cfg.size_prior.z();
  return Box3D(Vec3(ctr.x(), ctr.y(), cfg.ground_z + 0.5 * h), cfg.size_prior, yaw);
}

void DetectorConfig::Validate() const {
  if (!(temperature > 0.0)) throw ArgumentError("detector temperature must be positive");
  if (!(proposal_spacing > 0.0)) throw ArgumentError("proposal spacing must be positive");
  if (proposal_yaws.empty()) throw ArgumentError("proposal yaw set is empty");
  if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) throw ArgumentError("nms_iou must lie in [0, 1]");
  if (!(score_floor >= 0.0 && score_floor <= 1.0)) {
    throw ArgumentError("score_floor must lie in [0, 1]");
  }
  if (!(size_prior.minCoeff() > 0.0)) throw ArgumentError("size prior must be positive");
  if (!(support_margin > 0.0)) throw ArgumentError("support margin must be positive");
  if (!(regression_inflation > 0.0)) throw ArgumentError("regression inflation must be positive");
  if (!(cluster_link > 0.0)) throw ArgumentError("cluster link distance must be positive");
  if (!(fit_trim >= 0.0 && fit_trim < 0.5)) throw ArgumentError("fit_trim must lie in [0, 0.5)");
}

const char* BranchName(Branch b) {
  return b == Branch::kClassification ? "classification" : "regression";
}

Branch ParseBranch(const std::string& name) {
  if (name == "classification") return Branch::kClassification;
  if (name == "regression") return Branch::kRegression;
  throw ArgumentError("unknown detector branch '" + name + "'");
}

template <class S>
S SoftPointInBox(const S& px, const S& py, const S& pz, const Box3D& box, double temperature) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double cx = box.center.x(), cy = box.center.y(), cz = box.center.z();
  const Vec3 h = box.half();
  const S lx = Affine2(px, c, py, s, -(c * cx + s * cy));
  const S ly = Affine2(px, -s, py, c, s * cx - c * cy);
  const S lz = Affine1(pz, 1.0, -cz);
  const S fx = Sigmoid(Affine1(Abs(lx), -temperature, temperature * h.x()));
  const S fy = Sigmoid(Affine1(Abs(ly), -temperature, temperature * h.y()));
  const S fz = Sigmoid(Affine1(Abs(lz), -temperature, temperature * h.z()));
  return fx * fy * fz;
}

template double SoftPointInBox<double>(const double&, const double&, const double&,
                                       const Box3D&, double);
template Var SoftPointInBox<Var>(const Var&, const Var&, const Var&, const Box3D&, double);

double SoftPointInBox(const Vec3& p, const Box3D& box, double temperature) {
  return SoftPointInBox<double>(p.x(), p.y(), p.z(), box, temperature);
}

double ClassificationScore(std::span<const Vec3> points, const Box3D& box,
                           const DetectorConfig& cfg) {
  double count = 0.0;
  for (std::size_t i : SupportIndices(points, box, cfg)) {
    count += SoftPointInBox(points[i], box, cfg.temperature);
  }
  return Sigmoid(Affine1(count, cfg.score_gain, -cfg.score_gain * cfg.count_threshold));
}

double ClassificationScore(const Sweep& sweep, const Box3D& box, const DetectorConfig& cfg) {
  const auto pts = sweep.Flatten();
  return ClassificationScore(pts, box, cfg);
}

Vec3 RegressionEstimate(std::span<const Vec3> points, const Box3D& box,
                        const DetectorConfig& cfg) {
  const Box3D inflated = box.Inflated(cfg.regression_inflation);
  double wsum = 0.0;
  Vec3 acc = Vec3::Zero();
  for (std::size_t i : SupportIndices(points, inflated, cfg)) {
    const double w = SoftPointInBox(points[i], inflated, cfg.temperature);
    wsum += w;
    acc += w * points[i];
  }
  if (wsum <= 1e-9) return box.center;
  return acc / wsum;
}

Vec3 RegressionEstimate(const Sweep& sweep, const Box3D& box, const DetectorConfig& cfg) {
  const auto pts = sweep.Flatten();
  return RegressionEstimate(pts, box, cfg);
}

Var DetectorLoss(DiffCloud& cloud, std::span<const Box3D> labels, Branch branch,
                 const DetectorConfig& cfg) {
  Tape& tape = cloud.tape();
  if (labels.empty()) {
    Warn("detector_loss called with no labels; loss is zero");
    return tape.Constant(0.0);
  }
  const auto& values = cloud.values();
  std::vector<Var> terms;
  for (const Box3D& label : labels) {
    if (branch == Branch::kClassification) {
      std::vector<Var> weights;
      for (std::size_t i : SupportIndices(values, label, cfg)) {
        const auto& p = cloud.node(i);
        weights.push_back(SoftPointInBox<Var>(p[0], p[1], p[2], label, cfg.temperature));
      }
      const Var count = weights.empty() ? tape.Constant(0.0) : Sum(weights);
      const Var score =
          Sigmoid(Affine1(count, cfg.score_gain, -cfg.score_gain * cfg.count_threshold));
      // -L = sum of log(score), since BCE(score, 1) = -log(score).
      terms.push_back(Log(score));
    } else {
      const Box3D inflated = label.Inflated(cfg.regression_inflation);
      std::vector<Var> weights;
      std::array<std::vector<Var>, 3> coords;
      for (std::size_t i : SupportIndices(values, inflated, cfg)) {
        const auto& p = cloud.node(i);
        weights.push_back(SoftPointInBox<Var>(p[0], p[1], p[2], inflated, cfg.temperature));
        for (int k = 0; k < 3; ++k) coords[k].push_back(p[k]);
      }
      if (weights.empty()) continue;
      const Var wsum = Sum(weights);
      if (wsum.value() <= 1e-9) continue;
      for (int k = 0; k < 3; ++k) {
        const Var est = Dot(weights, coords[k]) / wsum;
        terms.push_back(-SmoothL1(est - label.center[k]));
      }
    }
  }
  if (terms.empty()) return tape.Constant(0.0);
  return Sum(terms);
}

double DetectorLossValue(std::span<const Vec3> points, std::span<const Box3D> labels,
                         Branch branch, const DetectorConfig& cfg) {
  double total = 0.0;
  for (const Box3D& label : labels) {
    if (branch == Branch::kClassification) {
      total += std::log(ClassificationScore(points, label, cfg));
    } else {
      const Vec3 est = RegressionEstimate(points, label, cfg);
      for (int k = 0; k < 3; ++k) total -= SmoothL1(est[k] - label.center[k]);
    }
  }
  return total;
}

std::vector<Detection> NonMaxSuppression(std::vector<Detection> dets, double iou_threshold) {
  std::vector<Detection> kept;
  for (const Detection& d : dets) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (BevIou(d.box, k.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> Detect(std::span<const Vec3> points, const DetectorConfig& cfg) {
  cfg.Validate();
  std::vector<Vec3> pts;
  for (const Vec3& p : points) {
    if (IsGround(p, cfg)) continue;
    if (std::abs(p.x()) > cfg.proposal_range || std::abs(p.y()) > cfg.proposal_range) continue;
    pts.push_back(p);
  }
  if (pts.empty()) return {};

  const BevGrid grid(pts, 1.0);
  const double reach = 0.5 * std::hypot(cfg.size_prior.x(), cfg.size_prior.y()) + cfg.support_margin;
  const double sp = cfg.proposal_spacing;

  // Lattice nodes that can see at least one point.
  std::set<std::pair<long long, long long>> nodes;
  for (const auto& [key, idx] : grid.cells()) {
    const double x0 = key.x * 1.0 - reach, x1 = (key.x + 1) * 1.0 + reach;
    const double y0 = key.y * 1.0 - reach, y1 = (key.y + 1) * 1.0 + reach;
    for (long long i = static_cast<long long>(std::ceil(x0 / sp));
         i <= static_cast<long long>(std::floor(x1 / sp)); ++i) {
      for (long long j = static_cast<long long>(std::ceil(y0 / sp));
           j <= static_cast<long long>(std::floor(y1 / sp)); ++j) {
        nodes.insert({i, j});
      }
    }
  }

  const double zc = cfg.ground_z + 0.5 * cfg.size_prior.z();
  std::vector<Detection> seeds;
  for (const auto& [i, j] : nodes) {
    const double x = i * sp, y = j * sp;
    if (std::abs(x) > cfg.proposal_range || std::abs(y) > cfg.proposal_range) continue;
    for (double yaw : cfg.proposal_yaws) {
      const Box3D box(Vec3(x, y, zc), cfg.size_prior, yaw);
      double count = 0.0;
      grid.ForEachNear(x, y, reach, [&](std::size_t k) {
        if (InSupport(pts[k], box, cfg.support_margin)) {
          count += SoftPointInBox(pts[k], box, cfg.temperature);
        }
      });
      const double score =
          Sigmoid(Affine1(count, cfg.score_gain, -cfg.score_gain * cfg.count_threshold));
      if (score >= cfg.seed_floor) seeds.push_back({box, score});
    }
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });

  const std::vector<int> label = ClusterLabels(pts, cfg.cluster_link);
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t k = 0; k < pts.size(); ++k) members[label[k]].push_back(k);

  std::set<int> fitted;
  std::vector<Detection> dets;
  for (const Detection& seed : seeds) {
    std::map<int, int> hits;
    grid.ForEachNear(seed.box.center.x(), seed.box.center.y(), reach, [&](std::size_t k) {
      if (seed.box.Contains(pts[k])) hits[label[k]]++;
    });
    if (hits.empty()) continue;
    const int cluster =
        std::max_element(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
          return a.second < b.second || (a.second == b.second && a.first > b.first);
        })->first;
    if (!fitted.insert(cluster).second) continue;
    std::vector<Vec3> cpts;
    for (std::size_t k : members[cluster]) cpts.push_back(pts[k]);
    if (cpts.size() < 3) continue;
    const Box3D box = FitBoxToCluster(cpts, cfg);
    const double score = ClassificationScore(pts, box, cfg);
    if (score >= cfg.score_floor) dets.push_back({box, score});
  }
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return NonMaxSuppression(std::move(dets), cfg.nms_iou);
}

std::vector<Detection> Detect(const Sweep& sweep, const DetectorConfig& cfg) {
  const auto pts = sweep.Flatten();
  return Detect(pts, cfg);
}

}  // namespace lidartraj
