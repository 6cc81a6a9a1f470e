#include "lidartraj/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include "lidartraj/errors.h"

namespace lidartraj {

std::uint64_t CaseSeed(std::uint64_t suite_seed, int index) {
  // splitmix64 of the pair, so neighbouring indices give unrelated streams.
  std::uint64_t z = suite_seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(index) + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SceneCase MakeCase(const SuiteConfig& cfg, int index) {
  SceneCase c;
  c.index = index;
  const std::uint64_t seed = CaseSeed(cfg.seed, index);
  c.scene = GenerateScene(seed, cfg.n_vehicles, cfg.scene);
  std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
  std::uniform_real_distribution<double> curv(-cfg.max_curvature, cfg.max_curvature);
  const double kappa = cfg.max_curvature > 0.0 ? curv(rng) : 0.0;
  std::tie(c.pose_a, c.pose_b) = GenerateTrajectory(cfg.speed, cfg.duration, kappa);
  c.track = InterpolateTrack(c.pose_a, c.pose_b, cfg.N);
  RaycastResult ray = RaycastSweep(c.scene, c.track, cfg.sensor);
  c.distorted = std::move(ray.distorted);
  c.labels = std::move(ray.labels);
  c.label_points = std::move(ray.points_per_label);
  return c;
}

std::vector<SceneCase> MakeSuite(const SuiteConfig& cfg) {
  std::vector<SceneCase> out;
  out.reserve(cfg.scenes);
  for (int i = 0; i < cfg.scenes; ++i) out.push_back(MakeCase(cfg, i));
  return out;
}

void EvalConfig::Validate() const {
  if (!(iou > 0.0 && iou <= 1.0)) throw ArgumentError("evaluation IoU must lie in (0, 1]");
  if (depth_edges.size() < 2) throw ArgumentError("need at least two depth edges");
  for (std::size_t i = 1; i < depth_edges.size(); ++i) {
    if (!(depth_edges[i] > depth_edges[i - 1])) {
      throw ArgumentError("depth edges must be strictly increasing");
    }
  }
  for (double t : center_thresholds) {
    if (!(t > 0.0)) throw ArgumentError("center-distance thresholds must be positive");
  }
}

EvalReport Evaluate(std::span<const SceneDetections> scenes, const EvalConfig& cfg) {
  cfg.Validate();
  EvalReport report;
  auto run = [&](const std::string&, const MatchScore& matcher,
                 const std::function<bool(const SceneDetections&, std::size_t, const Box3D&)>& gt_in,
                 const std::function<bool(const SceneDetections&, const Detection&, std::size_t)>&
                     det_in) {
    ApAccumulator acc(matcher);
    for (const SceneDetections& s : scenes) {
      auto gt_pred = [&](std::size_t g, const Box3D& b) { return gt_in(s, g, b); };
      auto det_pred = [&](const Detection& d) {
        const std::size_t idx = static_cast<std::size_t>(&d - s.dets.data());
        return det_in(s, d, idx);
      };
      acc.AddScene(s.dets, s.gts, gt_pred, det_pred);
    }
    return acc.Compute();
  };
  auto counted = [&](const SceneDetections& s, std::size_t g) {
    return s.gt_points.empty() || s.gt_points[g] >= cfg.min_label_points;
  };
  auto any_det = [](const SceneDetections&, const Detection&, std::size_t) { return true; };

  const MatchScore iou = IouMatcher(cfg.iou);
  auto record = [&](const std::string& name, const ApResult& r) {
    report.ap_by_bin[name] = r.ap;
    report.undefined[name] = r.undefined;
  };
  record("all", run("all", iou,
                    [&](const SceneDetections& s, std::size_t g, const Box3D&) {
                      return counted(s, g);
                    },
                    any_det));
  for (std::size_t b = 0; b + 1 < cfg.depth_edges.size(); ++b) {
    const int bin = static_cast<int>(b);
    record(DepthBinName(cfg.depth_edges, bin),
           run("depth", iou,
               [&](const SceneDetections& s, std::size_t g, const Box3D& box) {
                 return counted(s, g) && DepthBin(box, cfg.depth_edges) == bin;
               },
               [&](const SceneDetections&, const Detection& d, std::size_t) {
                 return DepthBin(d.box, cfg.depth_edges) == bin;
               }));
  }
  for (std::size_t b = 0; b < cfg.count_bins.size(); ++b) {
    const int bin = static_cast<int>(b);
    record(cfg.count_bins[b].name,
           run("count", iou,
               [&](const SceneDetections& s, std::size_t g, const Box3D&) {
                 return !s.gt_points.empty() &&
                        CountBinIndex(s.gt_points[g], cfg.count_bins) == bin;
               },
               [&](const SceneDetections& s, const Detection&, std::size_t idx) {
                 return idx < s.det_points.size() &&
                        CountBinIndex(s.det_points[idx], cfg.count_bins) == bin;
               }));
  }
  double mean = 0.0;
  for (double t : cfg.center_thresholds) {
    const ApResult r = run("center", CenterDistanceMatcher(t),
                           [&](const SceneDetections& s, std::size_t g, const Box3D&) {
                             return counted(s, g);
                           },
                           any_det);
    report.ap_center[t] = r.ap;
    mean += r.ap;
  }
  if (!cfg.center_thresholds.empty()) mean /= cfg.center_thresholds.size();
  report.ap_center_mean = mean;
  return report;
}

double SceneAp(const SceneDetections& scene, const EvalConfig& cfg) {
  const std::array<SceneDetections, 1> one{scene};
  return Evaluate(one, cfg).ap_by_bin.at("all");
}

const char* ConditionKindName(ConditionKind k) {
  switch (k) {
    case ConditionKind::kClean: return "clean";
    case ConditionKind::kRandomTrajectory: return "random-trajectory";
    case ConditionKind::kRandomPoints: return "random-points";
    case ConditionKind::kTrajectoryAttack: return "trajectory";
    case ConditionKind::kCoordinateAttack: return "coordinate";
  }
  return "?";
}

ConditionKind ParseConditionKind(const std::string& name) {
  for (ConditionKind k : {ConditionKind::kClean, ConditionKind::kRandomTrajectory,
                          ConditionKind::kRandomPoints, ConditionKind::kTrajectoryAttack,
                          ConditionKind::kCoordinateAttack}) {
    if (name == ConditionKindName(k)) return k;
  }
  throw ArgumentError("unknown condition kind '" + name + "'");
}

Condition StandardCondition(const std::string& name, const AttackConfig& base) {
  Condition c{name, ConditionKind::kClean, base};
  if (name == "clean") return c;
  if (name == "random-points") {
    c.kind = ConditionKind::kRandomPoints;
  } else if (name == "coordinate") {
    c.kind = ConditionKind::kCoordinateAttack;
  } else if (name.rfind("random-", 0) == 0) {
    c.kind = ConditionKind::kRandomTrajectory;
    c.attack.mode = ParseMode(name.substr(7));
    if (c.attack.mode == PerturbationMode::kPolynomial) {
      throw ArgumentError("no random baseline for the polynomial mode");
    }
  } else {
    c.kind = ConditionKind::kTrajectoryAttack;
    c.attack.mode = ParseMode(name);
  }
  return c;
}

std::vector<Vec3> PerturbedPoints(const SceneCase& scene, const Condition& condition,
                                  const DetectorConfig& detector, SceneOutcome* outcome) {
  const AttackConfig& a = condition.attack;
  const std::uint64_t seed = CaseSeed(a.seed, scene.index);
  const std::vector<Vec3> clean = Compensate(scene.distorted, scene.track).Flatten();
  std::optional<Perturbation> delta;
  std::vector<Vec3> points;
  switch (condition.kind) {
    case ConditionKind::kClean:
      points = clean;
      break;
    case ConditionKind::kRandomTrajectory:
      delta = RandomTrajectoryPerturbation(a.mode, scene.track.size(), a.eps_t, a.eps_R, a.eps_t,
                                           a.eps_R, seed);
      break;
    case ConditionKind::kRandomPoints:
      points = RandomPointNoise(clean, a.eps_t, seed);
      break;
    case ConditionKind::kTrajectoryAttack: {
      AttackConfig cfg = a;
      cfg.seed = seed;
      const AttackProblem problem(scene.distorted, scene.track, scene.labels, cfg, detector);
      AttackResult r = RunAttack(problem);
      delta = r.delta;
      if (outcome) outcome->attack = std::move(r);
      break;
    }
    case ConditionKind::kCoordinateAttack:
      points = CoordinateAttack(clean, scene.labels, a.eps_t, a, detector).points;
      break;
  }
  if (delta) {
    points = Compensate(scene.distorted, scene.track, &*delta).Flatten();
    if (outcome) outcome->smoothness = SmoothnessValue(*delta, 1.0, 1.0, a.p);
  }
  if (outcome && !clean.empty()) {
    outcome->lp = LpDistanceValue(clean, points, a.p);
    outcome->chamfer = ChamferValue(clean, points);
  }
  return points;
}

ConditionOutcome RunCondition(std::span<const SceneCase> suite, const Condition& condition,
                              const DetectorConfig& detector, const EvalConfig& eval,
                              int threads) {
  ConditionOutcome out;
  out.condition = condition;
  out.scenes.resize(suite.size());
  auto work = [&](std::size_t i) {
    SceneOutcome& so = out.scenes[i];
    const std::vector<Vec3> points = PerturbedPoints(suite[i], condition, detector, &so);
    so.detections.dets = Detect(points, detector);
    so.detections.gts = suite[i].labels;
    so.detections.gt_points = suite[i].label_points;
    for (const Detection& d : so.detections.dets) {
      int count = 0;
      for (const Vec3& p : points) count += d.box.Contains(p) ? 1 : 0;
      so.detections.det_points.push_back(count);
    }
    so.ap = SceneAp(so.detections, eval);
  };

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(suite.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < suite.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < suite.size(); i = next++) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<SceneDetections> dets;
  for (const SceneOutcome& so : out.scenes) dets.push_back(so.detections);
  out.report = Evaluate(dets, eval);
  if (condition.kind != ConditionKind::kClean && !out.scenes.empty()) {
    std::vector<double> s, lp, ch;
    for (const SceneOutcome& so : out.scenes) {
      s.push_back(so.smoothness);
      lp.push_back(so.lp);
      ch.push_back(so.chamfer);
    }
    auto mean = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      return m / v.size();
    };
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    out.report.regularizer_stats["smoothness_median"] = median(s);
    out.report.regularizer_stats["smoothness_mean"] = mean(s);
    out.report.regularizer_stats["lp_mean"] = mean(lp);
    out.report.regularizer_stats["chamfer_mean"] = mean(ch);
  }
  return out;
}

void AttachDrop(const EvalReport& baseline, ConditionOutcome& outcome) {
  outcome.report.drop = PerformanceDrop(baseline, outcome.report);
}

}  // namespace lidartraj
