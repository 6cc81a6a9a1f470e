#include "commands.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lidartraj/attack.h"
#include "lidartraj/config.h"
#include "lidartraj/errors.h"
#include "lidartraj/io.h"
#include "lidartraj/logging.h"
#include "lidartraj/pipeline.h"
#include "lidartraj/plot.h"

namespace lidartraj::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Options every subcommand accepts.
struct Common {
  std::string config_path;
  std::vector<std::string> overrides;  // section.key=value
  std::string out_dir;
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "Run-config file");
  app->add_option("--set", c.overrides, "Override a config value: section.key=value");
  app->add_option("-o,--out", c.out_dir, "Output directory (overrides output.dir)");
}

RunConfig LoadConfig(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : ReadRunConfig(c.config_path);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects section.key=value, got '" + kv + "'");
    try {
      SetConfigValue(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const ArgumentError& e) {
      throw UsageError(std::string("--set ") + kv + ": " + e.what());
    }
  }
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  return cfg;
}

fs::path PrepareOut(const RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::string P(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

InterpolatedTrack TrackFrom(const std::string& poses_path, int N) {
  const std::vector<Pose> poses = ReadPoses(poses_path);
  if (poses.size() != 2) {
    throw FormatError("'" + poses_path + "' must hold exactly two keyframe poses, found " +
                      std::to_string(poses.size()));
  }
  return InterpolateTrack(poses[0], poses[1], N);
}

Sweep RequireFrame(Sweep sweep, SweepFrame frame, const std::string& path) {
  if (sweep.reference != frame) {
    throw UsageError("'" + path + "' is in frame " + FrameName(sweep.reference) + ", expected " +
                     FrameName(frame));
  }
  return sweep;
}

std::vector<int> PointsInBoxes(std::span<const Vec3> points, std::span<const Detection> dets) {
  std::vector<int> out;
  for (const Detection& d : dets) {
    int count = 0;
    for (const Vec3& p : points) count += d.box.Contains(p) ? 1 : 0;
    out.push_back(count);
  }
  return out;
}

SceneDetections DetectScene(std::span<const Vec3> points, const LabelSet& labels,
                            const DetectorConfig& det) {
  SceneDetections s;
  s.dets = Detect(points, det);
  s.gts = labels.boxes;
  s.gt_points = labels.points;
  s.det_points = PointsInBoxes(points, s.dets);
  return s;
}

void WriteReport(const fs::path& dir, const std::string& stem, const EvalReport& report) {
  WriteText(P(dir, stem + ".csv"), ReportCsv(report));
  WriteText(P(dir, stem + ".json"), ReportJson(report));
}

// One scene loaded from a simulate directory, or generated from the config.
struct Target {
  InterpolatedTrack track;
  Sweep distorted;
  LabelSet labels;
};

Target LoadTarget(const std::string& input, const RunConfig& cfg, int scene_index) {
  Target t;
  if (input.empty()) {
    SceneCase c = MakeCase(cfg.suite, scene_index);
    t.track = std::move(c.track);
    t.distorted = std::move(c.distorted);
    t.labels = {std::move(c.labels), std::move(c.label_points)};
    return t;
  }
  const fs::path dir(input);
  t.distorted = RequireFrame(ReadPoints(P(dir, "distorted.bin")), SweepFrame::kCaptureFrames,
                             P(dir, "distorted.bin"));
  t.track = TrackFrom(P(dir, "poses.txt"), t.distorted.packet_count());
  t.labels = ReadLabels(P(dir, "labels.txt"));
  return t;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  Common common;
  int scene_index = 0;
};

int RunSimulate(const SimulateArgs& a) {
  const RunConfig cfg = LoadConfig(a.common);
  cfg.Validate();
  const fs::path out = PrepareOut(cfg);
  const SceneCase c = MakeCase(cfg.suite, a.scene_index);
  WritePoses(P(out, "poses.txt"), {c.pose_a, c.pose_b});
  WriteLabels(P(out, "scene.txt"), {c.scene.boxes(), {}});
  WriteLabels(P(out, "labels.txt"), {c.labels, c.label_points});
  WritePoints(P(out, "distorted.bin"), c.distorted);
  WritePoints(P(out, "clean.bin"), Compensate(c.distorted, c.track));
  WriteText(P(out, "config.ini"), EmitRunConfig(cfg));
  std::printf("scene %d: %zu vehicles, %zu points in %d packets -> %s\n", a.scene_index,
              c.scene.vehicles.size(), c.distorted.point_count(), c.distorted.packet_count(),
              out.string().c_str());
  return kExitOk;
}

// ---- distort / compensate -------------------------------------------------

struct TransformArgs {
  std::string poses, points, output, perturbation;
  int steps = 0;
};

int RunDistort(const TransformArgs& a) {
  Sweep in = ReadPoints(a.points, a.steps);
  if (in.reference != SweepFrame::kKeyframeA) {
    throw UsageError("'" + a.points + "' is already in capture frames");
  }
  if (a.steps > 0 && in.packet_count() != a.steps) {
    in.packets = PartitionPackets(in.Flatten(), a.steps);
  }
  const InterpolatedTrack track = TrackFrom(a.poses, in.packet_count());
  WritePoints(a.output, Distort(in, track));
  return kExitOk;
}

int RunCompensate(const TransformArgs& a) {
  const Sweep in =
      RequireFrame(ReadPoints(a.points), SweepFrame::kCaptureFrames, a.points);
  const InterpolatedTrack track = TrackFrom(a.poses, in.packet_count());
  std::optional<Perturbation> delta;
  if (!a.perturbation.empty()) {
    delta = ReadPerturbation(a.perturbation);
    if (delta->size() != in.packet_count()) {
      throw UsageError("perturbation has " + std::to_string(delta->size()) + " packets, sweep has " +
                       std::to_string(in.packet_count()));
    }
  }
  WritePoints(a.output, Compensate(in, track, delta ? &*delta : nullptr));
  return kExitOk;
}

// ---- attack ---------------------------------------------------------------

struct AttackArgs {
  Common common;
  std::string input;
  int scene_index = 0;
  std::optional<std::string> mode, branch, regularizer;
  std::optional<int> iters, steps;
  std::optional<double> eps_t, eps_r, alpha_t, alpha_r, lambda_s, lambda_d;
  std::optional<std::uint64_t> seed;
};

void ApplyAttackFlags(const AttackArgs& a, RunConfig& cfg) {
  try {
    if (a.mode) cfg.attack.mode = ParseMode(*a.mode);
    if (a.branch) cfg.attack.branch = ParseBranch(*a.branch);
    if (a.regularizer) cfg.attack.regularizer = ParseRegularizer(*a.regularizer);
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  if (a.iters) cfg.attack.iters = *a.iters;
  if (a.steps) cfg.suite.N = *a.steps;
  if (a.eps_t) cfg.attack.eps_t = *a.eps_t;
  if (a.eps_r) cfg.attack.eps_R = *a.eps_r;
  if (a.alpha_t) cfg.attack.alpha_t = *a.alpha_t;
  if (a.alpha_r) cfg.attack.alpha_R = *a.alpha_r;
  if (a.lambda_s) cfg.attack.lambda_s = *a.lambda_s;
  if (a.lambda_d) cfg.attack.lambda_d = *a.lambda_d;
  if (a.seed) cfg.attack.seed = *a.seed;
}

int RunAttackCommand(const AttackArgs& a) {
  RunConfig cfg = LoadConfig(a.common);
  ApplyAttackFlags(a, cfg);
  cfg.Validate();
  Target t = LoadTarget(a.input, cfg, a.scene_index);
  if (!a.input.empty() && a.steps && *a.steps != t.distorted.packet_count()) {
    throw UsageError("--steps " + std::to_string(*a.steps) + " does not match the " +
                     std::to_string(t.distorted.packet_count()) + " packets of the input sweep");
  }
  const fs::path out = PrepareOut(cfg);
  const std::vector<Vec3> clean = Compensate(t.distorted, t.track).Flatten();
  const AttackProblem problem(t.distorted, t.track, t.labels.boxes, cfg.attack, cfg.detector);
  const AttackResult r = RunAttack(problem);
  const Sweep attacked = Compensate(t.distorted, t.track, &r.delta);
  const std::vector<Vec3> attacked_points = attacked.Flatten();

  WritePerturbation(P(out, "perturbation.txt"), r.delta);
  WriteLossTrace(P(out, "loss_trace.csv"), r);
  WritePoints(P(out, "attacked.bin"), attacked);
  WriteDetections(P(out, "detections_clean.txt"), Detect(clean, cfg.detector));
  WriteDetections(P(out, "detections_attacked.txt"), Detect(attacked_points, cfg.detector));
  WriteText(P(out, "config.ini"), EmitRunConfig(cfg));

  std::ostringstream summary;
  summary << "metric,value\n"
          << "initial_loss," << FormatDouble(r.loss_trace.front()) << '\n'
          << "final_loss," << FormatDouble(r.loss_trace.back()) << '\n'
          << "smoothness," << FormatDouble(SmoothnessValue(r.delta, 1.0, 1.0, cfg.attack.p)) << '\n'
          << "lp_distance," << FormatDouble(LpDistanceValue(clean, attacked_points, cfg.attack.p))
          << '\n'
          << "chamfer," << FormatDouble(ChamferValue(clean, attacked_points)) << '\n'
          << "max_abs_t," << FormatDouble(r.delta.MaxAbsTranslation()) << '\n'
          << "max_abs_R," << FormatDouble(r.delta.MaxAbsRotation()) << '\n';
  WriteText(P(out, "attack_summary.csv"), summary.str());
  std::printf("%s attack (%s): loss %.6g -> %.6g over %d iterations -> %s\n",
              ModeName(cfg.attack.mode), BranchName(cfg.attack.branch), r.loss_trace.front(),
              r.loss_trace.back(), cfg.attack.iters, out.string().c_str());
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string labels, clean, perturbed;
  std::string conditions = "clean,random-translation,translation,rotation,full,polynomial";
};

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int RunEvalFiles(const EvalArgs& a, const RunConfig& cfg) {
  if (a.clean.empty() || a.perturbed.empty()) {
    throw UsageError("eval with --labels needs --clean and --perturbed point files");
  }
  const LabelSet labels = ReadLabels(a.labels);
  const auto load = [](const std::string& path) {
    return RequireFrame(ReadPoints(path), SweepFrame::kKeyframeA, path).Flatten();
  };
  const std::vector<Vec3> clean = load(a.clean), perturbed = load(a.perturbed);
  const std::array<SceneDetections, 1> before{DetectScene(clean, labels, cfg.detector)};
  const std::array<SceneDetections, 1> after{DetectScene(perturbed, labels, cfg.detector)};
  const EvalReport base = Evaluate(before, cfg.eval);
  EvalReport report = Evaluate(after, cfg.eval);
  report.drop = PerformanceDrop(base, report);
  report.regularizer_stats["lp_mean"] =
      clean.size() == perturbed.size() ? LpDistanceValue(clean, perturbed, cfg.attack.p) : NAN;
  if (!clean.empty() && !perturbed.empty()) {
    report.regularizer_stats["chamfer_mean"] = ChamferValue(clean, perturbed);
  }
  const fs::path out = PrepareOut(cfg);
  WriteReport(out, "report_clean", base);
  WriteReport(out, "report", report);
  std::printf("AP clean %.4f perturbed %.4f (drop %.4f) -> %s\n", base.ap_by_bin.at("all"),
              report.ap_by_bin.at("all"), report.drop.at("all").absolute, out.string().c_str());
  return kExitOk;
}

int RunEvalSuite(const EvalArgs& a, const RunConfig& cfg) {
  std::vector<std::string> names = SplitList(a.conditions);
  if (names.empty()) throw UsageError("no conditions given");
  std::vector<Condition> conditions;
  try {
    for (const std::string& n : names) conditions.push_back(StandardCondition(n, cfg.attack));
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
  const fs::path out = PrepareOut(cfg);
  const std::vector<SceneCase> suite = MakeSuite(cfg.suite);
  const ConditionOutcome clean =
      RunCondition(suite, StandardCondition("clean", cfg.attack), cfg.detector, cfg.eval,
                   cfg.threads);
  std::ostringstream summary;
  summary << "condition,ap,ap_center_mean,relative_drop,smoothness_median,lp_mean,chamfer_mean\n";
  for (const Condition& c : conditions) {
    ConditionOutcome o = c.kind == ConditionKind::kClean
                             ? clean
                             : RunCondition(suite, c, cfg.detector, cfg.eval, cfg.threads);
    AttachDrop(clean.report, o);
    WriteReport(out, "report_" + c.name, o.report);
    std::ostringstream per_scene;
    per_scene << "scene,ap\n";
    for (std::size_t i = 0; i < o.scenes.size(); ++i) {
      per_scene << i << ',' << FormatDouble(o.scenes[i].ap) << '\n';
    }
    WriteText(P(out, "scenes_" + c.name + ".csv"), per_scene.str());
    const auto stat = [&](const char* k) {
      auto it = o.report.regularizer_stats.find(k);
      return it == o.report.regularizer_stats.end() ? std::string("") : FormatDouble(it->second);
    };
    const Drop& d = o.report.drop.at("all");
    summary << c.name << ',' << FormatDouble(o.report.ap_by_bin.at("all")) << ','
            << FormatDouble(o.report.ap_center_mean) << ','
            << (d.relative_defined ? FormatDouble(d.relative) : std::string("nan")) << ','
            << stat("smoothness_median") << ',' << stat("lp_mean") << ',' << stat("chamfer_mean")
            << '\n';
    std::printf("%-20s AP %.4f\n", c.name.c_str(), o.report.ap_by_bin.at("all"));
  }
  WriteText(P(out, "summary.csv"), summary.str());
  WriteText(P(out, "config.ini"), EmitRunConfig(cfg));
  return kExitOk;
}

int RunEval(const EvalArgs& a) {
  const RunConfig cfg = LoadConfig(a.common);
  cfg.Validate();
  return a.labels.empty() ? RunEvalSuite(a, cfg) : RunEvalFiles(a, cfg);
}

// ---- sweep-params ---------------------------------------------------------

struct SweepArgs {
  Common common;
  std::string steps, iters, alpha_t, alpha_r;
};

std::vector<double> ListOr(const std::string& text, double fallback) {
  if (text.empty()) return {fallback};
  try {
    return ParseNumberList(text);
  } catch (const ArgumentError& e) {
    throw UsageError(std::string("bad list '") + text + "': " + e.what());
  }
}

int ToCount(double v, const char* what) {
  if (v != std::floor(v) || v < 1) throw UsageError(std::string(what) + " must be positive integers");
  return static_cast<int>(v);
}

int RunSweepParams(const SweepArgs& a) {
  const RunConfig base = LoadConfig(a.common);
  base.Validate();
  const auto steps = ListOr(a.steps, base.suite.N);
  const auto iters = ListOr(a.iters, base.attack.iters);
  const auto alpha_t = ListOr(a.alpha_t, base.attack.alpha_t);
  const auto alpha_r = ListOr(a.alpha_r, base.attack.alpha_R);
  const fs::path out = PrepareOut(base);
  std::ostringstream summary;
  summary << "cell,steps,iters,alpha_t,alpha_r,clean_ap,attacked_ap,relative_drop\n";
  int cell = 0;
  for (double s : steps) {
    RunConfig cfg = base;
    cfg.suite.N = ToCount(s, "--steps");
    cfg.Validate();
    const std::vector<SceneCase> suite = MakeSuite(cfg.suite);
    const ConditionOutcome clean = RunCondition(suite, StandardCondition("clean", cfg.attack),
                                                cfg.detector, cfg.eval, cfg.threads);
    for (double it : iters) {
      for (double at : alpha_t) {
        for (double ar : alpha_r) {
          cfg.attack.iters = static_cast<int>(it);
          if (it != std::floor(it) || it < 0) throw UsageError("--iters must be non-negative integers");
          cfg.attack.alpha_t = at;
          cfg.attack.alpha_R = ar;
          cfg.attack.Validate();
          const Condition c = StandardCondition(ModeName(cfg.attack.mode), cfg.attack);
          ConditionOutcome o = RunCondition(suite, c, cfg.detector, cfg.eval, cfg.threads);
          AttachDrop(clean.report, o);
          char stem[32];
          std::snprintf(stem, sizeof(stem), "cell_%03d", cell);
          WriteReport(out, stem, o.report);
          const Drop& d = o.report.drop.at("all");
          summary << cell << ',' << cfg.suite.N << ',' << cfg.attack.iters << ','
                  << FormatDouble(at) << ',' << FormatDouble(ar) << ','
                  << FormatDouble(clean.report.ap_by_bin.at("all")) << ','
                  << FormatDouble(o.report.ap_by_bin.at("all")) << ','
                  << (d.relative_defined ? FormatDouble(d.relative) : std::string("nan")) << '\n';
          std::printf("cell %d: N=%d iters=%d alpha_t=%g alpha_r=%g  AP %.4f -> %.4f\n", cell,
                      cfg.suite.N, cfg.attack.iters, at, ar, clean.report.ap_by_bin.at("all"),
                      o.report.ap_by_bin.at("all"));
          ++cell;
        }
      }
    }
  }
  WriteText(P(out, "summary.csv"), summary.str());
  WriteText(P(out, "config.ini"), EmitRunConfig(base));
  return kExitOk;
}

// ---- plot -----------------------------------------------------------------

struct PlotArgs {
  Common common;
  std::string kind;
  std::vector<std::string> traces;
  std::vector<std::string> points;
  std::string labels;
  std::string name = "plot";
};

std::vector<Series> ReadTraces(const std::vector<std::string>& paths) {
  std::vector<Series> out;
  for (const std::string& path : paths) {
    std::istringstream in(ReadText(path));
    std::string line;
    std::getline(in, line);
    if (line.rfind("iteration,detector_loss", 0) != 0) {
      throw FormatError("'" + path + "' is not a loss trace");
    }
    Series s{fs::path(path).parent_path().filename().string(), {}, {}};
    if (s.name.empty()) s.name = fs::path(path).stem().string();
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      std::stringstream ls(line);
      std::string a, b;
      if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": malformed row");
      }
      try {
        s.x.push_back(std::stod(a));
        s.y.push_back(std::stod(b));
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": malformed row");
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

int RunPlot(const PlotArgs& a) {
  const RunConfig cfg = LoadConfig(a.common);
  cfg.Validate();
  const fs::path out = PrepareOut(cfg);
  std::string svg;
  std::vector<Series> series;
  if (a.kind == "trace") {
    if (a.traces.empty()) throw UsageError("plot trace needs --trace files");
    series = ReadTraces(a.traces);
    svg = SvgLineChart(series, "Attack loss trace", "iteration", "detector term");
  } else if (a.kind == "pr") {
    if (a.labels.empty() || a.points.empty()) throw UsageError("plot pr needs --labels and --points");
    const LabelSet labels = ReadLabels(a.labels);
    for (const std::string& path : a.points) {
      const std::vector<Vec3> pts = ReadPoints(path).Flatten();
      const std::vector<Detection> dets = Detect(pts, cfg.detector);
      series.push_back(PrSeries(fs::path(path).stem().string(),
                                AveragePrecision(dets, labels.boxes, cfg.eval.iou)));
    }
    svg = SvgLineChart(series, "Precision-recall", "recall", "precision");
  } else if (a.kind == "bev") {
    if (a.points.empty() || a.points.size() > 2) throw UsageError("plot bev needs one or two --points");
    std::vector<ScatterLayer> layers;
    const char* colors[] = {"#7f7f7f", "#1f77b4"};
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      ScatterLayer l{fs::path(a.points[i]).stem().string(), ReadPoints(a.points[i]).Flatten(),
                     colors[i]};
      Series s{l.name, {}, {}};
      for (const Vec3& p : l.points) {
        s.x.push_back(p.x());
        s.y.push_back(p.y());
      }
      series.push_back(std::move(s));
      layers.push_back(std::move(l));
    }
    const LabelSet labels = a.labels.empty() ? LabelSet{} : ReadLabels(a.labels);
    const std::vector<Detection> dets = Detect(layers.back().points, cfg.detector);
    svg = SvgBevScatter(layers, labels.boxes, dets, "Bird's-eye view");
  } else {
    throw UsageError("unknown plot kind '" + a.kind + "' (trace, pr, bev)");
  }
  WriteText(P(out, a.name + ".svg"), svg);
  WriteText(P(out, a.name + ".csv"), SeriesCsv(series));
  std::printf("wrote %s.svg and %s.csv in %s\n", a.name.c_str(), a.name.c_str(),
              out.string().c_str());
  return kExitOk;
}

}  // namespace

int Main(int argc, char** argv) {
  CLI::App app{"LiDAR trajectory perturbation toolkit"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Raycast a synthetic scene into a distorted sweep");
  AddCommon(simulate, sim.common);
  simulate->add_option("--scene-index", sim.scene_index, "Scene of the suite to generate")
      ->check(CLI::NonNegativeNumber);

  TransformArgs dist, comp;
  auto* distort = app.add_subcommand("distort", "Re-express a keyframe sweep in capture frames");
  distort->add_option("--poses", dist.poses, "Keyframe poses A and B")->required();
  distort->add_option("--points", dist.points, "Points in keyframe A")->required();
  distort->add_option("--steps", dist.steps, "Packet count (required without a sidecar)");
  distort->add_option("--output", dist.output, "Output point file")->required();
  auto* compensate = app.add_subcommand("compensate", "Map a distorted sweep back to keyframe A");
  compensate->add_option("--poses", comp.poses, "Keyframe poses A and B")->required();
  compensate->add_option("--points", comp.points, "Points in capture frames")->required();
  compensate->add_option("--perturbation", comp.perturbation, "Trajectory perturbation file");
  compensate->add_option("--output", comp.output, "Output point file")->required();

  AttackArgs att;
  auto* attack = app.add_subcommand("attack", "PGD trajectory attack on one scene");
  AddCommon(attack, att.common);
  attack->add_option("--input", att.input, "Directory written by simulate");
  attack->add_option("--scene-index", att.scene_index, "Suite scene when no --input is given")
      ->check(CLI::NonNegativeNumber);
  attack->add_option("--mode", att.mode, "translation, rotation, full or polynomial");
  attack->add_option("--branch", att.branch, "classification or regression");
  attack->add_option("--regularizer", att.regularizer, "none, smoothness, lp or chamfer");
  attack->add_option("--iters", att.iters, "PGD iterations");
  attack->add_option("--steps", att.steps, "Interpolation steps N");
  attack->add_option("--eps-t", att.eps_t, "Translation budget, m");
  attack->add_option("--eps-r", att.eps_r, "Rotation budget per matrix entry");
  attack->add_option("--alpha-t", att.alpha_t, "Translation step, m");
  attack->add_option("--alpha-r", att.alpha_r, "Rotation step");
  attack->add_option("--lambda-s", att.lambda_s, "Smoothness weight");
  attack->add_option("--lambda-d", att.lambda_d, "Point-distance weight");
  attack->add_option("--seed", att.seed, "Attack seed");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "AP reports: one clean/perturbed pair or the scene suite");
  AddCommon(eval, ev.common);
  eval->add_option("--labels", ev.labels, "Label file (pair mode)");
  eval->add_option("--clean", ev.clean, "Clean points in keyframe A (pair mode)");
  eval->add_option("--perturbed", ev.perturbed, "Perturbed points in keyframe A (pair mode)");
  eval->add_option("--conditions", ev.conditions, "Comma-separated suite conditions");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep-params", "Attack AP over a parameter grid");
  AddCommon(sweep, sw.common);
  sweep->add_option("--steps", sw.steps, "Interpolation steps, e.g. 25,50,100,500,1000");
  sweep->add_option("--iters", sw.iters, "PGD iteration counts");
  sweep->add_option("--alpha-t", sw.alpha_t, "Translation step sizes");
  sweep->add_option("--alpha-r", sw.alpha_r, "Rotation step sizes");

  PlotArgs pl;
  auto* plot = app.add_subcommand("plot", "SVG and CSV plots");
  AddCommon(plot, pl.common);
  plot->add_option("kind", pl.kind, "trace, pr or bev")->required();
  plot->add_option("--trace", pl.traces, "Loss trace CSV files");
  plot->add_option("--points", pl.points, "Point files");
  plot->add_option("--labels", pl.labels, "Label file");
  plot->add_option("--name", pl.name, "Output file stem");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (quiet) SetWarningsEnabled(false);

  try {
    if (*simulate) return RunSimulate(sim);
    if (*distort) return RunDistort(dist);
    if (*compensate) return RunCompensate(comp);
    if (*attack) return RunAttackCommand(att);
    if (*eval) return RunEval(ev);
    if (*sweep) return RunSweepParams(sw);
    if (*plot) return RunPlot(pl);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace lidartraj::cli
