// Python bindings for the main operations. Point clouds cross the boundary
// as (M, 3) float64 arrays; sweeps as points plus per-packet sizes.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "lidartraj/attack.h"
#include "lidartraj/detector.h"
#include "lidartraj/errors.h"
#include "lidartraj/geometry.h"
#include "lidartraj/metrics.h"
#include "lidartraj/pipeline.h"
#include "lidartraj/sweep.h"

namespace py = pybind11;

namespace lidartraj {
namespace {

using PointArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> ToPoints(const PointArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw ArgumentError("points must have shape (M, 3)");
  std::vector<Vec3> out(a.shape(0));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = Vec3(r(i, 0), r(i, 1), r(i, 2));
  return out;
}

PointArray FromPoints(const std::vector<Vec3>& pts) {
  PointArray a({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int k = 0; k < 3; ++k) w(i, k) = pts[i][k];
  }
  return a;
}

std::vector<int> PacketSizes(const Sweep& s) {
  std::vector<int> sizes;
  for (const Packet& p : s.packets) sizes.push_back(static_cast<int>(p.size()));
  return sizes;
}

Sweep FromPacketSizes(const PointArray& a, const std::vector<int>& sizes, SweepFrame frame) {
  const std::vector<Vec3> pts = ToPoints(a);
  Sweep s;
  s.reference = frame;
  std::size_t at = 0;
  const int N = static_cast<int>(sizes.size());
  for (int n = 0; n < N; ++n) {
    if (sizes[n] < 0 || at + sizes[n] > pts.size()) {
      throw ArgumentError("packet sizes do not match the point count");
    }
    Packet p;
    p.frame_index = n;
    p.azimuth_lo = 360.0 * n / N;
    p.azimuth_hi = 360.0 * (n + 1) / N;
    p.points.assign(pts.begin() + at, pts.begin() + at + sizes[n]);
    at += sizes[n];
    s.packets.push_back(std::move(p));
  }
  if (at != pts.size()) throw ArgumentError("packet sizes do not match the point count");
  return s;
}

py::dict SweepDict(const Sweep& s) {
  py::dict d;
  d["points"] = FromPoints(s.Flatten());
  d["packet_sizes"] = PacketSizes(s);
  return d;
}

Pose MakePose(const Vec3& t, const std::vector<double>& q, std::optional<double> stamp) {
  if (q.size() != 4) throw ArgumentError("quaternion must be (w, x, y, z)");
  return Pose(t, Quaternion(q[0], q[1], q[2], q[3]), stamp);
}

}  // namespace
}  // namespace lidartraj

PYBIND11_MODULE(_core, m) {
  using namespace lidartraj;
  m.doc() = "LiDAR motion distortion, trajectory attacks and detection metrics";

  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);

  py::class_<Pose>(m, "Pose")
      .def(py::init(&MakePose), py::arg("t"), py::arg("q") = std::vector<double>{1, 0, 0, 0},
           py::arg("stamp") = py::none())
      .def_property_readonly("t", &Pose::t)
      .def_property_readonly("q",
                             [](const Pose& p) {
                               const Quaternion& q = p.q();
                               return std::vector<double>{q.w, q.x, q.y, q.z};
                             })
      .def_property_readonly("stamp", &Pose::stamp);

  py::class_<Box3D>(m, "Box3D")
      .def(py::init<const Vec3&, const Vec3&, double>(), py::arg("center"), py::arg("size"),
           py::arg("yaw") = 0.0)
      .def_readwrite("center", &Box3D::center)
      .def_readwrite("size", &Box3D::size)
      .def_readwrite("yaw", &Box3D::yaw)
      .def("__repr__", [](const Box3D& b) {
        return "Box3D(center=(" + std::to_string(b.center.x()) + ", " +
               std::to_string(b.center.y()) + ", " + std::to_string(b.center.z()) +
               "), yaw=" + std::to_string(b.yaw) + ")";
      });

  py::class_<Detection>(m, "Detection")
      .def(py::init<>())
      .def(py::init([](const Box3D& b, double s) { return Detection{b, s}; }), py::arg("box"),
           py::arg("score"))
      .def_readwrite("box", &Detection::box)
      .def_readwrite("score", &Detection::score);

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("temperature", &DetectorConfig::temperature)
      .def_readwrite("count_threshold", &DetectorConfig::count_threshold)
      .def_readwrite("score_gain", &DetectorConfig::score_gain)
      .def_readwrite("nms_iou", &DetectorConfig::nms_iou)
      .def_readwrite("score_floor", &DetectorConfig::score_floor);

  py::class_<AttackConfig>(m, "AttackConfig")
      .def(py::init<>())
      .def_readwrite("eps_t", &AttackConfig::eps_t)
      .def_readwrite("eps_R", &AttackConfig::eps_R)
      .def_readwrite("alpha_t", &AttackConfig::alpha_t)
      .def_readwrite("alpha_R", &AttackConfig::alpha_R)
      .def_readwrite("iters", &AttackConfig::iters)
      .def_readwrite("lambda_s", &AttackConfig::lambda_s)
      .def_readwrite("lambda_d", &AttackConfig::lambda_d)
      .def_readwrite("p", &AttackConfig::p)
      .def_readwrite("seed", &AttackConfig::seed)
      .def_property(
          "mode", [](const AttackConfig& c) { return std::string(ModeName(c.mode)); },
          [](AttackConfig& c, const std::string& s) { c.mode = ParseMode(s); })
      .def_property(
          "branch", [](const AttackConfig& c) { return std::string(BranchName(c.branch)); },
          [](AttackConfig& c, const std::string& s) { c.branch = ParseBranch(s); })
      .def_property(
          "regularizer",
          [](const AttackConfig& c) { return std::string(RegularizerName(c.regularizer)); },
          [](AttackConfig& c, const std::string& s) { c.regularizer = ParseRegularizer(s); });

  py::class_<SuiteConfig>(m, "SuiteConfig")
      .def(py::init<>())
      .def_readwrite("scenes", &SuiteConfig::scenes)
      .def_readwrite("seed", &SuiteConfig::seed)
      .def_readwrite("n_vehicles", &SuiteConfig::n_vehicles)
      .def_readwrite("speed", &SuiteConfig::speed)
      .def_readwrite("duration", &SuiteConfig::duration)
      .def_readwrite("max_curvature", &SuiteConfig::max_curvature)
      .def_readwrite("steps", &SuiteConfig::N)
      .def_property(
          "beams", [](const SuiteConfig& c) { return c.sensor.beams(); },
          [](SuiteConfig& c, int beams) { c.sensor = SensorModel::Default(beams); })
      .def_property(
          "rays_per_degree", [](const SuiteConfig& c) { return c.sensor.rays_per_degree; },
          [](SuiteConfig& c, int r) { c.sensor.rays_per_degree = r; });

  py::class_<SceneCase>(m, "SceneCase")
      .def_readonly("index", &SceneCase::index)
      .def_readonly("pose_a", &SceneCase::pose_a)
      .def_readonly("pose_b", &SceneCase::pose_b)
      .def_readonly("labels", &SceneCase::labels)
      .def_readonly("label_points", &SceneCase::label_points)
      .def_property_readonly("distorted", [](const SceneCase& c) { return SweepDict(c.distorted); })
      .def_property_readonly("compensated", [](const SceneCase& c) {
        return FromPoints(Compensate(c.distorted, c.track).Flatten());
      });

  m.def("make_case", &MakeCase, py::arg("config"), py::arg("index"),
        "Raycasts scene `index` of a seeded suite.");

  m.def(
      "interpolate_track",
      [](const Pose& a, const Pose& b, int steps) {
        std::vector<std::pair<Mat3, Vec3>> out;
        for (const RigidTransform& T : InterpolateTrack(a, b, steps).transforms) {
          out.emplace_back(T.R, T.t);
        }
        return out;
      },
      py::arg("pose_a"), py::arg("pose_b"), py::arg("steps"),
      "World transforms (R, t) of the N capture frames.");

  m.def(
      "distort",
      [](const PointArray& points, const Pose& a, const Pose& b, int steps) {
        Sweep s;
        s.reference = SweepFrame::kKeyframeA;
        s.packets = PartitionPackets(ToPoints(points), steps);
        return SweepDict(Distort(s, InterpolateTrack(a, b, steps)));
      },
      py::arg("points"), py::arg("pose_a"), py::arg("pose_b"), py::arg("steps"),
      "Partitions keyframe-A points into packets and re-expresses each in its capture frame.");

  m.def(
      "compensate",
      [](const PointArray& points, const std::vector<int>& packet_sizes, const Pose& a,
         const Pose& b, std::optional<PointArray> t_tilde) {
        const Sweep s = FromPacketSizes(points, packet_sizes, SweepFrame::kCaptureFrames);
        const int N = s.packet_count();
        std::optional<Perturbation> delta;
        if (t_tilde) {
          const std::vector<Vec3> t = ToPoints(*t_tilde);
          if (static_cast<int>(t.size()) != N) throw ArgumentError("t_tilde must have N rows");
          delta = Perturbation::Zero(N, PerturbationMode::kTranslation);
          delta->t_tilde = t;
        }
        return FromPoints(
            Compensate(s, InterpolateTrack(a, b, N), delta ? &*delta : nullptr).Flatten());
      },
      py::arg("points"), py::arg("packet_sizes"), py::arg("pose_a"), py::arg("pose_b"),
      py::arg("t_tilde") = py::none(),
      "Maps a distorted sweep back to keyframe A, optionally with a translation perturbation.");

  m.def(
      "attack",
      [](const SceneCase& c, const AttackConfig& cfg, const DetectorConfig& det) {
        const AttackProblem problem(c.distorted, c.track, c.labels, cfg, det);
        const AttackResult r = RunAttack(problem);
        std::vector<Mat3> R = r.delta.R_tilde;
        py::dict d;
        d["t_tilde"] = FromPoints(r.delta.t_tilde);
        d["R_tilde"] = R;
        d["beta"] = Eigen::MatrixXd(r.delta.beta);
        d["loss_trace"] = r.loss_trace;
        d["objective_trace"] = r.objective_trace;
        d["points"] = FromPoints(Compensate(c.distorted, c.track, &r.delta).Flatten());
        return d;
      },
      py::arg("case"), py::arg("config") = AttackConfig(), py::arg("detector") = DetectorConfig(),
      "PGD trajectory attack on one scene; returns the perturbation, traces and attacked points.");

  m.def(
      "detect",
      [](const PointArray& points, const DetectorConfig& cfg) {
        return Detect(std::span<const Vec3>(ToPoints(points)), cfg);
      },
      py::arg("points"), py::arg("config") = DetectorConfig());

  m.def("iou3d", &Iou3d, py::arg("a"), py::arg("b"));
  m.def("bev_iou", &BevIou, py::arg("a"), py::arg("b"));
  m.def(
      "average_precision",
      [](const std::vector<Detection>& dets, const std::vector<Box3D>& gts, double iou) {
        return AveragePrecision(dets, gts, iou).ap;
      },
      py::arg("detections"), py::arg("labels"), py::arg("iou") = 0.7);
  m.def(
      "chamfer",
      [](const PointArray& a, const PointArray& b) { return ChamferValue(ToPoints(a), ToPoints(b)); },
      py::arg("clean"), py::arg("perturbed"));
  m.def(
      "lp_distance",
      [](const PointArray& a, const PointArray& b, double p) {
        return LpDistanceValue(ToPoints(a), ToPoints(b), p);
      },
      py::arg("clean"), py::arg("perturbed"), py::arg("p") = 2.0);
}
