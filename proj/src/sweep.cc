#include "lidartraj/sweep.h"

#include <cmath>
#include <memory>
#include <string>

#include "lidartraj/errors.h"

namespace lidartraj {

namespace {

void CheckTrackLength(const Sweep& sweep, const InterpolatedTrack& track, const char* op) {
  if (sweep.packet_count() != track.size()) {
    throw ArgumentError(std::string(op) + ": sweep has " + std::to_string(sweep.packet_count()) +
                        " packets but the track has " + std::to_string(track.size()) +
                        " transforms");
  }
}

}  // namespace

const char* ModeName(PerturbationMode mode) {
  switch (mode) {
    case PerturbationMode::kTranslation: return "translation";
    case PerturbationMode::kRotation: return "rotation";
    case PerturbationMode::kFull: return "full";
    case PerturbationMode::kPolynomial: return "polynomial";
  }
  return "?";
}

PerturbationMode ParseMode(const std::string& name) {
  if (name == "translation") return PerturbationMode::kTranslation;
  if (name == "rotation") return PerturbationMode::kRotation;
  if (name == "full") return PerturbationMode::kFull;
  if (name == "polynomial") return PerturbationMode::kPolynomial;
  throw ArgumentError("unknown perturbation mode '" + name + "'");
}

Perturbation Perturbation::Zero(int N, PerturbationMode mode) {
  Perturbation p;
  p.mode = mode;
  p.t_tilde.assign(N, Vec3::Zero());
  p.R_tilde.assign(N, Mat3::Zero());
  return p;
}

double Perturbation::MaxAbsTranslation() const {
  double m = 0.0;
  for (const Vec3& t : t_tilde) m = std::max(m, t.cwiseAbs().maxCoeff());
  return m;
}

double Perturbation::MaxAbsRotation() const {
  double m = 0.0;
  for (const Mat3& R : R_tilde) m = std::max(m, R.cwiseAbs().maxCoeff());
  return m;
}

const char* FrameName(SweepFrame frame) {
  return frame == SweepFrame::kKeyframeA ? "keyframe-A" : "capture-frames";
}

std::size_t Sweep::point_count() const {
  std::size_t m = 0;
  for (const Packet& p : packets) m += p.size();
  return m;
}

std::vector<Vec3> Sweep::Flatten() const {
  std::vector<Vec3> out;
  out.reserve(point_count());
  for (const Packet& p : packets) out.insert(out.end(), p.points.begin(), p.points.end());
  return out;
}

double AzimuthDegrees(const Vec3& p) {
  double a = std::atan2(p.y(), p.x()) * (180.0 / M_PI);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a -= 360.0;
  return a;
}

std::vector<Packet> PartitionPackets(std::span<const Vec3> points, int N, double start_azimuth,
                                     std::span<const float> intensity) {
  if (N < 1) throw ArgumentError("partition_packets needs N >= 1");
  if (!intensity.empty() && intensity.size() != points.size()) {
    throw ArgumentError("partition_packets: intensity length differs from point count");
  }
  const double sector = 360.0 / N;
  std::vector<Packet> packets(N);
  for (int n = 0; n < N; ++n) {
    packets[n].frame_index = n;
    packets[n].azimuth_lo = std::fmod(start_azimuth + n * sector, 360.0);
    packets[n].azimuth_hi = packets[n].azimuth_lo + sector;
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    double rel = std::fmod(AzimuthDegrees(points[i]) - start_azimuth, 360.0);
    if (rel < 0.0) rel += 360.0;
    int n = static_cast<int>(std::floor(rel / sector));
    if (n >= N) n = N - 1;
    packets[n].points.push_back(points[i]);
    if (!intensity.empty()) packets[n].intensity.push_back(intensity[i]);
  }
  return packets;
}

std::vector<RigidTransform> DistortionTransforms(const InterpolatedTrack& track) {
  std::vector<RigidTransform> out;
  out.reserve(track.size());
  for (int n = 0; n < track.size(); ++n) out.push_back(RelativeTransform(track[n], track[0]));
  return out;
}

std::vector<RigidTransform> CompensationTransforms(const InterpolatedTrack& track) {
  std::vector<RigidTransform> out;
  out.reserve(track.size());
  for (int n = 0; n < track.size(); ++n) out.push_back(RelativeTransform(track[0], track[n]));
  return out;
}

Sweep Distort(const Sweep& sweep_at_A, const InterpolatedTrack& track) {
  if (sweep_at_A.reference != SweepFrame::kKeyframeA) {
    throw ArgumentError("distort expects a sweep expressed in keyframe A");
  }
  CheckTrackLength(sweep_at_A, track, "distort");
  const auto transforms = DistortionTransforms(track);
  Sweep out = sweep_at_A;
  out.reference = SweepFrame::kCaptureFrames;
  for (int n = 0; n < out.packet_count(); ++n) {
    for (Vec3& p : out.packets[n].points) p = transforms[n].Apply(p);
  }
  return out;
}

Sweep Compensate(const Sweep& distorted, const InterpolatedTrack& track,
                 const Perturbation* delta) {
  if (distorted.reference != SweepFrame::kCaptureFrames) {
    throw ArgumentError("compensate expects a sweep in capture frames");
  }
  CheckTrackLength(distorted, track, "compensate");
  if (delta != nullptr && delta->size() != track.size()) {
    throw ArgumentError("compensate: perturbation length " + std::to_string(delta->size()) +
                        " differs from track length " + std::to_string(track.size()));
  }
  const auto transforms = CompensationTransforms(track);
  Sweep out = distorted;
  out.reference = SweepFrame::kKeyframeA;
  for (int n = 0; n < out.packet_count(); ++n) {
    Mat3 R = transforms[n].R;
    Vec3 t = transforms[n].t;
    if (delta != nullptr) {
      R += delta->R_tilde[n];
      t += delta->t_tilde[n];
    }
    for (Vec3& p : out.packets[n].points) p = R * p + t;
  }
  return out;
}

DiffCloud::DiffCloud(Tape* tape, std::vector<Vec3> values, NodeFactory factory)
    : tape_(tape),
      values_(std::move(values)),
      factory_(std::move(factory)),
      nodes_(values_.size()),
      made_(values_.size(), 0) {}

const std::array<Var, 3>& DiffCloud::node(std::size_t i) {
  if (!made_[i]) {
    nodes_[i] = factory_(i, values_[i]);
    made_[i] = 1;
  }
  return nodes_[i];
}

DiffCloud SweepAsFunction(const Sweep& distorted, const InterpolatedTrack& track,
                          const PerturbationVars& delta, Tape& tape) {
  if (distorted.reference != SweepFrame::kCaptureFrames) {
    throw ArgumentError("sweep_as_function expects a sweep in capture frames");
  }
  CheckTrackLength(distorted, track, "sweep_as_function");
  const int N = track.size();
  if (static_cast<int>(delta.t.size()) != N || static_cast<int>(delta.R.size()) != N) {
    throw ArgumentError("sweep_as_function: perturbation handles do not match the track length");
  }
  const auto transforms = CompensationTransforms(track);

  struct Shared {
    std::vector<Vec3> raw;       // capture-frame coordinates
    std::vector<int> packet_of;  // flat index -> packet
    PerturbationVars delta;
    Tape* tape;
  };
  auto shared = std::make_shared<Shared>();
  shared->raw = distorted.Flatten();
  shared->packet_of.reserve(shared->raw.size());
  for (int n = 0; n < N; ++n) {
    shared->packet_of.insert(shared->packet_of.end(), distorted.packets[n].size(), n);
  }
  shared->delta = delta;
  shared->tape = &tape;

  auto value_of = [](const Var& v) { return v.valid() ? v.value() : 0.0; };
  std::vector<Vec3> values(shared->raw.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int n = shared->packet_of[i];
    Mat3 R = transforms[n].R;
    Vec3 t = transforms[n].t;
    for (int r = 0; r < 3; ++r) {
      t[r] += value_of(delta.t[n][r]);
      for (int c = 0; c < 3; ++c) R(r, c) += value_of(delta.R[n][3 * r + c]);
    }
    values[i] = R * shared->raw[i] + t;
  }

  auto factory = [shared](std::size_t i, const Vec3& value) {
    const int n = shared->packet_of[i];
    const Vec3& p = shared->raw[i];
    std::array<Var, 3> out;
    for (int r = 0; r < 3; ++r) {
      std::array<Var, 4> in;
      std::array<double, 4> d;
      std::size_t k = 0;
      for (int c = 0; c < 3; ++c) {
        if (shared->delta.R[n][3 * r + c].valid()) {
          in[k] = shared->delta.R[n][3 * r + c];
          d[k++] = p[c];
        }
      }
      if (shared->delta.t[n][r].valid()) {
        in[k] = shared->delta.t[n][r];
        d[k++] = 1.0;
      }
      out[r] = shared->tape->Record(Op::kAffine, std::span<const Var>(in.data(), k),
                                    std::span<const double>(d.data(), k), value[r]);
    }
    return out;
  };
  return DiffCloud(&tape, std::move(values), std::move(factory));
}

}  // namespace lidartraj
