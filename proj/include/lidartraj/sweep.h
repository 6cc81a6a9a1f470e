#ifndef LIDARTRAJ_SWEEP_H_
#define LIDARTRAJ_SWEEP_H_

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "lidartraj/autodiff.h"
#include "lidartraj/geometry.h"
#include "lidartraj/perturbation.h"

namespace lidartraj {

enum class SweepFrame { kKeyframeA, kCaptureFrames };

const char* FrameName(SweepFrame frame);

// Points of one azimuth sector. Intensity is either empty or parallel to
// points and is never modified by the transforms.
struct Packet {
  std::vector<Vec3> points;
  std::vector<float> intensity;
  int frame_index = 0;
  double azimuth_lo = 0.0;  // degrees, [lo, hi)
  double azimuth_hi = 0.0;

  std::size_t size() const { return points.size(); }
};

struct Sweep {
  std::vector<Packet> packets;
  SweepFrame reference = SweepFrame::kKeyframeA;

  std::size_t point_count() const;
  int packet_count() const { return static_cast<int>(packets.size()); }
  // Points in packet order (the concatenation of the packets).
  std::vector<Vec3> Flatten() const;
};

// Counter-clockwise from +x, in [0, 360).
double AzimuthDegrees(const Vec3& p);

// Packet n receives the points whose azimuth lies in
// [start + n * 360 / N, start + (n + 1) * 360 / N) modulo 360. Points keep
// their input order within a packet.
std::vector<Packet> PartitionPackets(std::span<const Vec3> points, int N,
                                     double start_azimuth = 0.0,
                                     std::span<const float> intensity = {});

// T^n_A = (T^W_n)^{-1} T^W_A, with T^W_A = track[0].
std::vector<RigidTransform> DistortionTransforms(const InterpolatedTrack& track);
// T^A_n, the inverse of T^n_A.
std::vector<RigidTransform> CompensationTransforms(const InterpolatedTrack& track);

// Re-expresses packet n in capture frame n. Input must be in keyframe A.
Sweep Distort(const Sweep& sweep_at_A, const InterpolatedTrack& track);

// Maps packet n back to keyframe A with T^A_n, plus delta(n) added entrywise
// when a perturbation is given.
Sweep Compensate(const Sweep& distorted, const InterpolatedTrack& track,
                 const Perturbation* delta = nullptr);

// A point cloud whose coordinates are (lazily) nodes on a tape. Values are
// always available; node(i) records the point on first use.
class DiffCloud {
 public:
  using NodeFactory = std::function<std::array<Var, 3>(std::size_t, const Vec3&)>;

  DiffCloud(Tape* tape, std::vector<Vec3> values, NodeFactory factory);

  std::size_t size() const { return values_.size(); }
  const Vec3& value(std::size_t i) const { return values_[i]; }
  const std::vector<Vec3>& values() const { return values_; }
  const std::array<Var, 3>& node(std::size_t i);
  Tape& tape() const { return *tape_; }

 private:
  Tape* tape_;
  std::vector<Vec3> values_;
  NodeFactory factory_;
  std::vector<std::array<Var, 3>> nodes_;
  std::vector<char> made_;
};

// Tape handles for the perturbation entries. Any handle may be empty, meaning
// that entry is held at zero and not differentiated.
struct PerturbationVars {
  std::vector<std::array<Var, 3>> t;  // t_tilde(n)
  std::vector<std::array<Var, 9>> R;  // R_tilde(n), row-major
};

// Compensation as a function of the trajectory: same values as Compensate with
// delta set to the Var values, but every coordinate is differentiable with
// respect to those Vars. Point order is the packet concatenation order.
DiffCloud SweepAsFunction(const Sweep& distorted, const InterpolatedTrack& track,
                          const PerturbationVars& delta, Tape& tape);

}  // namespace lidartraj

#endif  // LIDARTRAJ_SWEEP_H_
