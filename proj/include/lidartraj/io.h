#ifndef LIDARTRAJ_IO_H_
#define LIDARTRAJ_IO_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lidartraj/attack.h"
#include "lidartraj/box.h"
#include "lidartraj/geometry.h"
#include "lidartraj/metrics.h"
#include "lidartraj/perturbation.h"
#include "lidartraj/sweep.h"

namespace lidartraj {

// Pose text: one "stamp tx ty tz qw qx qy qz" per line, '#' starts a comment.
// Stamps must be strictly increasing and quaternions unit within 1e-6.
// Errors name the source and the 1-based line number.
std::vector<Pose> ParsePoses(std::istream& in, const std::string& source = "<stream>");
std::vector<Pose> ReadPoses(const std::string& path);
// 17 significant digits per field.
void WritePoses(std::ostream& out, const std::vector<Pose>& poses);
void WritePoses(const std::string& path, const std::vector<Pose>& poses);

// Point binary: little-endian float32 records (x, y, z, intensity). The
// sidecar (path + ".packets") holds a "# frame <name>" line and one packet
// count per line.
std::string SidecarPath(const std::string& points_path);
void WritePoints(const std::string& path, const Sweep& sweep);
// Without a sidecar the points are partitioned by azimuth into
// `fallback_packets` packets (kKeyframeA frame). Throws FormatError naming
// expected and actual byte counts on a size mismatch.
Sweep ReadPoints(const std::string& path, int fallback_packets = 0);

// Boxes: "cx cy cz l w h yaw" per line, optionally followed by a point count.
struct LabelSet {
  std::vector<Box3D> boxes;
  std::vector<int> points;  // empty when the file carries no counts
};
void WriteLabels(const std::string& path, const LabelSet& labels);
LabelSet ReadLabels(const std::string& path);
// Detections: "score cx cy cz l w h yaw" per line.
void WriteDetections(const std::string& path, const std::vector<Detection>& dets);
std::vector<Detection> ReadDetections(const std::string& path);

// Perturbation text: "mode <name>", four "beta" rows, then one line of 12
// numbers per packet (t0 t1 t2 R00 .. R22).
void WritePerturbation(std::ostream& out, const Perturbation& delta);
void WritePerturbation(const std::string& path, const Perturbation& delta);
Perturbation ParsePerturbation(std::istream& in, const std::string& source = "<stream>");
Perturbation ReadPerturbation(const std::string& path);

// iteration,detector_loss,objective
void WriteLossTrace(const std::string& path, const AttackResult& result);

std::string ReportCsv(const EvalReport& report);
std::string ReportJson(const EvalReport& report);
void WriteText(const std::string& path, const std::string& text);
std::string ReadText(const std::string& path);

// "%.17g".
std::string FormatDouble(double v);

}  // namespace lidartraj

#endif  // LIDARTRAJ_IO_H_
