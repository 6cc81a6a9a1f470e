#include "lidartraj/io.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lidartraj/errors.h"

namespace lidartraj {
namespace {

std::string Where(const std::string& source, int line) {
  return source + ":" + std::to_string(line) + ": ";
}

// Whitespace-separated fields of a line with any '#' comment removed.
std::vector<std::string> Fields(const std::string& line) {
  const std::string body = line.substr(0, line.find('#'));
  std::istringstream ss(body);
  std::vector<std::string> out;
  for (std::string f; ss >> f;) out.push_back(f);
  return out;
}

std::optional<double> ToDouble(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> ToInt(const std::string& s) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::vector<double> Numbers(const std::vector<std::string>& fields, const std::string& where) {
  std::vector<double> out;
  for (const std::string& f : fields) {
    const auto v = ToDouble(f);
    if (!v) throw FormatError(where + "'" + f + "' is not a finite number");
    out.push_back(*v);
  }
  return out;
}

std::ifstream OpenIn(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream OpenOut(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  return out;
}

void CheckWritten(std::ostream& out, const std::string& path) {
  out.flush();
  if (!out) throw FormatError("failed writing '" + path + "'");
}

std::uint32_t ToLittle(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

void PutFloat(std::string& buf, float f) {
  const std::uint32_t v = ToLittle(std::bit_cast<std::uint32_t>(f));
  char bytes[4];
  std::memcpy(bytes, &v, 4);
  buf.append(bytes, 4);
}

float GetFloat(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return std::bit_cast<float>(ToLittle(v));
}

std::string BoxFields(const Box3D& b) {
  std::string s;
  for (double v : {b.center.x(), b.center.y(), b.center.z(), b.size.x(), b.size.y(), b.size.z(),
                   b.yaw}) {
    if (!s.empty()) s += ' ';
    s += FormatDouble(v);
  }
  return s;
}

Box3D BoxFrom(const double* v, const std::string& where) {
  try {
    return Box3D(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]), v[6]);
  } catch (const ArgumentError& e) {
    throw FormatError(where + e.what());
  }
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<Pose> ParsePoses(std::istream& in, const std::string& source) {
  std::vector<Pose> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = Fields(line);
    if (fields.empty()) continue;
    const std::string where = Where(source, lineno);
    if (fields.size() != 8) {
      throw FormatError(where + "expected 8 fields, got " + std::to_string(fields.size()));
    }
    const auto v = Numbers(fields, where);
    if (!out.empty() && !(v[0] > *out.back().stamp())) {
      throw FormatError(where + "stamps must be strictly increasing");
    }
    const double norm = std::sqrt(v[4] * v[4] + v[5] * v[5] + v[6] * v[6] + v[7] * v[7]);
    if (std::abs(norm - 1.0) > 1e-6) {
      throw FormatError(where + "quaternion norm " + FormatDouble(norm) + " is not unit");
    }
    Quaternion q;
    if (std::abs(norm - 1.0) > 1e-12) {
      q = Quaternion(v[4], v[5], v[6], v[7]);
    } else {
      // Already unit to rounding: keep the digits so that text round-trips.
      const double s = v[4] < 0.0 ? -1.0 : 1.0;
      q.w = s * v[4];
      q.x = s * v[5];
      q.y = s * v[6];
      q.z = s * v[7];
    }
    out.emplace_back(Vec3(v[1], v[2], v[3]), q, v[0]);
  }
  return out;
}

std::vector<Pose> ReadPoses(const std::string& path) {
  std::ifstream in = OpenIn(path);
  return ParsePoses(in, path);
}

void WritePoses(std::ostream& out, const std::vector<Pose>& poses) {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Pose& p = poses[i];
    if (!p.stamp()) throw ArgumentError("pose " + std::to_string(i) + " has no stamp");
    out << FormatDouble(*p.stamp());
    for (double v : {p.t().x(), p.t().y(), p.t().z(), p.q().w, p.q().x, p.q().y, p.q().z}) {
      out << ' ' << FormatDouble(v);
    }
    out << '\n';
  }
}

void WritePoses(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream out = OpenOut(path);
  WritePoses(out, poses);
  CheckWritten(out, path);
}

std::string SidecarPath(const std::string& points_path) { return points_path + ".packets"; }

void WritePoints(const std::string& path, const Sweep& sweep) {
  std::string buf;
  buf.reserve(sweep.point_count() * 16);
  for (const Packet& p : sweep.packets) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (int k = 0; k < 3; ++k) PutFloat(buf, static_cast<float>(p.points[i][k]));
      PutFloat(buf, p.intensity.empty() ? 0.0f : p.intensity[i]);
    }
  }
  std::ofstream out = OpenOut(path, std::ios::out | std::ios::binary);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  CheckWritten(out, path);
  const std::string side = SidecarPath(path);
  std::ofstream sc = OpenOut(side);
  sc << "# frame " << FrameName(sweep.reference) << '\n';
  for (const Packet& p : sweep.packets) sc << p.size() << '\n';
  CheckWritten(sc, side);
}

Sweep ReadPoints(const std::string& path, int fallback_packets) {
  std::ifstream in = OpenIn(path, std::ios::in | std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t kRecord = 16;
  if (data.size() % kRecord != 0) {
    throw FormatError("'" + path + "': " + std::to_string(data.size()) +
                      " bytes is not a multiple of the " + std::to_string(kRecord) +
                      "-byte record size (expected " +
                      std::to_string(data.size() / kRecord * kRecord) + " or " +
                      std::to_string((data.size() / kRecord + 1) * kRecord) + " bytes)");
  }
  const std::size_t m = data.size() / kRecord;
  std::vector<Vec3> points(m);
  std::vector<float> intensity(m);
  for (std::size_t i = 0; i < m; ++i) {
    const char* r = data.data() + i * kRecord;
    points[i] = Vec3(GetFloat(r), GetFloat(r + 4), GetFloat(r + 8));
    intensity[i] = GetFloat(r + 12);
  }

  Sweep sweep;
  std::ifstream sc(SidecarPath(path));
  if (!sc) {
    if (fallback_packets < 1) {
      throw FormatError("'" + path + "': no packet sidecar and no packet count given");
    }
    sweep.reference = SweepFrame::kKeyframeA;
    sweep.packets = PartitionPackets(points, fallback_packets, 0.0, intensity);
    return sweep;
  }
  const std::string side = SidecarPath(path);
  std::vector<std::size_t> counts;
  std::string line;
  int lineno = 0;
  bool have_frame = false;
  while (std::getline(sc, line)) {
    ++lineno;
    const std::string where = Where(side, lineno);
    if (line.rfind("# frame ", 0) == 0) {
      const std::string name = line.substr(8);
      if (name == FrameName(SweepFrame::kKeyframeA)) {
        sweep.reference = SweepFrame::kKeyframeA;
      } else if (name == FrameName(SweepFrame::kCaptureFrames)) {
        sweep.reference = SweepFrame::kCaptureFrames;
      } else {
        throw FormatError(where + "unknown frame '" + name + "'");
      }
      have_frame = true;
      continue;
    }
    const auto fields = Fields(line);
    if (fields.empty()) continue;
    const auto c = fields.size() == 1 ? ToInt(fields[0]) : std::nullopt;
    if (!c || *c < 0) throw FormatError(where + "expected one non-negative packet count");
    counts.push_back(static_cast<std::size_t>(*c));
  }
  if (!have_frame) throw FormatError("'" + side + "': missing '# frame' line");
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  if (total != m) {
    throw FormatError("'" + path + "': sidecar lists " + std::to_string(total) +
                      " points, expected " + std::to_string(total * kRecord) + " bytes but found " +
                      std::to_string(data.size()));
  }
  const int N = static_cast<int>(counts.size());
  std::size_t at = 0;
  for (int n = 0; n < N; ++n) {
    Packet p;
    p.frame_index = n;
    p.azimuth_lo = 360.0 * n / N;
    p.azimuth_hi = 360.0 * (n + 1) / N;
    p.points.assign(points.begin() + at, points.begin() + at + counts[n]);
    p.intensity.assign(intensity.begin() + at, intensity.begin() + at + counts[n]);
    at += counts[n];
    sweep.packets.push_back(std::move(p));
  }
  return sweep;
}

void WriteLabels(const std::string& path, const LabelSet& labels) {
  if (!labels.points.empty() && labels.points.size() != labels.boxes.size()) {
    throw ArgumentError("label point counts do not match the boxes");
  }
  std::ofstream out = OpenOut(path);
  out << "# cx cy cz l w h yaw" << (labels.points.empty() ? "" : " points") << '\n';
  for (std::size_t i = 0; i < labels.boxes.size(); ++i) {
    out << BoxFields(labels.boxes[i]);
    if (!labels.points.empty()) out << ' ' << labels.points[i];
    out << '\n';
  }
  CheckWritten(out, path);
}

LabelSet ReadLabels(const std::string& path) {
  std::ifstream in = OpenIn(path);
  LabelSet out;
  std::string line;
  int lineno = 0;
  std::optional<bool> with_points;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = Fields(line);
    if (fields.empty()) continue;
    const std::string where = Where(path, lineno);
    if (fields.size() != 7 && fields.size() != 8) {
      throw FormatError(where + "expected 7 or 8 fields, got " + std::to_string(fields.size()));
    }
    const bool has = fields.size() == 8;
    if (with_points && *with_points != has) {
      throw FormatError(where + "point counts must be given on every line or none");
    }
    with_points = has;
    const auto v = Numbers({fields.begin(), fields.begin() + 7}, where);
    out.boxes.push_back(BoxFrom(v.data(), where));
    if (has) {
      const auto c = ToInt(fields[7]);
      if (!c || *c < 0) throw FormatError(where + "point count must be a non-negative integer");
      out.points.push_back(static_cast<int>(*c));
    }
  }
  return out;
}

void WriteDetections(const std::string& path, const std::vector<Detection>& dets) {
  std::ofstream out = OpenOut(path);
  out << "# score cx cy cz l w h yaw\n";
  for (const Detection& d : dets) out << FormatDouble(d.score) << ' ' << BoxFields(d.box) << '\n';
  CheckWritten(out, path);
}

std::vector<Detection> ReadDetections(const std::string& path) {
  std::ifstream in = OpenIn(path);
  std::vector<Detection> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = Fields(line);
    if (fields.empty()) continue;
    const std::string where = Where(path, lineno);
    if (fields.size() != 8) {
      throw FormatError(where + "expected 8 fields, got " + std::to_string(fields.size()));
    }
    const auto v = Numbers(fields, where);
    out.push_back({BoxFrom(v.data() + 1, where), v[0]});
  }
  return out;
}

void WritePerturbation(std::ostream& out, const Perturbation& delta) {
  out << "mode " << ModeName(delta.mode) << '\n';
  for (int r = 0; r < 4; ++r) {
    out << "beta";
    for (int c = 0; c < 3; ++c) out << ' ' << FormatDouble(delta.beta(r, c));
    out << '\n';
  }
  for (int n = 0; n < delta.size(); ++n) {
    const Vec3& t = delta.t_tilde[n];
    const Mat3& R = delta.R_tilde[n];
    out << FormatDouble(t.x()) << ' ' << FormatDouble(t.y()) << ' ' << FormatDouble(t.z());
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) out << ' ' << FormatDouble(R(i, j));
    }
    out << '\n';
  }
}

void WritePerturbation(const std::string& path, const Perturbation& delta) {
  std::ofstream out = OpenOut(path);
  WritePerturbation(out, delta);
  CheckWritten(out, path);
}

Perturbation ParsePerturbation(std::istream& in, const std::string& source) {
  Perturbation delta;
  delta.t_tilde.clear();
  delta.R_tilde.clear();
  bool have_mode = false;
  int beta_rows = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = Fields(line);
    if (fields.empty()) continue;
    const std::string where = Where(source, lineno);
    if (fields[0] == "mode") {
      if (fields.size() != 2 || have_mode) throw FormatError(where + "bad mode line");
      try {
        delta.mode = ParseMode(fields[1]);
      } catch (const ArgumentError& e) {
        throw FormatError(where + e.what());
      }
      have_mode = true;
    } else if (fields[0] == "beta") {
      if (fields.size() != 4 || beta_rows >= 4) throw FormatError(where + "bad beta row");
      const auto v = Numbers({fields.begin() + 1, fields.end()}, where);
      for (int c = 0; c < 3; ++c) delta.beta(beta_rows, c) = v[c];
      ++beta_rows;
    } else {
      if (fields.size() != 12) {
        throw FormatError(where + "expected 12 fields, got " + std::to_string(fields.size()));
      }
      const auto v = Numbers(fields, where);
      delta.t_tilde.emplace_back(v[0], v[1], v[2]);
      Mat3 R;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) R(i, j) = v[3 + 3 * i + j];
      }
      delta.R_tilde.push_back(R);
    }
  }
  if (!have_mode) throw FormatError(source + ": missing mode line");
  if (beta_rows != 4) throw FormatError(source + ": expected 4 beta rows");
  return delta;
}

Perturbation ReadPerturbation(const std::string& path) {
  std::ifstream in = OpenIn(path);
  return ParsePerturbation(in, path);
}

void WriteLossTrace(const std::string& path, const AttackResult& result) {
  std::ofstream out = OpenOut(path);
  out << "iteration,detector_loss,objective\n";
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    out << i << ',' << FormatDouble(result.loss_trace[i]) << ','
        << FormatDouble(i < result.objective_trace.size() ? result.objective_trace[i]
                                                          : result.loss_trace[i])
        << '\n';
  }
  CheckWritten(out, path);
}

std::string ReportCsv(const EvalReport& report) {
  std::ostringstream out;
  out << "section,key,value\n";
  for (const auto& [bin, ap] : report.ap_by_bin) {
    out << "ap," << bin << ',' << FormatDouble(ap) << '\n';
  }
  for (const auto& [bin, u] : report.undefined) {
    out << "undefined," << bin << ',' << (u ? 1 : 0) << '\n';
  }
  for (const auto& [t, ap] : report.ap_center) {
    out << "ap_center," << FormatDouble(t) << ',' << FormatDouble(ap) << '\n';
  }
  out << "ap_center_mean,," << FormatDouble(report.ap_center_mean) << '\n';
  for (const auto& [bin, d] : report.drop) {
    out << "drop_absolute," << bin << ',' << FormatDouble(d.absolute) << '\n';
    out << "drop_relative," << bin << ','
        << (d.relative_defined ? FormatDouble(d.relative) : std::string("nan")) << '\n';
  }
  for (const auto& [k, v] : report.regularizer_stats) {
    out << "regularizer," << k << ',' << FormatDouble(v) << '\n';
  }
  return out.str();
}

std::string ReportJson(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["ap_by_bin"] = nlohmann::ordered_json::object();
  for (const auto& [bin, ap] : report.ap_by_bin) j["ap_by_bin"][bin] = ap;
  j["undefined"] = nlohmann::ordered_json::object();
  for (const auto& [bin, u] : report.undefined) j["undefined"][bin] = u;
  j["ap_center"] = nlohmann::ordered_json::object();
  for (const auto& [t, ap] : report.ap_center) j["ap_center"][FormatDouble(t)] = ap;
  j["ap_center_mean"] = report.ap_center_mean;
  j["drop"] = nlohmann::ordered_json::object();
  for (const auto& [bin, d] : report.drop) {
    nlohmann::ordered_json e;
    e["absolute"] = d.absolute;
    e["relative"] = d.relative_defined ? nlohmann::ordered_json(d.relative) : nullptr;
    j["drop"][bin] = e;
  }
  j["regularizer_stats"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.regularizer_stats) j["regularizer_stats"][k] = v;
  return j.dump(2) + "\n";
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out = OpenOut(path, std::ios::out | std::ios::binary);
  out << text;
  CheckWritten(out, path);
}

std::string ReadText(const std::string& path) {
  std::ifstream in = OpenIn(path, std::ios::in | std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace lidartraj
