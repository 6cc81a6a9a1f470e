#include "lidartraj/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <functional>
#include <set>
#include <sstream>

#include "lidartraj/errors.h"
#include "lidartraj/io.h"

namespace lidartraj {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double ToDouble(const std::string& s) {
  const std::string t = Trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ArgumentError("'" + t + "' is not a number");
  }
  return v;
}

long long ToInt(const std::string& s) {
  const std::string t = Trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ArgumentError("'" + t + "' is not an integer");
  }
  return v;
}

std::uint64_t ToUnsigned(const std::string& s) {
  const std::string t = Trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ArgumentError("'" + t + "' is not a non-negative integer");
  }
  return v;
}

bool ToBool(const std::string& s) {
  const std::string t = Trim(s);
  if (t == "true") return true;
  if (t == "false") return false;
  throw ArgumentError("'" + t + "' is not true or false");
}

std::string JoinDoubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += FormatDouble(v[i]);
  }
  return out;
}

std::vector<std::string> SplitComma(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(Trim(item));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

std::string CountBinName(int lo, int hi) {
  return hi < 0 ? "pts>=" + std::to_string(lo)
                : "pts" + std::to_string(lo) + "-" + std::to_string(hi);
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class Access>
Field DoubleField(std::string sec, std::string key, Access access) {
  return {std::move(sec), std::move(key),
          [access](const RunConfig& c) {
            return FormatDouble(access(c));
          },
          [access](RunConfig& c, const std::string& v) { access(c) = ToDouble(v); }};
}

template <class Access>
Field IntField(std::string sec, std::string key, Access access) {
  return {std::move(sec), std::move(key),
          [access](const RunConfig& c) {
            return std::to_string(access(c));
          },
          [access](RunConfig& c, const std::string& v) {
            const long long x = ToInt(v);
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
              throw ArgumentError("'" + Trim(v) + "' is out of range");
            }
            access(c) = static_cast<int>(x);
          }};
}

template <class Access>
Field BoolField(std::string sec, std::string key, Access access) {
  return {std::move(sec), std::move(key),
          [access](const RunConfig& c) {
            return std::string(access(c) ? "true" : "false");
          },
          [access](RunConfig& c, const std::string& v) { access(c) = ToBool(v); }};
}

template <class Access>
Field ListField(std::string sec, std::string key, Access access) {
  return {std::move(sec), std::move(key),
          [access](const RunConfig& c) { return JoinDoubles(access(c)); },
          [access](RunConfig& c, const std::string& v) { access(c) = ParseNumberList(v); }};
}

template <class Access>
Field Vec3Field(std::string sec, std::string key, Access access) {
  return {std::move(sec), std::move(key),
          [access](const RunConfig& c) {
            const Vec3& x = access(c);
            return JoinDoubles({x.x(), x.y(), x.z()});
          },
          [access](RunConfig& c, const std::string& v) {
            const auto xs = ParseNumberList(v);
            if (xs.size() != 3) throw ArgumentError("expected 3 comma-separated numbers");
            access(c) = Vec3(xs[0], xs[1], xs[2]);
          }};
}

#define LT_FIELD(kind, sec, key, expr) \
  kind##Field(sec, key, [](auto& c) -> auto& { return c.expr; })

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      LT_FIELD(Int, "suite", "scenes", suite.scenes),
      {"suite", "seed", [](const RunConfig& c) { return std::to_string(c.suite.seed); },
       [](RunConfig& c, const std::string& v) { c.suite.seed = ToUnsigned(v); }},
      LT_FIELD(Int, "suite", "vehicles", suite.n_vehicles),
      LT_FIELD(Double, "suite", "speed", suite.speed),
      LT_FIELD(Double, "suite", "duration", suite.duration),
      LT_FIELD(Double, "suite", "max_curvature", suite.max_curvature),
      LT_FIELD(Int, "suite", "steps", suite.N),

      LT_FIELD(Double, "scene", "extent", suite.scene.extent),
      LT_FIELD(Double, "scene", "ground_z", suite.scene.ground_z),
      LT_FIELD(Bool, "scene", "has_ground", suite.scene.has_ground),
      LT_FIELD(Double, "scene", "min_range", suite.scene.min_range),
      LT_FIELD(Double, "scene", "max_range", suite.scene.max_range),
      LT_FIELD(Double, "scene", "corridor_x_lo", suite.scene.corridor_x_lo),
      LT_FIELD(Double, "scene", "corridor_x_hi", suite.scene.corridor_x_hi),
      LT_FIELD(Double, "scene", "corridor_half_width", suite.scene.corridor_half_width),
      LT_FIELD(Double, "scene", "min_gap", suite.scene.min_gap),
      LT_FIELD(Vec3, "scene", "mean_size", suite.scene.mean_size),
      LT_FIELD(Vec3, "scene", "size_jitter", suite.scene.size_jitter),
      LT_FIELD(Int, "scene", "max_tries", suite.scene.max_tries),

      LT_FIELD(List, "sensor", "elevations_deg", suite.sensor.elevations_deg),
      LT_FIELD(Double, "sensor", "max_range", suite.sensor.max_range),
      LT_FIELD(Double, "sensor", "rotation_rate", suite.sensor.rotation_rate),
      LT_FIELD(Int, "sensor", "rays_per_degree", suite.sensor.rays_per_degree),
      LT_FIELD(Bool, "sensor", "ground_returns", suite.sensor.ground_returns),

      LT_FIELD(Double, "attack", "eps_t", attack.eps_t),
      LT_FIELD(Double, "attack", "eps_r", attack.eps_R),
      LT_FIELD(Double, "attack", "alpha_t", attack.alpha_t),
      LT_FIELD(Double, "attack", "alpha_r", attack.alpha_R),
      LT_FIELD(Int, "attack", "iters", attack.iters),
      {"attack", "branch", [](const RunConfig& c) { return std::string(BranchName(c.attack.branch)); },
       [](RunConfig& c, const std::string& v) { c.attack.branch = ParseBranch(Trim(v)); }},
      {"attack", "mode", [](const RunConfig& c) { return std::string(ModeName(c.attack.mode)); },
       [](RunConfig& c, const std::string& v) { c.attack.mode = ParseMode(Trim(v)); }},
      {"attack", "regularizer",
       [](const RunConfig& c) { return std::string(RegularizerName(c.attack.regularizer)); },
       [](RunConfig& c, const std::string& v) { c.attack.regularizer = ParseRegularizer(Trim(v)); }},
      LT_FIELD(Double, "attack", "lambda_s", attack.lambda_s),
      LT_FIELD(Double, "attack", "lambda_d", attack.lambda_d),
      LT_FIELD(Double, "attack", "lambda_t", attack.lambda_t),
      LT_FIELD(Double, "attack", "lambda_r", attack.lambda_R),
      LT_FIELD(Double, "attack", "p", attack.p),
      {"attack", "seed", [](const RunConfig& c) { return std::to_string(c.attack.seed); },
       [](RunConfig& c, const std::string& v) { c.attack.seed = ToUnsigned(v); }},

      LT_FIELD(Double, "detector", "temperature", detector.temperature),
      LT_FIELD(Double, "detector", "count_threshold", detector.count_threshold),
      LT_FIELD(Double, "detector", "score_gain", detector.score_gain),
      LT_FIELD(Double, "detector", "proposal_spacing", detector.proposal_spacing),
      LT_FIELD(List, "detector", "proposal_yaws", detector.proposal_yaws),
      LT_FIELD(Double, "detector", "nms_iou", detector.nms_iou),
      LT_FIELD(Double, "detector", "score_floor", detector.score_floor),
      LT_FIELD(Vec3, "detector", "size_prior", detector.size_prior),
      LT_FIELD(Double, "detector", "ground_z", detector.ground_z),
      LT_FIELD(Double, "detector", "ground_clearance", detector.ground_clearance),
      LT_FIELD(Double, "detector", "support_margin", detector.support_margin),
      LT_FIELD(Double, "detector", "regression_inflation", detector.regression_inflation),
      LT_FIELD(Double, "detector", "proposal_range", detector.proposal_range),
      LT_FIELD(Double, "detector", "seed_floor", detector.seed_floor),
      LT_FIELD(Double, "detector", "cluster_link", detector.cluster_link),
      LT_FIELD(Double, "detector", "fit_margin", detector.fit_margin),
      LT_FIELD(Double, "detector", "fit_trim", detector.fit_trim),

      LT_FIELD(Double, "eval", "iou", eval.iou),
      LT_FIELD(List, "eval", "depth_edges", eval.depth_edges),
      LT_FIELD(List, "eval", "center_thresholds", eval.center_thresholds),
      {"eval", "count_bins",
       [](const RunConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.eval.count_bins.size(); ++i) {
           if (i) out += ", ";
           out += std::to_string(c.eval.count_bins[i].min_points) + ":" +
                  std::to_string(c.eval.count_bins[i].max_points);
         }
         return out;
       },
       [](RunConfig& c, const std::string& v) {
         std::vector<CountBin> bins;
         for (const std::string& item : SplitComma(v)) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) throw ArgumentError("count bin must be min:max");
           const int lo = static_cast<int>(ToInt(item.substr(0, colon)));
           const int hi = static_cast<int>(ToInt(item.substr(colon + 1)));
           bins.push_back({CountBinName(lo, hi), lo, hi});
         }
         c.eval.count_bins = std::move(bins);
       }},
      LT_FIELD(Int, "eval", "min_label_points", eval.min_label_points),

      {"output", "dir", [](const RunConfig& c) { return c.output_dir; },
       [](RunConfig& c, const std::string& v) { c.output_dir = Trim(v); }},
      LT_FIELD(Int, "output", "threads", threads),
  };
  return fields;
}

#undef LT_FIELD

const Field* FindField(const std::string& section, const std::string& key) {
  for (const Field& f : Fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

std::vector<double> ParseNumberList(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : SplitComma(text)) out.push_back(ToDouble(item));
  return out;
}

void RunConfig::Validate() const {
  if (suite.scenes < 1) throw ArgumentError("suite.scenes must be >= 1");
  if (suite.n_vehicles < 0) throw ArgumentError("suite.vehicles must be >= 0");
  if (suite.N < 2) throw ArgumentError("suite.steps must be >= 2");
  if (!(suite.duration > 0.0)) throw ArgumentError("suite.duration must be positive");
  if (threads < 1) throw ArgumentError("output.threads must be >= 1");
  suite.sensor.Validate();
  attack.Validate();
  detector.Validate();
  eval.Validate();
}

RunConfig ParseRunConfig(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const std::string body = Trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw FormatError(where + "malformed section header");
      section = Trim(body.substr(1, body.size() - 2));
      bool known = false;
      for (const Field& f : Fields()) known = known || f.section == section;
      if (!known) throw FormatError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw FormatError(where + "expected key = value");
    const std::string key = Trim(body.substr(0, eq));
    if (section.empty()) throw FormatError(where + "key '" + key + "' outside any section");
    const Field* f = FindField(section, key);
    if (!f) throw FormatError(where + "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(section + "." + key).second) {
      throw FormatError(where + "duplicate key '" + key + "' in [" + section + "]");
    }
    try {
      f->set(cfg, body.substr(eq + 1));
    } catch (const ArgumentError& e) {
      throw FormatError(where + section + "." + key + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig ReadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return ParseRunConfig(in, path);
}

std::string EmitRunConfig(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : Fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(cfg) << '\n';
  }
  return out.str();
}

void SetConfigValue(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ArgumentError("override key must be section.key");
  const Field* f = FindField(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  if (!f) throw ArgumentError("unknown config key '" + dotted_key + "'");
  f->set(cfg, value);
}

}  // namespace lidartraj
