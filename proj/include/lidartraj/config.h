#ifndef LIDARTRAJ_CONFIG_H_
#define LIDARTRAJ_CONFIG_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "lidartraj/attack.h"
#include "lidartraj/detector.h"
#include "lidartraj/pipeline.h"

namespace lidartraj {

// Everything a CLI run depends on. Text form is INI-like:
//
//   [attack]
//   eps_t = 0.1   # comment
//
// Sections: suite, scene, sensor, attack, detector, eval, output. Unknown
// sections or keys are rejected. Lists are comma separated.
struct RunConfig {
  SuiteConfig suite;
  AttackConfig attack;
  DetectorConfig detector;
  EvalConfig eval;
  std::string output_dir = "out";
  int threads = 1;

  void Validate() const;
};

// Throws FormatError naming the line on malformed input, unknown keys or
// unparsable values. Keys not given keep their defaults.
RunConfig ParseRunConfig(std::istream& in, const std::string& source = "<stream>");
RunConfig ReadRunConfig(const std::string& path);
// Every key, values with 17 significant digits; parse(emit(c)) reproduces c.
std::string EmitRunConfig(const RunConfig& cfg);

// Applies one "section.key=value" override.
void SetConfigValue(RunConfig& cfg, const std::string& dotted_key, const std::string& value);

// Comma-separated numbers, e.g. "25,50,100".
std::vector<double> ParseNumberList(const std::string& text);

}  // namespace lidartraj

#endif  // LIDARTRAJ_CONFIG_H_
