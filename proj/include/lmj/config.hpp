#pragma once

#include "lmj/planner.hpp"

#include <json.hpp>

namespace lmj {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct NamedChain {
  std::string name;
  ChainModel chain;
};

struct FailureCase {
  std::string name;
  FailureSpec spec;
  std::string notes;
};

struct ScenarioSpec {
  std::string name;
  std::string chain = "planar4";
  std::string notes;
  Environment env;
};

struct ReachSettings {
  double cell = 0.02;
  int attempts = 10;
  double epsilon = -1.0;
};

struct EdgeSettings {
  std::size_t samples = 8000;
  double dt = 0.01;
};

/// Experiment grid: every (scenario, failure, asm) cell runs `trials` seeded trials.
struct SuiteSpec {
  std::string name = "default";
  std::string chain = "planar4";
  std::vector<std::string> scenarios;
  std::vector<std::string> failures;
  std::vector<AsmMode> asms;
  std::string datum_failure = "none";  // reference for area change
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::size_t max_actions = 25;
  double sigma_mu = 0.2;
  double sigma_theta = 3.0 * kPi / 180.0;
  double progress_threshold = 1e-3;
  double obstacle_penalty = 0.0;
  double action_overhead = 2.0;
  SimParams sim;
  ReachSettings reach;
  EdgeSettings edges;
};

Json to_json(const NamedChain& c);
Json to_json(const FailureCase& f);
Json to_json(const ScenarioSpec& s);
Json to_json(const SuiteSpec& s);

NamedChain chain_from_json(const Json& j);
FailureCase failure_from_json(const Json& j);
ScenarioSpec scenario_from_json(const Json& j);
SuiteSpec suite_from_json(const Json& j);

Json parse_json_text(const std::string& text);
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// Resolves a config reference: an existing file path, then
/// $LMJ_CONFIG_DIR/<kind>/<name>.json, then a built-in name.
NamedChain load_chain(const std::string& ref);
FailureCase load_failure(const std::string& ref);
ScenarioSpec load_scenario(const std::string& ref);
SuiteSpec load_suite(const std::string& ref);

}  // namespace lmj
