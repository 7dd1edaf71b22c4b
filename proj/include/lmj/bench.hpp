#pragma once

#include "lmj/config.hpp"

#include <functional>

namespace lmj {

/// Offline products for one failure case, shared by every scenario.
struct FailureArtifacts {
  FailureCase failure;
  ReachabilityMap map;
  EdgeBundle bundle;
  GenerationStats stats;
};

struct TrialRecord {
  std::string scenario;
  std::string failure;
  std::string asm_name;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  TrialResult result;
};

struct CellSummary {
  std::string scenario;
  std::string failure;
  std::string asm_name;
  std::size_t subset = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double mean_actions = 0.0;
  double sd_actions = 0.0;
  // Failed trials counted as max_actions, so stalls never look cheap.
  double mean_actions_censored = 0.0;
  double mean_execution_time = 0.0;
  double mean_simulations = 0.0;
  double mean_final_distance = 0.0;
  double mean_planning_time = 0.0;  // wall clock; only written to timing output
  std::size_t errors = 0;
  std::vector<std::size_t> histogram;  // index = action count

  double success_rate() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials); }
};

struct AreaRow {
  std::string failure;
  double pm_area = 0.0;
  double all_area = 0.0;
  double pm_change = 0.0;   // percent vs the datum failure
  double all_change = 0.0;
  bool has_change = false;  // false when the datum area is zero
};

struct BenchReport {
  SuiteSpec suite;
  std::vector<AreaRow> areas;
  std::vector<CellSummary> cells;
  std::vector<TrialRecord> trials;
  std::vector<std::pair<std::string, std::uint64_t>> map_hashes;
  std::vector<std::pair<std::string, std::uint64_t>> bundle_hashes;
  std::vector<std::pair<std::string, GenerationStats>> generation;
};

struct BenchOptions {
  unsigned jobs = 1;
  std::function<void(const std::string&)> log;
};

FailureArtifacts build_failure_artifacts(const ChainModel& chain, const FailureCase& failure, const SuiteSpec& suite,
                                         const Rect& workspace, unsigned jobs);

/// Runs every (scenario, failure, asm) cell. A trial that throws is
/// recorded as a failure with its diagnostic.
BenchReport run_bench(const SuiteSpec& suite, const BenchOptions& opts = {});

CellSummary summarize(const std::vector<const TrialRecord*>& trials, std::size_t max_actions);

/// report.csv, histograms.csv, trials.csv, areas.csv and artifacts.csv are
/// deterministic; timing.csv carries wall-clock data.
void write_bench_report(const BenchReport& report, const std::string& dir);

}  // namespace lmj
