#pragma once

#include "lmj/npm_sim.hpp"

#include <optional>

namespace lmj {

enum class AsmKind { Random, Lazy, Greedy };

std::string_view to_string(AsmKind k);
AsmKind parse_asm(std::string_view s);

struct AsmMode {
  AsmKind kind = AsmKind::Greedy;
  std::size_t greedy_subset_size = 20;  // s

  void validate() const;
};

/// Everything selection needs besides the scene: the bundle and the arm it was built for.
struct PlanningContext {
  const ChainModel& chain;
  const EdgeBundle& bundle;
  SimParams sim;
  double progress_threshold = 1e-3;  // minimum distance decrease accepted by Lazy
  double obstacle_penalty = 0.0;     // Greedy weight on non-target displacement
  unsigned jobs = 1;                 // parallel candidate simulations
};

struct Selection {
  std::uint32_t edge_id = 0;
  std::optional<ExecutionOutcome> predicted;  // simulated outcome when one was computed
  double score = 0.0;                         // minus the simulated target distance
  bool fallback = false;                      // Lazy found no progressing candidate
  std::size_t simulations = 0;
  std::size_t candidates = 0;
};

/// Edges whose sweep touches the target footprint, sorted by id.
std::vector<std::uint32_t> candidate_edges(const EdgeBundle& bundle, const Environment& env);

std::optional<Selection> select_random(const PlanningContext& ctx, const Environment& env, std::uint64_t seed);
std::optional<Selection> select_lazy(const PlanningContext& ctx, const Environment& sim, std::uint64_t seed);
std::optional<Selection> select_greedy(const PlanningContext& ctx, const Environment& sim, std::size_t subset,
                                       std::uint64_t seed);
std::optional<Selection> select_edge(const PlanningContext& ctx, const Environment& sim, const AsmMode& mode,
                                     std::uint64_t seed);

struct ActionRecord {
  std::uint32_t edge_id = 0;
  double simulated_score = 0.0;
  Vec2 realized_displacement = Vec2::Zero();
  PlanarPose predicted_target;
  PlanarPose realized_target;
  bool prediction_exact = false;  // every object pose matched the simulation
  bool fallback = false;
  std::size_t simulations = 0;
  std::size_t candidates = 0;
  double distance_after = 0.0;
};

struct TrialResult {
  bool success = false;
  std::size_t actions = 0;
  double planning_time = 0.0;   // wall-clock selection time [s]
  double execution_time = 0.0;  // modelled: edge durations plus overhead per action [s]
  std::size_t simulations = 0;
  double final_distance = 0.0;
  std::vector<ActionRecord> log;
  std::string diagnostic;  // set when the trial aborted on an error
};

struct PlannerParams {
  AsmMode mode;
  std::size_t max_actions = 25;
  double action_overhead = 2.0;  // [s]
};

/// Closed loop: select on a nominal copy of the observed scene, execute on
/// the real scene, re-observe. Stops at the goal, at the action budget, or
/// after two consecutive selections with no candidate.
TrialResult plan_and_execute(const Environment& env_real, const Environment& nominal, const PlanningContext& ctx,
                             const PlannerParams& params, std::uint64_t seed);

/// Nominal scene carrying the observed object poses.
Environment observe(const Environment& nominal, const Environment& real);

}  // namespace lmj
