#include "lmj/planner.hpp"

#include "lmj/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>

namespace lmj {

std::string_view to_string(AsmKind k) {
  switch (k) {
    case AsmKind::Random: return "random";
    case AsmKind::Lazy: return "lazy";
    case AsmKind::Greedy: return "greedy";
  }
  return "greedy";
}

AsmKind parse_asm(std::string_view s) {
  if (s == "random") return AsmKind::Random;
  if (s == "lazy") return AsmKind::Lazy;
  if (s == "greedy") return AsmKind::Greedy;
  throw Error("unknown action selection mechanism '" + std::string(s) + "'");
}

void AsmMode::validate() const {
  if (greedy_subset_size < 1) throw Error("greedy subset size must be at least 1");
}

std::vector<std::uint32_t> candidate_edges(const EdgeBundle& bundle, const Environment& env) {
  return edges_intersecting(bundle, env.target().footprint());
}

namespace {

void shuffle(std::vector<std::uint32_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

double obstacle_displacement(const Environment& before, const Environment& after) {
  double sum = 0.0;
  for (std::size_t i = 0; i < before.objects.size(); ++i) {
    if (before.objects[i].role == ObjectRole::Target) continue;
    sum += (after.objects[i].pose.position() - before.objects[i].pose.position()).norm();
  }
  return sum;
}

ExecutionOutcome simulate(const PlanningContext& ctx, const Environment& sim, std::uint32_t id) {
  return execute_edge(sim, ctx.chain, ctx.bundle.edge(id), ctx.sim);
}

}  // namespace

std::optional<Selection> select_random(const PlanningContext& ctx, const Environment& env, std::uint64_t seed) {
  const auto candidates = candidate_edges(ctx.bundle, env);
  if (candidates.empty()) return std::nullopt;
  Rng rng(seed);
  Selection sel;
  sel.edge_id = candidates[uniform_index(rng, candidates.size())];
  sel.candidates = candidates.size();
  return sel;
}

std::optional<Selection> select_lazy(const PlanningContext& ctx, const Environment& sim, std::uint64_t seed) {
  auto order = candidate_edges(ctx.bundle, sim);
  if (order.empty()) return std::nullopt;
  Rng rng(seed);
  shuffle(order, rng);
  const double d0 = target_goal_distance(sim);
  Selection best;
  best.candidates = order.size();
  best.fallback = true;
  double best_d = std::numeric_limits<double>::infinity();
  for (const std::uint32_t id : order) {
    ExecutionOutcome out = simulate(ctx, sim, id);
    ++best.simulations;
    const double d = target_goal_distance(out.env_after);
    if (d0 - d >= ctx.progress_threshold) {
      best.edge_id = id;
      best.score = -d;
      best.fallback = false;
      best.predicted = std::move(out);
      return best;
    }
    if (d < best_d || (d == best_d && id < best.edge_id)) {
      best_d = d;
      best.edge_id = id;
      best.score = -d;
      best.predicted = std::move(out);
    }
  }
  return best;
}

std::optional<Selection> select_greedy(const PlanningContext& ctx, const Environment& sim, std::size_t subset,
                                       std::uint64_t seed) {
  if (subset < 1) throw Error("greedy subset size must be at least 1");
  auto pool = candidate_edges(ctx.bundle, sim);
  if (pool.empty()) return std::nullopt;
  const std::size_t n = std::min(subset, pool.size());
  if (n < pool.size()) {
    // Partial Fisher-Yates: the first n slots are a uniform subset.
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
  }
  std::vector<std::optional<ExecutionOutcome>> outcomes(n);
  parallel_for(n, ctx.jobs, [&](std::size_t i) { outcomes[i] = simulate(ctx, sim, pool[i]); });

  Selection sel;
  sel.candidates = pool.size();
  sel.simulations = n;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Environment& after = outcomes[i]->env_after;
    double score = -target_goal_distance(after);
    if (ctx.obstacle_penalty != 0.0) score -= ctx.obstacle_penalty * obstacle_displacement(sim, after);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  sel.edge_id = pool[best];
  sel.score = -target_goal_distance(outcomes[best]->env_after);
  sel.predicted = std::move(outcomes[best]);
  return sel;
}

std::optional<Selection> select_edge(const PlanningContext& ctx, const Environment& sim, const AsmMode& mode,
                                     std::uint64_t seed) {
  switch (mode.kind) {
    case AsmKind::Random: return select_random(ctx, sim, seed);
    case AsmKind::Lazy: return select_lazy(ctx, sim, seed);
    case AsmKind::Greedy: return select_greedy(ctx, sim, mode.greedy_subset_size, seed);
  }
  return std::nullopt;
}

Environment observe(const Environment& nominal, const Environment& real) {
  Environment sim = nominal;
  if (sim.objects.size() != real.objects.size()) throw Error("observed scene does not match the nominal scene");
  for (std::size_t i = 0; i < sim.objects.size(); ++i) sim.objects[i].pose = real.objects[i].pose;
  return sim;
}

TrialResult plan_and_execute(const Environment& env_real, const Environment& nominal, const PlanningContext& ctx,
                             const PlannerParams& params, std::uint64_t seed) {
  params.mode.validate();
  TrialResult result;
  Environment real = env_real;
  int empty_streak = 0;
  std::uint64_t round = 0;
  using Clock = std::chrono::steady_clock;
  while (!goal_reached(real) && result.actions < params.max_actions) {
    const Environment sim = observe(nominal, real);
    const auto t0 = Clock::now();
    std::optional<Selection> sel = select_edge(ctx, sim, params.mode, derive_seed(seed, round++));
    if (sel && !sel->predicted) {
      sel->predicted = simulate(ctx, sim, sel->edge_id);
      sel->score = -target_goal_distance(sel->predicted->env_after);
    }
    result.planning_time += std::chrono::duration<double>(Clock::now() - t0).count();
    if (!sel) {
      if (++empty_streak >= 2) break;
      continue;
    }
    empty_streak = 0;
    result.simulations += sel->simulations;

    const Edge& edge = ctx.bundle.edge(sel->edge_id);
    ExecutionOutcome out = execute_edge(real, ctx.chain, edge, ctx.sim);
    ActionRecord rec;
    rec.edge_id = sel->edge_id;
    rec.simulated_score = sel->score;
    rec.realized_displacement = out.target_displacement;
    rec.predicted_target = sel->predicted->env_after.target().pose;
    rec.realized_target = out.env_after.target().pose;
    rec.prediction_exact = same_poses(sel->predicted->env_after, out.env_after);
    rec.fallback = sel->fallback;
    rec.simulations = sel->simulations;
    rec.candidates = sel->candidates;
    real = std::move(out.env_after);
    rec.distance_after = target_goal_distance(real);
    result.log.push_back(rec);
    ++result.actions;
    result.execution_time += edge.duration() + params.action_overhead;
  }
  result.success = goal_reached(real);
  result.final_distance = target_goal_distance(real);
  return result;
}

}  // namespace lmj
