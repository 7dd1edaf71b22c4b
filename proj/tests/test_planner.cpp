#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>

using namespace lmj;
using namespace lmj::testing;

namespace {

SceneObject disc_obj(int id, ObjectRole role, double x, double y) {
  SceneObject o;
  o.id = id;
  o.role = role;
  o.shape = Disc{0.03};
  o.pose = {x, y, 0.0};
  return o;
}

Environment target_scene(double gx = 0.3) {
  Environment e;
  e.table_bounds = {-1.0, -1.0, 1.0, 1.0};
  e.goal = {Disc{0.05}, {gx, 0.0, 0.0}};
  e.objects.push_back(disc_obj(0, ObjectRole::Target, 0.0, 0.0));
  return e;
}

Edge line_edge(Vec2 from, Vec2 to, double speed) {
  Edge e;
  const double dt = 0.01;
  const double len = (to - from).norm();
  const auto steps = std::max<long long>(1, std::llround(len / (speed * dt)));
  e.control = {(to - from) / len * speed, dt * static_cast<double>(steps), dt};
  e.start_q = VecX::Zero(4);
  for (long long k = 0; k <= steps; ++k) {
    e.sweep.push_back(from + (to - from) * static_cast<double>(k) / static_cast<double>(steps));
    e.trace.push_back({VecX::Zero(4), VecX::Zero(4)});
  }
  return e;
}

// A push that strikes the disc at the origin travelling along `angle`.
Edge push(double angle, double speed) {
  const Vec2 d = unit(angle);
  return line_edge(-0.1 * d, -0.02 * d, speed);
}

EdgeBundle synthetic(std::vector<Edge> edges) {
  EdgeBundle b;
  b.dof = 4;
  b.provenance.cell = 0.05;
  b.provenance.contact_radius = 0.01;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i].id = static_cast<std::uint32_t>(i);
    b.edges.push_back(std::move(edges[i]));
  }
  b.rebuild_index();
  return b;
}

const ChainModel& arm() {
  static const ChainModel c = planar4_chain().chain;
  return c;
}

const EdgeBundle& real_bundle() {
  static const EdgeBundle b = [] {
    ReachParams rp;
    rp.seed = 2;
    const ReachabilityMap m = generate_reachability_map(arm(), {}, {{-0.6, 0.0, 0.6, 0.8}, 0.04}, rp);
    EdgeSamplingParams ep;
    ep.samples = 3000;
    ep.seed = 4;
    return generate_edges(arm(), {}, m, {}, ep);
  }();
  return b;
}

}  // namespace

TEST_CASE("no intersecting edge means no candidate") {
  const EdgeBundle b = synthetic({line_edge({0.5, 0.5}, {0.6, 0.5}, 0.3)});
  const PlanningContext ctx{arm(), b};
  const Environment env = target_scene();
  CHECK(candidate_edges(b, env).empty());
  CHECK_FALSE(select_random(ctx, env, 1));
  CHECK_FALSE(select_lazy(ctx, env, 1));
  CHECK_FALSE(select_greedy(ctx, env, 20, 1));
  const TrialResult r = plan_and_execute(env, env, ctx, {}, 1);
  CHECK_FALSE(r.success);
  CHECK(r.actions == 0);
  CHECK(r.log.empty());
}

TEST_CASE("a single candidate is always chosen") {
  const EdgeBundle b = synthetic({line_edge({0.5, 0.5}, {0.6, 0.5}, 0.3), push(0.0, 0.4)});
  const PlanningContext ctx{arm(), b};
  const Environment env = target_scene();
  for (std::uint64_t s = 0; s < 20; ++s) {
    CHECK(select_random(ctx, env, s)->edge_id == 1);
    CHECK(select_lazy(ctx, env, s)->edge_id == 1);
    const auto g = select_greedy(ctx, env, 20, s);
    CHECK(g->edge_id == 1);
    CHECK(g->simulations == 1);
  }
}

TEST_CASE("random selection is uniform over candidates") {
  std::vector<Edge> edges;
  for (int i = 0; i < 10; ++i) edges.push_back(push(0.6 * i, 0.3));
  const EdgeBundle b = synthetic(edges);
  const PlanningContext ctx{arm(), b};
  const Environment env = target_scene();
  REQUIRE(candidate_edges(b, env).size() == 10);
  std::vector<int> counts(10, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[select_random(ctx, env, derive_seed(99, static_cast<std::uint64_t>(i)))->edge_id];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  // 9 degrees of freedom: mean 9, sd sqrt(18); allow three sd
  CHECK(chi2 <= 9.0 + 3.0 * std::sqrt(18.0));
}

TEST_CASE("lazy stops at the first progressing candidate") {
  // every push heads roughly towards the goal at +x
  std::vector<Edge> edges;
  for (int i = 0; i < 8; ++i) edges.push_back(push(-0.3 + 0.08 * i, 0.5));
  const EdgeBundle b = synthetic(edges);
  const PlanningContext ctx{arm(), b};
  const Environment env = target_scene();
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto sel = select_lazy(ctx, env, s);
    REQUIRE(sel);
    CHECK(sel->simulations == 1);
    CHECK_FALSE(sel->fallback);
    CHECK(target_goal_distance(sel->predicted->env_after) <= target_goal_distance(env) - ctx.progress_threshold);
  }
}

TEST_CASE("lazy falls back to the best candidate when nothing progresses") {
  // all pushes point away from the goal by different amounts
  std::vector<Edge> edges;
  for (int i = 0; i < 7; ++i) edges.push_back(push(kPi - 0.9 + 0.3 * i, 0.2 + 0.05 * i));
  const EdgeBundle b = synthetic(edges);
  const PlanningContext ctx{arm(), b};
  const Environment env = target_scene();
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::uint32_t id = 0; id < b.edges.size(); ++id) {
    const double d = target_goal_distance(execute_edge(env, arm(), b.edges[id]).env_after);
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  REQUIRE(best_d > target_goal_distance(env) - ctx.progress_threshold);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto sel = select_lazy(ctx, env, s);
    REQUIRE(sel);
    CHECK(sel->fallback);
    CHECK(sel->simulations == b.edges.size());
    CHECK(sel->edge_id == best);
  }
}

TEST_CASE("greedy prefers the goal-reaching edge") {
  // the strong push slides 0.3 m onto the goal centre: v0^2 = 0.3 * 2 * 0.4 * 9.81
  const double v0 = std::sqrt(0.3 * 2.0 * 0.4 * 9.81);
  const EdgeBundle b = synthetic({push(0.0, 0.1), push(0.0, v0 / 0.8)});
  const PlanningContext ctx{arm(), b};
  const Environment env = target_scene();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto sel = select_greedy(ctx, env, 20, s);
    REQUIRE(sel);
    CHECK(sel->edge_id == 1);
    CHECK(goal_reached(sel->predicted->env_after));
  }
}

TEST_CASE("greedy over the whole candidate set matches brute force") {
  const EdgeBundle& b = real_bundle();
  const PlanningContext ctx{arm(), b};
  int checked = 0;
  for (const auto& name : builtin_scenario_names()) {
    const Environment env = builtin_scenario(name)->env;
    const auto cand = candidate_edges(b, env);
    REQUIRE_FALSE(cand.empty());
    CHECK(cand == edges_intersecting_brute_force(b, env.target().footprint()));
    double best_d = std::numeric_limits<double>::infinity();
    std::uint32_t best = 0;
    for (std::uint32_t id : cand) {
      const double d = target_goal_distance(execute_edge(env, arm(), b.edge(id)).env_after);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    const auto sel = select_greedy(ctx, env, cand.size() + 5, 1);
    REQUIRE(sel);
    CHECK(sel->edge_id == best);
    CHECK(-sel->score == best_d);
    CHECK(sel->simulations == cand.size());
    ++checked;

    // a smaller subset is a deterministic function of the seed, whatever the job count
    PlanningContext par{arm(), b};
    par.jobs = 3;
    const auto a1 = select_greedy(ctx, env, 5, 42);
    const auto a2 = select_greedy(par, env, 5, 42);
    CHECK(a1->edge_id == a2->edge_id);
    CHECK(a1->simulations == std::min<std::size_t>(5, cand.size()));
    CHECK(-a1->score >= best_d);
  }
  CHECK(checked == 3);
}

TEST_CASE("without noise the simulated and real worlds agree exactly") {
  const EdgeBundle& b = real_bundle();
  const PlanningContext ctx{arm(), b};
  std::size_t actions = 0;
  for (AsmKind kind : {AsmKind::Random, AsmKind::Lazy, AsmKind::Greedy}) {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      const Environment nominal = builtin_scenario(builtin_scenario_names()[trial % 3])->env;
      const Environment real = perturb(nominal, 0.0, trial, 0.0);
      PlannerParams pp;
      pp.mode = {kind, 20};
      pp.max_actions = 8;
      const TrialResult r = plan_and_execute(real, nominal, ctx, pp, trial);
      for (const ActionRecord& a : r.log) {
        CHECK(a.prediction_exact);
        CHECK(a.predicted_target == a.realized_target);
      }
      actions += r.actions;
    }
  }
  CHECK(actions > 100);
}

TEST_CASE("friction noise makes predictions imperfect") {
  const EdgeBundle& b = real_bundle();
  const PlanningContext ctx{arm(), b};
  std::size_t inexact = 0, moved = 0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const Environment nominal = builtin_scenario("clutter-3")->env;
    const Environment real = perturb(nominal, 0.2, trial);
    PlannerParams pp;
    pp.max_actions = 6;
    for (const ActionRecord& a : plan_and_execute(real, nominal, ctx, pp, trial).log) {
      if (a.realized_displacement.norm() > 0.0) ++moved;
      if (!a.prediction_exact) ++inexact;
    }
  }
  CHECK(moved > 0);
  CHECK(inexact > 0);
}

TEST_CASE("trial loop boundaries and bookkeeping") {
  const EdgeBundle& b = real_bundle();
  const PlanningContext ctx{arm(), b};
  Environment at_goal = builtin_scenario("clutter-3")->env;
  at_goal.objects[at_goal.target_index()].pose = at_goal.goal.pose;
  const TrialResult done = plan_and_execute(at_goal, at_goal, ctx, {}, 1);
  CHECK(done.success);
  CHECK(done.actions == 0);
  CHECK(done.execution_time == 0.0);

  const Environment env = builtin_scenario("clutter-3")->env;
  PlannerParams none;
  none.max_actions = 0;
  const TrialResult z = plan_and_execute(env, env, ctx, none, 1);
  CHECK_FALSE(z.success);
  CHECK(z.actions == 0);

  PlannerParams pp;
  pp.max_actions = 5;
  const TrialResult r = plan_and_execute(env, env, ctx, pp, 3);
  CHECK(r.actions <= 5);
  CHECK(r.log.size() == r.actions);
  double expected_time = 0.0;
  std::size_t sims = 0;
  for (const ActionRecord& a : r.log) {
    expected_time += b.edge(a.edge_id).duration() + pp.action_overhead;
    sims += a.simulations;
  }
  CHECK(r.execution_time == doctest::Approx(expected_time));
  CHECK(r.simulations == sims);
  if (!r.log.empty()) CHECK(r.final_distance == r.log.back().distance_after);
  CHECK(r.success == (r.final_distance == 0.0));
  if (!r.success && r.actions < pp.max_actions) CHECK(r.log.size() < pp.max_actions);

  const TrialResult again = plan_and_execute(env, env, ctx, pp, 3);
  CHECK(again.actions == r.actions);
  CHECK(again.final_distance == r.final_distance);
  for (std::size_t i = 0; i < r.log.size(); ++i) CHECK(again.log[i].edge_id == r.log[i].edge_id);
}

TEST_CASE("observation copies poses onto the nominal scene") {
  const Environment nominal = builtin_scenario("clutter-3")->env;
  Environment real = perturb(nominal, 0.3, 8);
  real.objects[1].pose.x += 0.05;
  const Environment sim = observe(nominal, real);
  CHECK(same_poses(sim, real));
  for (std::size_t i = 0; i < sim.objects.size(); ++i) CHECK(sim.objects[i].mu_surface == nominal.objects[i].mu_surface);
  CHECK(sim.sigma_theta == nominal.sigma_theta);
  Environment fewer = real;
  fewer.objects.pop_back();
  CHECK_THROWS_AS(observe(nominal, fewer), Error);
}

TEST_CASE("selection mechanism names") {
  for (AsmKind k : {AsmKind::Random, AsmKind::Lazy, AsmKind::Greedy}) CHECK(parse_asm(to_string(k)) == k);
  CHECK_THROWS_AS(parse_asm("clever"), Error);
  CHECK_THROWS_AS((AsmMode{AsmKind::Greedy, 0}).validate(), Error);
}
