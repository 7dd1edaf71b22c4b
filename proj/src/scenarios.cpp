#include "lmj/scenarios.hpp"

namespace lmj {

namespace {

SceneObject disc(int id, ObjectRole role, double x, double y, double mu = 0.4) {
  SceneObject o;
  o.id = id;
  o.role = role;
  o.shape = Disc{0.03};
  o.pose = {x, y, 0.0};
  o.mass = 0.1;
  o.mu_surface = mu;
  return o;
}

SceneObject wall(int id, double x, double y, double w, double h) {
  SceneObject o;
  o.id = id;
  o.role = ObjectRole::Static;
  o.shape = Box{w, h};
  o.pose = {x, y, 0.0};
  o.mass = 10.0;
  o.mu_surface = 1.0;
  return o;
}

Environment base_scene() {
  Environment e;
  e.table_bounds = {-0.6, 0.0, 0.6, 0.8};
  e.gravity_accel = 9.81;
  e.goal = {Disc{0.07}, {0.25, 0.45, 0.0}};
  e.objects.push_back(disc(0, ObjectRole::Target, -0.25, 0.45));
  return e;
}

ScenarioSpec clutter(const std::string& name, const std::vector<std::pair<double, double>>& obstacles,
                     const std::string& notes) {
  ScenarioSpec s;
  s.name = name;
  s.notes = notes;
  s.env = base_scene();
  int id = 1;
  for (const auto& [x, y] : obstacles) s.env.objects.push_back(disc(id++, ObjectRole::Movable, x, y));
  return s;
}

}  // namespace

NamedChain planar4_chain() {
  ChainModel m;
  m.link_lengths = {0.35, 0.30, 0.15, 0.10};
  m.link_masses = {2.0, 1.5, 0.8, 0.4};
  for (std::size_t i = 0; i < 4; ++i) {
    m.link_inertias.push_back(m.link_masses[i] * m.link_lengths[i] * m.link_lengths[i] / 12.0);
  }
  m.joint_limits = {{-1.75, 1.75}, {-2.5, 2.5}, {-2.5, 2.5}, {-2.5, 2.5}};
  m.velocity_limits = {2.0, 2.5, 3.0, 3.0};
  m.torque_limits = {60.0, 40.0, 20.0, 10.0};
  m.friction.assign(4, JointFriction{0.1, 0.2});
  m.interaction_points = {{"forearm", 1, 0.30}, {"wrist", 2, 0.15}, {std::string(kEndEffector), 3, 0.10}};
  m.base = {0.0, 0.0, kPi / 2.0};
  m.gravity = Vec2::Zero();  // arm moves parallel to the table
  m.contact_radius = 0.01;
  return {"planar4", m};
}

ChainModel two_link_chain(double l1, double l2) {
  ChainModel m;
  m.link_lengths = {l1, l2};
  m.link_masses = {1.0, 1.0};
  m.link_inertias = {l1 * l1 / 12.0, l2 * l2 / 12.0};
  m.joint_limits = {{-kPi, kPi}, {-kPi, kPi}};
  m.velocity_limits = {10.0, 10.0};
  m.torque_limits = {500.0, 500.0};
  m.friction.assign(2, JointFriction{0.05, 0.0});
  m.interaction_points = {{"elbow", 0, l1}, {"wrist", 1, 0.5 * l2}, {std::string(kEndEffector), 1, l2}};
  m.base = {0.0, 0.0, 0.0};
  m.gravity = {0.0, -9.81};
  return m;
}

std::vector<std::string> builtin_chain_names() { return {"planar4"}; }
std::vector<std::string> builtin_failure_names() { return {"none", "fc1", "fc2"}; }
std::vector<std::string> builtin_scenario_names() { return {"clutter-3", "tunnel", "clutter-11"}; }
std::vector<std::string> builtin_suite_names() { return {"default", "quick"}; }

std::optional<NamedChain> builtin_chain(std::string_view name) {
  if (name == "planar4") return planar4_chain();
  return std::nullopt;
}

std::optional<FailureCase> builtin_failure(std::string_view name) {
  if (name == "none") return FailureCase{"none", {}, "healthy arm"};
  if (name == "fc1") {
    return FailureCase{"fc1", {{{1, 0.6}, {3, 0.8}}}, "elbow and wrist joints locked; grasping only in part of the workspace"};
  }
  if (name == "fc2") {
    return FailureCase{"fc2", {{{2, 0.7}, {3, 2.4}}}, "two distal joints locked; the gripper cannot reach a grasp heading"};
  }
  return std::nullopt;
}

std::optional<ScenarioSpec> builtin_scenario(std::string_view name) {
  if (name == "clutter-3") {
    return clutter("clutter-3", {{-0.05, 0.47}, {0.08, 0.40}, {0.05, 0.55}},
                   "three movable discs between the target and the goal");
  }
  if (name == "clutter-11") {
    return clutter("clutter-11",
                   {{-0.10, 0.45}, {0.00, 0.52}, {0.05, 0.38}, {0.12, 0.47}, {-0.05, 0.30}, {-0.15, 0.60},
                    {0.10, 0.62}, {0.20, 0.30}, {-0.30, 0.30}, {0.35, 0.58}, {-0.35, 0.62}},
                   "eleven movable discs scattered around the direct route");
  }
  if (name == "tunnel") {
    ScenarioSpec s;
    s.name = "tunnel";
    s.notes = "static partition at x = 0 with a 0.12 m passage around y = 0.45";
    s.env = base_scene();
    s.env.objects.push_back(wall(1, 0.0, 0.195, 0.02, 0.39));
    s.env.objects.push_back(wall(2, 0.0, 0.655, 0.02, 0.29));
    return s;
  }
  return std::nullopt;
}

std::optional<SuiteSpec> builtin_suite(std::string_view name) {
  SuiteSpec s;
  s.scenarios = builtin_scenario_names();
  s.failures = {"fc1", "fc2"};
  s.asms = {{AsmKind::Random, 20}, {AsmKind::Lazy, 20}, {AsmKind::Greedy, 20}};
  if (name == "default") {
    s.name = "default";
    return s;
  }
  if (name == "quick") {
    s.name = "quick";
    s.trials = 4;
    s.edges.samples = 2000;
    return s;
  }
  return std::nullopt;
}

}  // namespace lmj
