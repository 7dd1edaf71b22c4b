#include "lmj/config.hpp"

#include "lmj/scenarios.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lmj {

namespace fs = std::filesystem;

namespace {

Json pose_json(const PlanarPose& p) { return Json::array({p.x, p.y, p.theta}); }

PlanarPose pose_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("pose must be [x, y, theta]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json shape_json(const Shape& s) {
  if (const auto* d = std::get_if<Disc>(&s)) return {{"type", "disc"}, {"radius", d->radius}};
  const auto& b = std::get<Box>(s);
  return {{"type", "box"}, {"width", b.width}, {"height", b.height}};
}

Shape shape_from(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "disc") return Disc{j.at("radius").get<double>()};
  if (type == "box") return Box{j.at("width").get<double>(), j.at("height").get<double>()};
  throw ConfigError("unknown shape type '" + type + "'");
}

Json rect_json(const Rect& r) { return Json::array({r.x_min, r.y_min, r.x_max, r.y_max}); }

Rect rect_from(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("rectangle must be [x_min, y_min, x_max, y_max]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

Json sim_json(const SimParams& p) {
  return {{"transfer", p.transfer},         {"chain_depth", p.chain_depth}, {"rotation", p.rotation},
          {"pick_and_drag", p.pick_and_drag}, {"window", {p.window_lo, p.window_hi}}};
}

SimParams sim_from(const Json& j) {
  SimParams p;
  p.transfer = j.value("transfer", p.transfer);
  p.chain_depth = j.value("chain_depth", p.chain_depth);
  p.rotation = j.value("rotation", p.rotation);
  p.pick_and_drag = j.value("pick_and_drag", p.pick_and_drag);
  if (j.contains("window")) {
    p.window_lo = j["window"].at(0).get<double>();
    p.window_hi = j["window"].at(1).get<double>();
  }
  if (!(p.transfer > 0.0 && p.transfer <= 1.0)) throw ConfigError("transfer coefficient must lie in (0, 1]");
  if (p.chain_depth < 1) throw ConfigError("chain_depth must be at least 1");
  return p;
}

template <typename Fn>
auto guarded(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

Json to_json(const NamedChain& c) {
  const ChainModel& m = c.chain;
  Json links = Json::array();
  for (std::size_t i = 0; i < m.dof(); ++i) {
    links.push_back({{"length", m.link_lengths[i]},
                     {"mass", m.link_masses[i]},
                     {"inertia", m.link_inertias[i]},
                     {"limits", {m.joint_limits[i].lo, m.joint_limits[i].hi}},
                     {"velocity_limit", m.velocity_limits[i]},
                     {"torque_limit", m.torque_limits[i]},
                     {"viscous", m.friction[i].viscous},
                     {"coulomb", m.friction[i].coulomb}});
  }
  Json points = Json::array();
  for (const auto& p : m.interaction_points) points.push_back({{"name", p.name}, {"link", p.link}, {"offset", p.offset}});
  return {{"name", c.name},
          {"base", pose_json(m.base)},
          {"gravity", {m.gravity.x(), m.gravity.y()}},
          {"contact_radius", m.contact_radius},
          {"links", links},
          {"interaction_points", points}};
}

NamedChain chain_from_json(const Json& j) {
  return guarded("chain config", [&] {
    NamedChain c;
    c.name = j.at("name").get<std::string>();
    ChainModel& m = c.chain;
    m.base = pose_from(j.at("base"));
    m.gravity = {j.at("gravity").at(0).get<double>(), j.at("gravity").at(1).get<double>()};
    m.contact_radius = j.value("contact_radius", m.contact_radius);
    for (const Json& l : j.at("links")) {
      m.link_lengths.push_back(l.at("length").get<double>());
      m.link_masses.push_back(l.at("mass").get<double>());
      m.link_inertias.push_back(l.at("inertia").get<double>());
      m.joint_limits.push_back({l.at("limits").at(0).get<double>(), l.at("limits").at(1).get<double>()});
      m.velocity_limits.push_back(l.at("velocity_limit").get<double>());
      m.torque_limits.push_back(l.at("torque_limit").get<double>());
      m.friction.push_back({l.value("viscous", 0.0), l.value("coulomb", 0.0)});
    }
    for (const Json& p : j.at("interaction_points")) {
      m.interaction_points.push_back(
          {p.at("name").get<std::string>(), p.at("link").get<std::size_t>(), p.at("offset").get<double>()});
    }
    m.validate();
    return c;
  });
}

Json to_json(const FailureCase& f) {
  Json locks = Json::array();
  for (const auto& [joint, angle] : f.spec.locks) locks.push_back({{"joint", joint}, {"angle", angle}});
  Json j = {{"name", f.name}, {"locks", locks}};
  if (!f.notes.empty()) j["notes"] = f.notes;
  return j;
}

FailureCase failure_from_json(const Json& j) {
  return guarded("failure config", [&] {
    FailureCase f;
    f.name = j.at("name").get<std::string>();
    f.notes = j.value("notes", std::string{});
    for (const Json& l : j.at("locks")) {
      const auto joint = l.at("joint").get<std::size_t>();
      if (!f.spec.locks.emplace(joint, l.at("angle").get<double>()).second) {
        throw ConfigError("joint " + std::to_string(joint) + " is locked twice");
      }
    }
    return f;
  });
}

Json to_json(const ScenarioSpec& s) {
  const Environment& e = s.env;
  Json objects = Json::array();
  for (const auto& o : e.objects) {
    objects.push_back({{"id", o.id},
                       {"role", std::string(to_string(o.role))},
                       {"shape", shape_json(o.shape)},
                       {"pose", pose_json(o.pose)},
                       {"mass", o.mass},
                       {"mu", o.mu_surface}});
  }
  Json j = {{"name", s.name},
            {"chain", s.chain},
            {"table", rect_json(e.table_bounds)},
            {"gravity", e.gravity_accel},
            {"goal", {{"shape", shape_json(e.goal.shape)}, {"pose", pose_json(e.goal.pose)}}},
            {"objects", objects}};
  if (!s.notes.empty()) j["notes"] = s.notes;
  return j;
}

ScenarioSpec scenario_from_json(const Json& j) {
  return guarded("scenario config", [&] {
    ScenarioSpec s;
    s.name = j.at("name").get<std::string>();
    s.chain = j.value("chain", s.chain);
    s.notes = j.value("notes", std::string{});
    Environment& e = s.env;
    e.table_bounds = rect_from(j.at("table"));
    e.gravity_accel = j.value("gravity", e.gravity_accel);
    e.goal = {shape_from(j.at("goal").at("shape")), pose_from(j.at("goal").at("pose"))};
    for (const Json& o : j.at("objects")) {
      SceneObject obj;
      obj.id = o.at("id").get<int>();
      obj.role = parse_object_role(o.at("role").get<std::string>());
      obj.shape = shape_from(o.at("shape"));
      obj.pose = pose_from(o.at("pose"));
      obj.mass = o.value("mass", obj.mass);
      obj.mu_surface = o.value("mu", obj.mu_surface);
      e.objects.push_back(obj);
    }
    e.validate();
    return s;
  });
}

Json to_json(const SuiteSpec& s) {
  Json asms = Json::array();
  for (const auto& a : s.asms) {
    Json ja = {{"mode", std::string(to_string(a.kind))}};
    if (a.kind == AsmKind::Greedy) ja["subset"] = a.greedy_subset_size;
    asms.push_back(ja);
  }
  return {{"name", s.name},
          {"chain", s.chain},
          {"scenarios", s.scenarios},
          {"failures", s.failures},
          {"asms", asms},
          {"datum_failure", s.datum_failure},
          {"trials", s.trials},
          {"seed", s.seed},
          {"max_actions", s.max_actions},
          {"sigma_mu", s.sigma_mu},
          {"sigma_theta", s.sigma_theta},
          {"progress_threshold", s.progress_threshold},
          {"obstacle_penalty", s.obstacle_penalty},
          {"action_overhead", s.action_overhead},
          {"sim", sim_json(s.sim)},
          {"reach", {{"cell", s.reach.cell}, {"attempts", s.reach.attempts}, {"epsilon", s.reach.epsilon}}},
          {"edges", {{"samples", s.edges.samples}, {"dt", s.edges.dt}}}};
}

SuiteSpec suite_from_json(const Json& j) {
  return guarded("suite config", [&] {
    SuiteSpec s;
    s.name = j.at("name").get<std::string>();
    s.chain = j.value("chain", s.chain);
    s.scenarios = j.at("scenarios").get<std::vector<std::string>>();
    s.failures = j.at("failures").get<std::vector<std::string>>();
    for (const Json& a : j.at("asms")) {
      AsmMode m;
      m.kind = parse_asm(a.at("mode").get<std::string>());
      m.greedy_subset_size = a.value("subset", m.greedy_subset_size);
      m.validate();
      s.asms.push_back(m);
    }
    s.datum_failure = j.value("datum_failure", s.datum_failure);
    s.trials = j.value("trials", s.trials);
    s.seed = j.value("seed", s.seed);
    s.max_actions = j.value("max_actions", s.max_actions);
    s.sigma_mu = j.value("sigma_mu", s.sigma_mu);
    s.sigma_theta = j.value("sigma_theta", s.sigma_theta);
    s.progress_threshold = j.value("progress_threshold", s.progress_threshold);
    s.obstacle_penalty = j.value("obstacle_penalty", s.obstacle_penalty);
    s.action_overhead = j.value("action_overhead", s.action_overhead);
    if (j.contains("sim")) s.sim = sim_from(j["sim"]);
    if (j.contains("reach")) {
      const Json& r = j["reach"];
      s.reach.cell = r.value("cell", s.reach.cell);
      s.reach.attempts = r.value("attempts", s.reach.attempts);
      s.reach.epsilon = r.value("epsilon", s.reach.epsilon);
    }
    if (j.contains("edges")) {
      const Json& e = j["edges"];
      s.edges.samples = e.value("samples", s.edges.samples);
      s.edges.dt = e.value("dt", s.edges.dt);
    }
    if (s.scenarios.empty() || s.failures.empty() || s.asms.empty()) {
      throw ConfigError("suite needs at least one scenario, failure and asm");
    }
    if (s.sigma_mu < 0.0 || s.sigma_theta < 0.0) throw ConfigError("perturbation sigmas must be non-negative");
    return s;
  });
}

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << j.dump(2) << '\n';
}

namespace {

std::optional<std::string> find_config_file(const std::string& ref, const char* kind) {
  if (fs::is_regular_file(ref)) return ref;
  if (const char* dir = std::getenv("LMJ_CONFIG_DIR"); dir && *dir) {
    for (const fs::path& p : {fs::path(dir) / kind / (ref + ".json"), fs::path(dir) / (ref + ".json")}) {
      if (fs::is_regular_file(p)) return p.string();
    }
  }
  return std::nullopt;
}

template <typename T, typename Parse, typename Builtin>
T load(const std::string& ref, const char* kind, Parse parse, Builtin builtin) {
  if (auto path = find_config_file(ref, kind)) return parse(read_json_file(*path));
  if (auto b = builtin(ref)) return *b;
  throw ConfigError(std::string("no ") + kind + " config named '" + ref + "'");
}

}  // namespace

NamedChain load_chain(const std::string& ref) {
  return load<NamedChain>(ref, "chains", chain_from_json, builtin_chain);
}
FailureCase load_failure(const std::string& ref) {
  return load<FailureCase>(ref, "failures", failure_from_json, builtin_failure);
}
ScenarioSpec load_scenario(const std::string& ref) {
  return load<ScenarioSpec>(ref, "scenarios", scenario_from_json, builtin_scenario);
}
SuiteSpec load_suite(const std::string& ref) {
  return load<SuiteSpec>(ref, "suites", suite_from_json, builtin_suite);
}

}  // namespace lmj
