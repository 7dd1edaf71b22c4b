// Command-line driver: reachability maps, edge bundles, single trials and suites.

#include "lmj/bench.hpp"
#include "lmj/scenarios.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace lmj;

namespace {

enum Exit : int { kOk = 0, kTaskFailed = 1, kConfig = 2, kEmpty = 3, kMismatch = 4, kRuntime = 5 };

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void check_failure(const FailureCase& f, const ChainModel& chain) {
  try {
    f.spec.validate(chain);
  } catch (const Error& e) {
    throw ConfigError("failure " + f.name + ": " + e.what());
  }
}

Rect parse_bounds(const std::string& s) {
  Rect r;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream is(s);
  is >> r.x_min >> c1 >> r.y_min >> c2 >> r.x_max >> c3 >> r.y_max;
  if (!is || c1 != ',' || c2 != ',' || c3 != ',' || !(r.x_max > r.x_min && r.y_max > r.y_min)) {
    throw ConfigError("bounds must be xmin,ymin,xmax,ymax");
  }
  return r;
}

struct ReachArgs {
  std::string chain = "planar4", failure = "none", out, bounds = "-0.6,0,0.6,0.8";
  int k = 10;
  double eps = -1.0, cell = 0.02;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

int cmd_reach(const ReachArgs& a) {
  const NamedChain chain = load_chain(a.chain);
  const FailureCase failure = load_failure(a.failure);
  check_failure(failure, chain.chain);
  const WorkspaceGrid grid{parse_bounds(a.bounds), a.cell};
  ReachParams rp;
  rp.attempts = a.k;
  rp.epsilon = a.eps;
  rp.seed = a.seed;
  rp.jobs = a.jobs;
  const auto t0 = std::chrono::steady_clock::now();
  const ReachabilityMap map = generate_reachability_map(chain.chain, failure.spec, grid, rp);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // Map for the healthy arm under the same settings, the datum for area change.
  const ReachabilityMap datum =
      failure.spec.locks.empty() ? map : generate_reachability_map(chain.chain, {}, grid, rp);

  fs::create_directories(a.out);
  const fs::path out(a.out);
  {
    std::ofstream os(out / "map.csv");
    write_map_csv(os, map, chain.chain,
                  {{"chain", to_json(chain).dump()}, {"failure", to_json(failure).dump()}});
  }
  {
    std::ofstream os(out / "map.pgm", std::ios::binary);
    write_map_pgm(os, map);
  }
  const double pm = area(map, AreaFilter::PrehensileOnly), all = area(map, AreaFilter::All);
  const double d_pm = area(datum, AreaFilter::PrehensileOnly), d_all = area(datum, AreaFilter::All);
  auto change = [](double d, double v) { return d > 0.0 ? std::to_string(area_change_percent_rounded(d, v)) : ""; };
  std::ofstream summary(out / "summary.csv");
  summary << "# lmj reach summary v1 cell=" << num(a.cell) << " k=" << a.k << " seed=" << a.seed << "\n"
          << "failure,pm_area,all_area,datum_pm_area,datum_all_area,pm_change_percent,all_change_percent,"
             "pm_cells,npm_cells,unreachable_cells\n"
          << failure.name << ',' << num(pm) << ',' << num(all) << ',' << num(d_pm) << ',' << num(d_all) << ','
          << change(d_pm, pm) << ',' << change(d_all, all) << ',' << map.count(ReachStatus::Prehensile) << ','
          << map.count(ReachStatus::Nonprehensile) << ',' << map.count(ReachStatus::Unreachable) << '\n';
  std::cout << "failure " << failure.name << ": PM area " << num(pm) << " m^2, PM+NPM area " << num(all)
            << " m^2 (healthy " << num(d_pm) << " / " << num(d_all) << "), " << num(secs) << " s\n";
  if (map.reachable_count() == 0) {
    std::cerr << "error: no reachable cells\n";
    return kEmpty;
  }
  return kOk;
}

struct EdgesArgs {
  std::string map, out;
  std::size_t n = 8000;
  std::uint64_t seed = 1;
  double dt = 0.01;
  unsigned jobs = 1;
  bool text = false;
};

int cmd_edges(const EdgesArgs& a) {
  const std::string text = read_file(a.map);
  std::istringstream meta_stream(text);
  const auto meta = read_map_metadata(meta_stream);
  if (!meta.contains("chain") || !meta.contains("failure")) {
    throw ConfigError(a.map + " lacks chain/failure metadata; regenerate it with 'lmj reach'");
  }
  const NamedChain chain = chain_from_json(parse_json_text(meta.at("chain")));
  const FailureCase failure = failure_from_json(parse_json_text(meta.at("failure")));
  std::istringstream body(text);
  const ReachabilityMap map = read_map_csv(body, chain.chain, failure.spec);

  EdgeSamplingParams ep;
  ep.samples = a.n;
  ep.seed = a.seed;
  ep.dt = a.dt;
  ep.jobs = a.jobs;
  GenerationStats stats;
  EdgeBundle bundle;
  try {
    bundle = generate_edges(chain.chain, failure.spec, map, {}, ep, &stats);
  } catch (const EmptyReachableSet& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEmpty;
  }
  if (a.text) {
    std::ofstream os(a.out);
    os << bundle_to_text(bundle);
  } else {
    save_bundle(a.out, bundle);
  }
  std::ofstream st(a.out + ".stats.csv");
  st << "# lmj edge stats v1\nkey,value\n"
     << "attempts," << stats.attempts << "\naccepted," << stats.accepted << "\nacceptance_rate,"
     << num(stats.acceptance_rate()) << "\nik_failures," << stats.ik_failures << '\n';
  for (const auto& [kind, count] : stats.rejections) st << "reject_" << to_string(kind) << ',' << count << '\n';
  std::cout << "edges: " << stats.accepted << " of " << stats.attempts << " accepted ("
            << num(stats.acceptance_rate()) << "), ik failures " << stats.ik_failures;
  for (const auto& [kind, count] : stats.rejections) std::cout << ", " << to_string(kind) << ' ' << count;
  std::cout << "\nbundle hash " << std::hex << bundle_hash(bundle) << std::dec << '\n';
  return kOk;
}

struct PlanArgs {
  std::string scenario, failure, bundle, asm_name = "greedy";
  std::uint64_t seed = 1;
  std::size_t max_actions = 25, subset = 20;
  double sigma_mu = 0.2, sigma_theta_deg = 3.0;
  bool log_actions = true;
};

int cmd_plan(const PlanArgs& a) {
  const ScenarioSpec sc = load_scenario(a.scenario);
  const NamedChain chain = load_chain(sc.chain);
  const FailureCase failure = load_failure(a.failure);
  check_failure(failure, chain.chain);
  AsmMode mode{parse_asm(a.asm_name), a.subset};
  mode.validate();
  EdgeBundle bundle;
  try {
    bundle = load_bundle(a.bundle);
  } catch (const BundleFormatError& e) {
    throw ConfigError(a.bundle + ": " + e.what());
  }
  switch (check_provenance(bundle, chain.chain, failure.spec)) {
    case ProvenanceCheck::ChainMismatch:
      std::cerr << "error: bundle was generated for a different chain\n";
      return kMismatch;
    case ProvenanceCheck::FailureMismatch:
      std::cerr << "warning: bundle was generated for a different failure than " << failure.name << '\n';
      break;
    case ProvenanceCheck::Match: break;
  }
  const Environment real = perturb(sc.env, a.sigma_mu, derive_seed(a.seed, "world"), a.sigma_theta_deg * kPi / 180.0);
  PlanningContext ctx{chain.chain, bundle, {}};
  PlannerParams pp{mode, a.max_actions, 2.0};
  const TrialResult r = plan_and_execute(real, sc.env, ctx, pp, derive_seed(a.seed, "plan"));

  std::cout << "# planning_time_s " << num(r.planning_time) << " (wall clock)\n";
  std::cout << "scenario,failure,asm,seed,success,actions,execution_time,simulations,final_distance\n"
            << sc.name << ',' << failure.name << ',' << to_string(mode.kind) << ',' << a.seed << ','
            << (r.success ? 1 : 0) << ',' << r.actions << ',' << num(r.execution_time) << ',' << r.simulations << ','
            << num(r.final_distance) << '\n';
  if (a.log_actions) {
    std::cout << "action,edge,simulated_score,dx,dy,predicted_x,predicted_y,realized_x,realized_y,prediction_exact,"
                 "fallback,candidates,distance_after\n";
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      const ActionRecord& l = r.log[i];
      std::cout << i << ',' << l.edge_id << ',' << num(l.simulated_score) << ',' << num(l.realized_displacement.x())
                << ',' << num(l.realized_displacement.y()) << ',' << num(l.predicted_target.x) << ','
                << num(l.predicted_target.y) << ',' << num(l.realized_target.x) << ',' << num(l.realized_target.y)
                << ',' << (l.prediction_exact ? 1 : 0) << ',' << (l.fallback ? 1 : 0) << ',' << l.candidates << ','
                << num(l.distance_after) << '\n';
    }
  }
  return r.success ? kOk : kTaskFailed;
}

struct BenchArgs {
  std::string suite = "default", out;
  std::size_t trials = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned jobs = 1;
};

int cmd_bench(const BenchArgs& a) {
  SuiteSpec suite = load_suite(a.suite);
  if (a.trials > 0) suite.trials = a.trials;
  if (a.samples > 0) suite.edges.samples = a.samples;
  if (a.seed_set) suite.seed = a.seed;
  BenchOptions opts;
  opts.jobs = a.jobs;
  opts.log = [](const std::string& m) { std::cerr << m << '\n'; };
  const BenchReport report = run_bench(suite, opts);
  write_bench_report(report, a.out);
  std::cout << "scenario,failure,asm,success_rate,mean_actions_censored\n";
  for (const auto& c : report.cells) {
    std::cout << c.scenario << ',' << c.failure << ',' << c.asm_name << ',' << num(c.success_rate()) << ','
              << num(c.mean_actions_censored) << '\n';
  }
  return kOk;
}

int cmd_configs(const std::string& out) {
  for (const char* kind : {"chains", "failures", "scenarios", "suites"}) fs::create_directories(fs::path(out) / kind);
  for (const auto& n : builtin_chain_names()) write_json_file(out + "/chains/" + n + ".json", to_json(*builtin_chain(n)));
  for (const auto& n : builtin_failure_names()) {
    write_json_file(out + "/failures/" + n + ".json", to_json(*builtin_failure(n)));
  }
  for (const auto& n : builtin_scenario_names()) {
    write_json_file(out + "/scenarios/" + n + ".json", to_json(*builtin_scenario(n)));
  }
  for (const auto& n : builtin_suite_names()) write_json_file(out + "/suites/" + n + ".json", to_json(*builtin_suite(n)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planning with locked-joint arms: reachability, edge bundles and action selection"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;

  ReachArgs ra;
  auto* reach = app.add_subcommand("reach", "Classify workspace cells as graspable, pokeable or unreachable");
  reach->add_option("--chain", ra.chain, "chain config name or file")->capture_default_str();
  reach->add_option("--failure", ra.failure, "failure config name or file")->capture_default_str();
  reach->add_option("--out", ra.out, "output directory")->required();
  reach->add_option("--k", ra.k, "IK attempts per cell")->capture_default_str();
  reach->add_option("--eps", ra.eps, "perturbation radius (default cell/2)");
  reach->add_option("--cell", ra.cell, "cell size [m]")->capture_default_str();
  reach->add_option("--bounds", ra.bounds, "workspace xmin,ymin,xmax,ymax")->capture_default_str();
  reach->add_option("--seed", seed, "master seed")->capture_default_str();
  reach->add_option("--jobs", ra.jobs, "worker threads")->capture_default_str();

  EdgesArgs ea;
  auto* edges = app.add_subcommand("edges", "Sample an edge bundle over a reachability map");
  edges->add_option("--map", ea.map, "map.csv written by 'reach'")->required();
  edges->add_option("--n", ea.n, "sampling attempts")->capture_default_str();
  edges->add_option("--out", ea.out, "bundle file")->required();
  edges->add_option("--seed", seed, "master seed")->capture_default_str();
  edges->add_option("--dt", ea.dt, "integration step [s]")->capture_default_str();
  edges->add_option("--jobs", ea.jobs, "worker threads")->capture_default_str();
  edges->add_flag("--text", ea.text, "write the JSON form instead of binary");

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "Run one trial on a perturbed scene");
  plan->add_option("--scenario", pa.scenario, "scenario config name or file")->required();
  plan->add_option("--failure", pa.failure, "failure config name or file")->required();
  plan->add_option("--bundle", pa.bundle, "edge bundle file")->required();
  plan->add_option("--asm", pa.asm_name, "random, lazy or greedy")
      ->check(CLI::IsMember({"random", "lazy", "greedy"}))
      ->capture_default_str();
  plan->add_option("--subset", pa.subset, "greedy subset size")->capture_default_str();
  plan->add_option("--seed", seed, "master seed")->capture_default_str();
  plan->add_option("--max-actions", pa.max_actions, "action budget")->capture_default_str();
  plan->add_option("--sigma-mu", pa.sigma_mu, "lognormal friction spread")->capture_default_str();
  plan->add_option("--sigma-theta", pa.sigma_theta_deg, "contact normal noise [deg]")->capture_default_str();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run a suite of seeded trials");
  bench->add_option("--suite", ba.suite, "suite config name or file")->capture_default_str();
  bench->add_option("--trials", ba.trials, "trials per cell (overrides the suite)");
  bench->add_option("--samples", ba.samples, "edge sampling attempts per failure (overrides the suite)");
  bench->add_option("--out", ba.out, "output directory")->required();
  auto* bench_seed = bench->add_option("--seed", ba.seed, "master seed (overrides the suite)");
  bench->add_option("--jobs", ba.jobs, "worker threads")->capture_default_str();

  std::string configs_out;
  auto* configs = app.add_subcommand("configs", "Write the built-in configs as JSON files");
  configs->add_option("--out", configs_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  try {
    if (*reach) {
      ra.seed = seed;
      return cmd_reach(ra);
    }
    if (*edges) {
      ea.seed = seed;
      return cmd_edges(ea);
    }
    if (*plan) {
      pa.seed = seed;
      return cmd_plan(pa);
    }
    if (*bench) {
      ba.seed_set = bench_seed->count() > 0;
      return cmd_bench(ba);
    }
    if (*configs) return cmd_configs(configs_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const BundleFormatError& e) {
    std::cerr << "bundle error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
