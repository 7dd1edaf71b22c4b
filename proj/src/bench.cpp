#include "lmj/bench.hpp"

#include "lmj/parallel.hpp"
#include "lmj/scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

namespace lmj {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  return os;
}

}  // namespace

FailureArtifacts build_failure_artifacts(const ChainModel& chain, const FailureCase& failure, const SuiteSpec& suite,
                                         const Rect& workspace, unsigned jobs) {
  FailureArtifacts a;
  a.failure = failure;
  ReachParams rp;
  rp.attempts = suite.reach.attempts;
  rp.epsilon = suite.reach.epsilon;
  rp.seed = derive_seed(suite.seed, "reach:" + failure.name);
  rp.window_lo = suite.sim.window_lo;
  rp.window_hi = suite.sim.window_hi;
  rp.jobs = jobs;
  a.map = generate_reachability_map(chain, failure.spec, {workspace, suite.reach.cell}, rp);

  EdgeSamplingParams ep;
  ep.samples = suite.edges.samples;
  ep.dt = suite.edges.dt;
  ep.seed = derive_seed(suite.seed, "edges:" + failure.name);
  ep.jobs = jobs;
  a.bundle = generate_edges(chain, failure.spec, a.map, {}, ep, &a.stats);
  return a;
}

CellSummary summarize(const std::vector<const TrialRecord*>& trials, std::size_t max_actions) {
  CellSummary c;
  c.histogram.assign(max_actions + 1, 0);
  c.trials = trials.size();
  if (trials.empty()) return c;
  double sum = 0.0, sum2 = 0.0, censored = 0.0;
  for (const TrialRecord* t : trials) {
    const TrialResult& r = t->result;
    const double a = static_cast<double>(r.actions);
    sum += a;
    sum2 += a * a;
    censored += r.success ? a : static_cast<double>(max_actions);
    if (r.success) ++c.successes;
    if (!r.diagnostic.empty()) ++c.errors;
    c.mean_execution_time += r.execution_time;
    c.mean_simulations += static_cast<double>(r.simulations);
    c.mean_final_distance += r.final_distance;
    c.mean_planning_time += r.planning_time;
    ++c.histogram[std::min(r.actions, max_actions)];
  }
  const double n = static_cast<double>(trials.size());
  c.mean_actions = sum / n;
  c.sd_actions = trials.size() > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0))) : 0.0;
  c.mean_actions_censored = censored / n;
  c.mean_execution_time /= n;
  c.mean_simulations /= n;
  c.mean_final_distance /= n;
  c.mean_planning_time /= n;
  return c;
}

BenchReport run_bench(const SuiteSpec& suite, const BenchOptions& opts) {
  auto log = [&](const std::string& msg) {
    if (opts.log) opts.log(msg);
  };
  BenchReport report;
  report.suite = suite;
  const NamedChain chain = load_chain(suite.chain);
  std::vector<ScenarioSpec> scenarios;
  for (const auto& name : suite.scenarios) scenarios.push_back(load_scenario(name));
  const Rect workspace = scenarios.front().env.table_bounds;
  for (const auto& s : scenarios) {
    if (!(s.env.table_bounds == workspace)) throw ConfigError("suite scenarios must share one table");
    if (s.chain != chain.name) throw ConfigError("scenario " + s.name + " expects chain " + s.chain);
  }

  std::vector<FailureArtifacts> artifacts;
  for (const auto& name : suite.failures) {
    log("building map and bundle for " + name);
    artifacts.push_back(build_failure_artifacts(chain.chain, load_failure(name), suite, workspace, opts.jobs));
    const auto& a = artifacts.back();
    report.map_hashes.emplace_back(name, a.map.hash());
    report.bundle_hashes.emplace_back(name, bundle_hash(a.bundle));
    report.generation.emplace_back(name, a.stats);
  }

  // Reachability areas against the datum failure.
  std::optional<ReachabilityMap> datum;
  for (const auto& a : artifacts) {
    if (a.failure.name == suite.datum_failure) datum = a.map;
  }
  if (!datum) {
    const FailureCase f = load_failure(suite.datum_failure);
    ReachParams rp;
    rp.attempts = suite.reach.attempts;
    rp.epsilon = suite.reach.epsilon;
    rp.seed = derive_seed(suite.seed, "reach:" + f.name);
    rp.window_lo = suite.sim.window_lo;
    rp.window_hi = suite.sim.window_hi;
    rp.jobs = opts.jobs;
    log("building datum map for " + f.name);
    datum = generate_reachability_map(chain.chain, f.spec, {workspace, suite.reach.cell}, rp);
  }
  auto area_row = [&](const std::string& name, const ReachabilityMap& m) {
    AreaRow r;
    r.failure = name;
    r.pm_area = area(m, AreaFilter::PrehensileOnly);
    r.all_area = area(m, AreaFilter::All);
    const double d_pm = area(*datum, AreaFilter::PrehensileOnly);
    const double d_all = area(*datum, AreaFilter::All);
    r.has_change = d_pm > 0.0 && d_all > 0.0;
    if (r.has_change) {
      r.pm_change = area_change_percent(d_pm, r.pm_area);
      r.all_change = area_change_percent(d_all, r.all_area);
    }
    return r;
  };
  bool datum_listed = false;
  for (const auto& a : artifacts) datum_listed |= a.failure.name == suite.datum_failure;
  if (!datum_listed) report.areas.push_back(area_row(suite.datum_failure, *datum));
  for (const auto& a : artifacts) report.areas.push_back(area_row(a.failure.name, a.map));

  // Flattened trial list in deterministic key order.
  struct Task {
    std::size_t scenario, failure, asm_idx, trial;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (std::size_t f = 0; f < artifacts.size(); ++f) {
      for (std::size_t a = 0; a < suite.asms.size(); ++a) {
        for (std::size_t t = 0; t < suite.trials; ++t) tasks.push_back({s, f, a, t});
      }
    }
  }
  log("running " + std::to_string(tasks.size()) + " trials");
  report.trials.resize(tasks.size());
  parallel_for(tasks.size(), opts.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const ScenarioSpec& sc = scenarios[task.scenario];
    const FailureArtifacts& fa = artifacts[task.failure];
    const AsmMode& mode = suite.asms[task.asm_idx];
    TrialRecord& rec = report.trials[i];
    rec.scenario = sc.name;
    rec.failure = fa.failure.name;
    rec.asm_name = std::string(to_string(mode.kind));
    rec.trial = task.trial;
    const std::string key = sc.name + "/" + fa.failure.name;
    const std::uint64_t env_seed = derive_seed(derive_seed(suite.seed, "world:" + key), task.trial);
    rec.seed = derive_seed(derive_seed(suite.seed, "plan:" + key + "/" + rec.asm_name), task.trial);
    try {
      const Environment real = perturb(sc.env, suite.sigma_mu, env_seed, suite.sigma_theta);
      PlanningContext ctx{chain.chain, fa.bundle, suite.sim, suite.progress_threshold, suite.obstacle_penalty, 1};
      PlannerParams pp{mode, suite.max_actions, suite.action_overhead};
      rec.result = plan_and_execute(real, sc.env, ctx, pp, rec.seed);
    } catch (const std::exception& e) {
      rec.result = {};
      rec.result.diagnostic = e.what();
    }
  });

  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<const TrialRecord*>> groups;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    groups[{tasks[i].scenario, tasks[i].failure, tasks[i].asm_idx}].push_back(&report.trials[i]);
  }
  for (const auto& [key, recs] : groups) {
    const auto& [s, f, a] = key;
    CellSummary c = summarize(recs, suite.max_actions);
    c.scenario = scenarios[s].name;
    c.failure = artifacts[f].failure.name;
    c.asm_name = std::string(to_string(suite.asms[a].kind));
    c.subset = suite.asms[a].kind == AsmKind::Greedy ? suite.asms[a].greedy_subset_size : 0;
    report.cells.push_back(std::move(c));
  }
  return report;
}

void write_bench_report(const BenchReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);

  auto report_csv = open_out(root / "report.csv");
  report_csv << "# lmj bench report v1 suite=" << report.suite.name << " seed=" << report.suite.seed
             << " trials=" << report.suite.trials << "\n"
             << "scenario,failure,asm,subset,trials,successes,success_rate,mean_actions,sd_actions,"
                "mean_actions_censored,mean_execution_time,mean_simulations,mean_final_distance,errors\n";
  for (const auto& c : report.cells) {
    report_csv << c.scenario << ',' << c.failure << ',' << c.asm_name << ',' << c.subset << ',' << c.trials << ','
               << c.successes << ',' << fmt(c.success_rate()) << ',' << fmt(c.mean_actions) << ','
               << fmt(c.sd_actions) << ',' << fmt(c.mean_actions_censored) << ',' << fmt(c.mean_execution_time)
               << ',' << fmt(c.mean_simulations) << ',' << fmt(c.mean_final_distance) << ',' << c.errors << '\n';
  }

  auto hist = open_out(root / "histograms.csv");
  hist << "# lmj action histogram v1\nscenario,failure,asm,actions,count\n";
  for (const auto& c : report.cells) {
    for (std::size_t a = 0; a < c.histogram.size(); ++a) {
      hist << c.scenario << ',' << c.failure << ',' << c.asm_name << ',' << a << ',' << c.histogram[a] << '\n';
    }
  }

  auto trials = open_out(root / "trials.csv");
  trials << "# lmj trials v1\nscenario,failure,asm,trial,seed,success,actions,execution_time,simulations,"
            "final_distance,diagnostic\n";
  for (const auto& t : report.trials) {
    std::string diag = t.result.diagnostic;
    for (char& ch : diag) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    trials << t.scenario << ',' << t.failure << ',' << t.asm_name << ',' << t.trial << ',' << t.seed << ','
           << (t.result.success ? 1 : 0) << ',' << t.result.actions << ',' << fmt(t.result.execution_time) << ','
           << t.result.simulations << ',' << fmt(t.result.final_distance) << ',' << diag << '\n';
  }

  auto areas = open_out(root / "areas.csv");
  areas << "# lmj reachability areas v1 datum=" << report.suite.datum_failure << " cell=" << report.suite.reach.cell
        << "\nfailure,pm_area,all_area,pm_change_percent,all_change_percent\n";
  for (const auto& r : report.areas) {
    areas << r.failure << ',' << fmt(r.pm_area) << ',' << fmt(r.all_area) << ','
          << (r.has_change ? std::to_string(std::lround(r.pm_change)) : "") << ','
          << (r.has_change ? std::to_string(std::lround(r.all_change)) : "") << '\n';
  }

  auto arts = open_out(root / "artifacts.csv");
  arts << "# lmj artifacts v1\nfailure,map_hash,bundle_hash,edges,attempts,ik_failures,acceptance_rate";
  for (LimitKind k : kAllLimitKinds) arts << ",reject_" << to_string(k);
  arts << '\n';
  for (std::size_t i = 0; i < report.map_hashes.size(); ++i) {
    const GenerationStats& g = report.generation[i].second;
    arts << report.map_hashes[i].first << ',' << hex(report.map_hashes[i].second) << ','
         << hex(report.bundle_hashes[i].second) << ',' << g.accepted << ',' << g.attempts << ',' << g.ik_failures
         << ',' << fmt(g.acceptance_rate());
    for (LimitKind k : kAllLimitKinds) {
      const auto it = g.rejections.find(k);
      arts << ',' << (it == g.rejections.end() ? 0 : it->second);
    }
    arts << '\n';
  }

  auto timing = open_out(root / "timing.csv");
  timing << "# lmj timing v1 (wall clock, not reproducible)\nscenario,failure,asm,mean_planning_time\n";
  for (const auto& c : report.cells) {
    timing << c.scenario << ',' << c.failure << ',' << c.asm_name << ',' << fmt(c.mean_planning_time) << '\n';
  }
}

}  // namespace lmj
