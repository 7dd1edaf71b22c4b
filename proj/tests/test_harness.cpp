#include "support.hpp"

#include "lmj/bench.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lmj;
using namespace lmj::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lmj_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LMJ_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SuiteSpec tiny_suite() {
  SuiteSpec s;
  s.name = "tiny";
  s.scenarios = {"clutter-3", "tunnel"};
  s.failures = {"fc1"};
  s.asms = {{AsmKind::Random, 20}, {AsmKind::Greedy, 5}};
  s.trials = 3;
  s.max_actions = 6;
  s.reach.cell = 0.05;
  s.edges.samples = 400;
  return s;
}

TrialRecord record(bool success, std::size_t actions, double exec, std::size_t sims, double dist) {
  TrialRecord r;
  r.result.success = success;
  r.result.actions = actions;
  r.result.execution_time = exec;
  r.result.simulations = sims;
  r.result.final_distance = dist;
  return r;
}

}  // namespace

TEST_CASE("built-in configs survive a JSON round trip") {
  for (const auto& name : builtin_chain_names()) {
    const NamedChain c = *builtin_chain(name);
    const NamedChain back = chain_from_json(to_json(c));
    CHECK(back.name == c.name);
    CHECK(back.chain == c.chain);
    CHECK(to_json(back) == to_json(c));
  }
  for (const auto& name : builtin_failure_names()) {
    const FailureCase f = *builtin_failure(name);
    const FailureCase back = failure_from_json(to_json(f));
    CHECK(back.spec == f.spec);
    CHECK(back.notes == f.notes);
  }
  for (const auto& name : builtin_scenario_names()) {
    const ScenarioSpec s = *builtin_scenario(name);
    const ScenarioSpec back = scenario_from_json(parse_json_text(to_json(s).dump(2)));
    CHECK(back.name == s.name);
    CHECK(back.chain == s.chain);
    CHECK(back.env == s.env);
  }
  for (const auto& name : builtin_suite_names()) {
    const SuiteSpec s = *builtin_suite(name);
    const SuiteSpec back = suite_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK(back.trials == s.trials);
    CHECK(back.sim == s.sim);
  }
}

TEST_CASE("shipped config files match the built-ins") {
  const fs::path dir = fs::path(LMJ_SOURCE_DIR) / "configs";
  REQUIRE(fs::is_directory(dir));
  int files = 0;
  for (const auto& name : builtin_chain_names()) {
    const Json j = read_json_file((dir / "chains" / (name + ".json")).string());
    CHECK(chain_from_json(j).chain == builtin_chain(name)->chain);
    CHECK(to_json(chain_from_json(j)) == j);
    ++files;
  }
  for (const auto& name : builtin_failure_names()) {
    const Json j = read_json_file((dir / "failures" / (name + ".json")).string());
    CHECK(failure_from_json(j).spec == builtin_failure(name)->spec);
    CHECK(to_json(failure_from_json(j)) == j);
    ++files;
  }
  for (const auto& name : builtin_scenario_names()) {
    const Json j = read_json_file((dir / "scenarios" / (name + ".json")).string());
    CHECK(scenario_from_json(j).env == builtin_scenario(name)->env);
    CHECK(to_json(scenario_from_json(j)) == j);
    ++files;
  }
  for (const auto& name : builtin_suite_names()) {
    const Json j = read_json_file((dir / "suites" / (name + ".json")).string());
    CHECK(to_json(suite_from_json(j)) == to_json(*builtin_suite(name)));
    ++files;
  }
  CHECK(files == 9);
}

TEST_CASE("config lookup order: file, config directory, built-in") {
  const fs::path dir = scratch("configs");
  ScenarioSpec s = *builtin_scenario("clutter-3");
  s.notes = "from the config directory";
  fs::create_directories(dir / "scenarios");
  write_json_file((dir / "scenarios" / "clutter-3.json").string(), to_json(s));
  s.notes = "from a path";
  write_json_file((dir / "direct.json").string(), to_json(s));

  CHECK(load_scenario((dir / "direct.json").string()).notes == "from a path");
  ::setenv("LMJ_CONFIG_DIR", dir.c_str(), 1);
  CHECK(load_scenario("clutter-3").notes == "from the config directory");
  CHECK(load_scenario("tunnel").env == builtin_scenario("tunnel")->env);
  ::unsetenv("LMJ_CONFIG_DIR");
  CHECK(load_scenario("clutter-3").notes == builtin_scenario("clutter-3")->notes);
  CHECK_THROWS_AS(load_scenario("no-such-scene"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("malformed configs raise config errors") {
  CHECK_THROWS_AS(parse_json_text("{ not json"), ConfigError);
  Json f = to_json(*builtin_failure("fc1"));
  f["locks"][0]["joint"] = "one";
  CHECK_THROWS_AS(failure_from_json(f), ConfigError);
  Json s = to_json(*builtin_scenario("clutter-3"));
  s["objects"][0]["role"] = "floating";
  CHECK_THROWS_AS(scenario_from_json(s), ConfigError);
  Json q = to_json(*builtin_suite("quick"));
  q.erase("trials");
  CHECK_NOTHROW(suite_from_json(q));  // missing keys take defaults
  q["asms"] = Json::array({Json{{"mode", "clever"}}});
  CHECK_THROWS_AS(suite_from_json(q), ConfigError);
}

TEST_CASE("cell summary arithmetic") {
  const std::vector<TrialRecord> recs = {record(true, 2, 10.0, 40, 0.0), record(true, 4, 20.0, 80, 0.0),
                                         record(false, 6, 30.0, 120, 0.3)};
  std::vector<const TrialRecord*> ptrs;
  for (const auto& r : recs) ptrs.push_back(&r);
  const CellSummary c = summarize(ptrs, 25);
  CHECK(c.trials == 3);
  CHECK(c.successes == 2);
  CHECK(c.success_rate() == doctest::Approx(2.0 / 3.0));
  CHECK(c.mean_actions == doctest::Approx(4.0));
  CHECK(c.sd_actions == doctest::Approx(2.0));
  CHECK(c.mean_actions_censored == doctest::Approx((2.0 + 4.0 + 25.0) / 3.0));
  CHECK(c.mean_execution_time == doctest::Approx(20.0));
  CHECK(c.mean_simulations == doctest::Approx(80.0));
  CHECK(c.mean_final_distance == doctest::Approx(0.1));
  REQUIRE(c.histogram.size() == 26);
  CHECK(c.histogram[2] == 1);
  CHECK(c.histogram[4] == 1);
  CHECK(c.histogram[6] == 1);
  CHECK(c.errors == 0);
  const CellSummary empty = summarize({}, 25);
  CHECK(empty.trials == 0);
  CHECK(empty.success_rate() == 0.0);
}

TEST_CASE("bench reports do not depend on the job count") {
  const SuiteSpec suite = tiny_suite();
  const BenchReport a = run_bench(suite, {1, {}});
  const BenchReport b = run_bench(suite, {2, {}});
  CHECK(a.cells.size() == 4);
  CHECK(a.trials.size() == 12);
  CHECK(a.map_hashes == b.map_hashes);
  CHECK(a.bundle_hashes == b.bundle_hashes);
  const fs::path da = scratch("bench_a"), db = scratch("bench_b");
  write_bench_report(a, da.string());
  write_bench_report(b, db.string());
  for (const char* f : {"report.csv", "histograms.csv", "trials.csv", "areas.csv", "artifacts.csv"}) {
    CHECK_MESSAGE(slurp(da / f) == slurp(db / f), f);
  }
  CHECK(fs::exists(da / "timing.csv"));
  // datum row plus fc1
  REQUIRE(a.areas.size() == 2);
  CHECK(a.areas[0].failure == "none");
  CHECK(a.areas[0].all_change == 0.0);
  CHECK(a.areas[1].pm_area < a.areas[0].pm_area);
  for (const auto& c : a.cells) CHECK(c.errors == 0);
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST_CASE("CLI exit codes and outputs") {
  const fs::path dir = scratch("cli");
  const std::string d = dir.string();

  CHECK(run_cli("") == 2);
  CHECK(run_cli("reach --out " + d + "/x --failure no-such-failure") == 2);
  CHECK(run_cli("reach --out " + d + "/x --bounds 1,2") == 2);
  CHECK(run_cli("reach --out " + d + "/far --bounds 5,5,6,6 --cell 0.1") == 3);

  REQUIRE(run_cli("reach --out " + d + "/map --cell 0.05 --seed 3") == 0);
  REQUIRE(fs::exists(dir / "map" / "map.csv"));
  REQUIRE(fs::exists(dir / "map" / "map.pgm"));
  REQUIRE(fs::exists(dir / "map" / "summary.csv"));
  REQUIRE(run_cli("reach --out " + d + "/map2 --cell 0.05 --seed 3 --jobs 2") == 0);
  CHECK(slurp(dir / "map" / "map.pgm") == slurp(dir / "map2" / "map.pgm"));
  CHECK(slurp(dir / "map" / "map.csv") == slurp(dir / "map2" / "map.csv"));

  REQUIRE(run_cli("edges --map " + d + "/map/map.csv --n 0 --out " + d + "/empty.ebnd") == 0);
  CHECK(load_bundle((dir / "empty.ebnd").string()).edges.empty());
  REQUIRE(run_cli("edges --map " + d + "/map/map.csv --n 400 --out " + d + "/b.ebnd") == 0);
  REQUIRE(run_cli("edges --map " + d + "/map/map.csv --n 400 --out " + d + "/b2.ebnd --jobs 2") == 0);
  CHECK(slurp(dir / "b.ebnd") == slurp(dir / "b2.ebnd"));
  CHECK(fs::exists(dir / "b.ebnd.stats.csv"));
  CHECK(run_cli("edges --map " + d + "/missing.csv --out " + d + "/c.ebnd") == 2);

  ScenarioSpec s = *builtin_scenario("clutter-3");
  s.env.objects[s.env.target_index()].pose = s.env.goal.pose;
  write_json_file((dir / "solved.json").string(), to_json(s));
  CHECK(run_cli("plan --scenario " + d + "/solved.json --failure none --bundle " + d + "/b.ebnd") == 0);
  CHECK(run_cli("plan --scenario clutter-3 --failure none --bundle " + d + "/b.ebnd --max-actions 0") == 1);
  CHECK(run_cli("plan --scenario clutter-3 --failure none --bundle " + d + "/missing.ebnd") != 0);
  CHECK(run_cli("plan --scenario clutter-3 --failure none --bundle " + d + "/b.ebnd --asm clever") == 2);

  // a bundle built for another arm is refused
  NamedChain other = *builtin_chain("planar4");
  other.name = "stretched";
  other.chain.link_lengths[0] = 0.4;
  write_json_file((dir / "other.json").string(), to_json(other));
  REQUIRE(run_cli("reach --chain " + d + "/other.json --out " + d + "/omap --cell 0.1") == 0);
  REQUIRE(run_cli("edges --map " + d + "/omap/map.csv --n 100 --out " + d + "/o.ebnd") == 0);
  CHECK(run_cli("plan --scenario clutter-3 --failure none --bundle " + d + "/o.ebnd") == 4);

  SuiteSpec one = tiny_suite();
  one.scenarios = {"clutter-3"};
  one.asms = {{AsmKind::Greedy, 5}};
  one.trials = 1;
  write_json_file((dir / "one.json").string(), to_json(one));
  REQUIRE(run_cli("bench --suite " + d + "/one.json --out " + d + "/bench") == 0);
  std::istringstream report(slurp(dir / "bench" / "report.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(report, line)) {
    if (!line.empty() && line[0] != '#' && line.rfind("scenario,", 0) != 0) ++rows;
  }
  CHECK(rows == 1);
  fs::remove_all(dir);
}
