#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace lmj;
using namespace lmj::testing;

namespace {

const Rect kTable{-0.6, 0.0, 0.6, 0.8};

const ReachabilityMap& healthy_map() {
  static const ReachabilityMap m = [] {
    ReachParams p;
    p.seed = 1;
    return generate_reachability_map(planar4_chain().chain, {}, {kTable, 0.04}, p);
  }();
  return m;
}

EdgeBundle make_bundle(std::size_t n, std::uint64_t seed, unsigned jobs = 1, GenerationStats* stats = nullptr,
                       const std::vector<Footprint>& statics = {}) {
  EdgeSamplingParams p;
  p.samples = n;
  p.seed = seed;
  p.jobs = jobs;
  return generate_edges(planar4_chain().chain, {}, healthy_map(), statics, p, stats);
}

const EdgeBundle& shared_bundle() {
  static const EdgeBundle b = make_bundle(2000, 5);
  return b;
}

std::string encoded(const EdgeBundle& b) {
  std::ostringstream os;
  save_bundle(os, b);
  return os.str();
}

Edge straight_edge(std::uint32_t id, Vec2 from, Vec2 to, std::size_t steps) {
  Edge e;
  e.id = id;
  e.start_q = VecX::Zero(1);
  e.control = {(to - from) / (0.01 * static_cast<double>(steps)), 0.01 * static_cast<double>(steps), 0.01};
  for (std::size_t k = 0; k <= steps; ++k) {
    e.trace.push_back({VecX::Zero(1), VecX::Zero(1)});
    e.sweep.push_back(from + (to - from) * static_cast<double>(k) / static_cast<double>(steps));
  }
  return e;
}

Footprint disc_at(double x, double y, double r) { return {Disc{r}, {x, y, 0.0}}; }

}  // namespace

TEST_CASE("zero samples give an empty bundle") {
  GenerationStats st;
  const EdgeBundle b = make_bundle(0, 1, 1, &st);
  CHECK(b.edges.empty());
  CHECK(st.attempts == 0);
  CHECK(st.accepted == 0);
  CHECK(st.acceptance_rate() == 0.0);
  CHECK(edges_intersecting(b, disc_at(0.0, 0.4, 0.1)).empty());
  const EdgeBundle back = [&] {
    std::istringstream is(encoded(b));
    return load_bundle(is);
  }();
  CHECK(back.edges.empty());
}

TEST_CASE("an empty reachable set is an error") {
  ReachabilityMap m = healthy_map();
  for (auto& c : m.cells) c = {};
  EdgeSamplingParams p;
  p.samples = 10;
  CHECK_THROWS_AS(generate_edges(planar4_chain().chain, {}, m, {}, p), EmptyReachableSet);
}

TEST_CASE("a fully locked arm yields single-point sweeps") {
  const ChainModel c = unit_two_link();
  const FailureSpec f{{{0, 0.3}, {1, 0.5}}};
  ReachParams rp;
  const ReachabilityMap m = generate_reachability_map(c, f, {{-2.2, -2.2, 2.2, 2.2}, 0.1}, rp);
  EdgeSamplingParams p;
  p.samples = 30;
  const EdgeBundle b = generate_edges(c, f, m, {}, p);
  REQUIRE_FALSE(b.edges.empty());
  for (const Edge& e : b.edges) {
    for (const Vec2& s : e.sweep) CHECK(s == e.sweep.front());
    for (const auto& t : e.trace) CHECK(t.q_dot.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("generation statistics add up and starts lie in reachable cells") {
  GenerationStats st;
  const EdgeBundle b = make_bundle(600, 9, 1, &st);
  std::size_t rejected = 0;
  for (const auto& [k, n] : st.rejections) rejected += n;
  CHECK(st.attempts == 600);
  CHECK(st.accepted == b.edges.size());
  CHECK(st.accepted + st.ik_failures + rejected == st.attempts);
  CHECK(st.acceptance_rate() > 0.2);
  const ReachabilityMap& m = healthy_map();
  const ChainModel c = planar4_chain().chain;
  for (std::size_t i = 0; i < b.edges.size(); ++i) {
    const Edge& e = b.edges[i];
    CHECK(e.id == i);
    CHECK(e.sweep.front() == point_position(c, e.start_q, e.point));
    const ReachCell& cell = m.cells[m.grid.locate(e.sweep.front())];
    CHECK(cell.reachable());
    CHECK(e.duration() >= 0.2 - 1e-9);
    CHECK(e.duration() <= 1.0 + 1e-9);
    if (e.mode == EdgeMode::Prehensile) CHECK(e.point == c.end_effector_index());
  }
}

TEST_CASE("every stored edge re-validates") {
  const EdgeBundle& b = shared_bundle();
  const ChainModel c = planar4_chain().chain;
  REQUIRE(b.edges.size() > 500);
  std::size_t ok = 0;
  for (const Edge& e : b.edges) ok += revalidate_edge(c, {}, e, {}, {}, kTable);
  CHECK(ok == b.edges.size());

  Edge bad = b.edges[3];
  bad.trace[1].q[0] += 1e-6;
  CHECK_FALSE(revalidate_edge(c, {}, bad, {}, {}, kTable));
  bad = b.edges[3];
  bad.sweep.back().x() += 1e-9;
  CHECK_FALSE(revalidate_edge(c, {}, bad, {}, {}, kTable));
}

TEST_CASE("sweeps keep clear of static obstacles") {
  const std::vector<Footprint> statics = {{Box{0.02, 0.39}, {0.0, 0.195, 0.0}}, disc_at(0.3, 0.5, 0.05)};
  const EdgeBundle b = make_bundle(500, 13, 1, nullptr, statics);
  const ChainModel c = planar4_chain().chain;
  REQUIRE_FALSE(b.edges.empty());
  for (const Edge& e : b.edges) {
    CHECK(revalidate_edge(c, {}, e, {}, statics, kTable));
    for (const Vec2& p : e.sweep) {
      for (const auto& s : statics) CHECK(distance_point_shape(p, s) >= c.contact_radius);
    }
  }
}

TEST_CASE("direct hit on a synthetic sweep") {
  EdgeBundle b;
  b.dof = 1;
  b.provenance.cell = 0.05;
  b.edges.push_back(straight_edge(0, {-0.5, 0.0}, {0.5, 0.0}, 50));
  b.edges.push_back(straight_edge(1, {-0.5, 1.0}, {0.5, 1.0}, 50));
  b.rebuild_index();
  CHECK(edges_intersecting(b, disc_at(0.0, 0.0, 0.03)) == std::vector<std::uint32_t>{0});
  CHECK(edges_intersecting(b, disc_at(0.0, 3.0, 0.03)).empty());
  // contact radius counts: the disc edge is 0.035 away
  b.provenance.contact_radius = 0.01;
  CHECK(edges_intersecting(b, disc_at(0.0, 0.065, 0.03)).empty());
  b.provenance.contact_radius = 0.04;
  CHECK(edges_intersecting(b, disc_at(0.0, 0.065, 0.03)) == std::vector<std::uint32_t>{0});
  CHECK(edges_intersecting(b, Footprint{Box{2.0, 1.2}, {0.0, 0.5, 0.0}}) == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("index queries equal a brute-force scan") {
  const EdgeBundle b = make_bundle(400, 17);
  REQUIRE(b.edges.size() >= 150);
  Rng rng(19);
  std::size_t nonempty = 0;
  for (int q = 0; q < 50; ++q) {
    const double x = uniform(rng, -0.6, 0.6), y = uniform(rng, 0.0, 0.8);
    const Footprint f = q % 3 == 0 ? Footprint{Box{uniform(rng, 0.01, 0.2), uniform(rng, 0.01, 0.2)},
                                               {x, y, uniform(rng, -kPi, kPi)}}
                                   : disc_at(x, y, uniform(rng, 0.005, 0.08));
    const auto idx = edges_intersecting(b, f);
    CHECK(idx == edges_intersecting_brute_force(b, f));
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::set<std::uint32_t>(idx.begin(), idx.end()).size() == idx.size());
    nonempty += !idx.empty();
  }
  CHECK(nonempty > 10);
}

TEST_CASE("save, load, save is byte-identical") {
  const EdgeBundle& b = shared_bundle();
  REQUIRE(b.edges.size() >= 1000);
  const std::string first = encoded(b);
  std::istringstream is(first);
  const EdgeBundle back = load_bundle(is);
  CHECK(encoded(back) == first);
  CHECK(bundle_hash(back) == bundle_hash(b));
  CHECK(back.provenance == b.provenance);
  REQUIRE(back.edges.size() == b.edges.size());
  for (std::size_t i = 0; i < b.edges.size(); ++i) {
    const Edge& x = b.edges[i];
    const Edge& y = back.edges[i];
    CHECK(x.id == y.id);
    CHECK(x.point == y.point);
    CHECK(x.mode == y.mode);
    CHECK(x.control.u == y.control.u);
    CHECK(x.control.duration == y.control.duration);
    CHECK(x.start_q == y.start_q);
    CHECK(x.sweep == y.sweep);
    REQUIRE(x.trace.size() == y.trace.size());
    for (std::size_t k = 0; k < x.trace.size(); ++k) {
      CHECK(x.trace[k].q == y.trace[k].q);
      CHECK(x.trace[k].q_dot == y.trace[k].q_dot);
    }
  }
  const Footprint f = disc_at(0.0, 0.4, 0.05);
  CHECK(edges_intersecting(back, f) == edges_intersecting(b, f));

  const auto dir = std::filesystem::temp_directory_path() / "lmj_bundle_test";
  std::filesystem::create_directories(dir);
  save_bundle((dir / "a.ebnd").string(), b);
  save_bundle((dir / "b.ebnd").string(), load_bundle((dir / "a.ebnd").string()));
  std::ifstream fa(dir / "a.ebnd", std::ios::binary), fb(dir / "b.ebnd", std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == first);
  CHECK(sb.str() == first);
  std::filesystem::remove_all(dir);
}

TEST_CASE("text form mirrors the binary form") {
  const EdgeBundle b = make_bundle(100, 23);
  const EdgeBundle back = bundle_from_text(bundle_to_text(b));
  CHECK(encoded(back) == encoded(b));
  CHECK_THROWS_AS(bundle_from_text("{\"format\": \"other\"}"), BundleFormatError);
  CHECK_THROWS_AS(bundle_from_text("not json"), BundleFormatError);
}

TEST_CASE("corrupt files are rejected") {
  const std::string good = encoded(make_bundle(50, 29));
  auto load = [](std::string s) {
    std::istringstream is(s);
    return load_bundle(is);
  };
  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(load(flipped), BundleFormatError);
  CHECK_THROWS_AS(load(good.substr(0, good.size() - 20)), BundleFormatError);
  std::string magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(load(magic), BundleFormatError);
  CHECK_THROWS_AS(load(""), BundleFormatError);
  CHECK_NOTHROW(load(good));
}

TEST_CASE("provenance guards reuse") {
  const EdgeBundle& b = shared_bundle();
  ChainModel c = planar4_chain().chain;
  CHECK(check_provenance(b, c, {}) == ProvenanceCheck::Match);
  CHECK(check_provenance(b, c, builtin_failure("fc1")->spec) == ProvenanceCheck::FailureMismatch);
  c.link_lengths[2] = 0.16;
  CHECK(check_provenance(b, c, {}) == ProvenanceCheck::ChainMismatch);
  CHECK(chain_hash(c) != chain_hash(planar4_chain().chain));
  CHECK(failure_hash({{{1, 0.6}}}) != failure_hash({{{1, 0.61}}}));

  std::istringstream is(encoded(b));
  const EdgeBundle back = load_bundle(is);
  CHECK(check_provenance(back, c, {}) == ProvenanceCheck::ChainMismatch);
  CHECK(back.provenance.map_hash == healthy_map().hash());
}

TEST_CASE("bundle hash is stable across reruns and job counts") {
  const EdgeBundle a = make_bundle(300, 31, 1);
  const EdgeBundle b = make_bundle(300, 31, 1);
  const EdgeBundle c = make_bundle(300, 31, 3);
  CHECK(bundle_hash(a) == bundle_hash(b));
  CHECK(bundle_hash(a) == bundle_hash(c));
  CHECK(bundle_hash(a) != bundle_hash(make_bundle(300, 32, 1)));
}

TEST_CASE("edge lookup by id") {
  const EdgeBundle& b = shared_bundle();
  CHECK(b.edge(7).id == 7);
  CHECK_THROWS_AS(b.edge(static_cast<std::uint32_t>(b.edges.size())), Error);
}

TEST_CASE("two-link sweeps cover most of the map") {
  const ChainModel c = unit_two_link();
  ReachParams rp;
  const ReachabilityMap m = generate_reachability_map(c, {}, {{-2.2, -2.2, 2.2, 2.2}, 0.2}, rp);
  EdgeSamplingParams p;
  p.samples = 1500;
  p.speed_max = 1.0;
  const EdgeBundle b = generate_edges(c, {}, m, {}, p);
  std::set<std::size_t> touched;
  for (const Edge& e : b.edges) {
    for (const Vec2& s : e.sweep) touched.insert(m.grid.locate(s));
  }
  const double coverage = static_cast<double>(touched.size()) / static_cast<double>(m.reachable_count());
  CHECK(coverage >= 0.9);
}
