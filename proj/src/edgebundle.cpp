#include "lmj/edgebundle.hpp"

#include "lmj/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace lmj {

static_assert(std::endian::native == std::endian::little, "bundle encoding assumes a little-endian host");

std::uint64_t chain_hash(const ChainModel& chain) {
  Hasher h;
  h.add<std::uint64_t>(chain.dof());
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    h.add(chain.link_lengths[i]);
    h.add(chain.link_masses[i]);
    h.add(chain.link_inertias[i]);
    h.add(chain.joint_limits[i].lo);
    h.add(chain.joint_limits[i].hi);
    h.add(chain.velocity_limits[i]);
    h.add(chain.torque_limits[i]);
    h.add(chain.friction[i].viscous);
    h.add(chain.friction[i].coulomb);
  }
  for (const auto& p : chain.interaction_points) {
    h.add(std::string_view(p.name));
    h.add<std::uint64_t>(p.link);
    h.add(p.offset);
  }
  h.add(chain.base.x);
  h.add(chain.base.y);
  h.add(chain.base.theta);
  h.add(chain.gravity.x());
  h.add(chain.gravity.y());
  h.add(chain.contact_radius);
  return h.value();
}

std::uint64_t failure_hash(const FailureSpec& failure) {
  Hasher h;
  h.add<std::uint64_t>(failure.locks.size());
  for (const auto& [j, a] : failure.locks) {
    h.add<std::uint64_t>(j);
    h.add(a);
  }
  return h.value();
}

const Edge& EdgeBundle::edge(std::uint32_t id) const {
  if (id >= edges.size() || edges[id].id != id) throw Error("unknown edge id " + std::to_string(id));
  return edges[id];
}

namespace {

Rect segment_box(const Vec2& a, const Vec2& b) {
  return {std::min(a.x(), b.x()), std::min(a.y(), b.y()), std::max(a.x(), b.x()), std::max(a.y(), b.y())};
}

template <typename Fn>
void for_each_segment_box(const Edge& e, Fn&& fn) {
  if (e.sweep.size() == 1) {
    fn(segment_box(e.sweep[0], e.sweep[0]));
    return;
  }
  for (std::size_t i = 0; i + 1 < e.sweep.size(); ++i) fn(segment_box(e.sweep[i], e.sweep[i + 1]));
}

}  // namespace

SweepIndex::SweepIndex(const std::vector<Edge>& edges, double cell) : cell_(cell) {
  if (!(cell > 0.0)) throw Error("index cell size must be positive");
  Rect all{1e300, 1e300, -1e300, -1e300};
  for (const auto& e : edges) {
    for (const Vec2& p : e.sweep) {
      all.x_min = std::min(all.x_min, p.x());
      all.y_min = std::min(all.y_min, p.y());
      all.x_max = std::max(all.x_max, p.x());
      all.y_max = std::max(all.y_max, p.y());
    }
  }
  if (all.x_min > all.x_max) return;
  x0_ = all.x_min;
  y0_ = all.y_min;
  nx_ = static_cast<long>(std::floor((all.x_max - x0_) / cell_)) + 1;
  ny_ = static_cast<long>(std::floor((all.y_max - y0_) / cell_)) + 1;
  cells_.resize(static_cast<std::size_t>(nx_ * ny_));
  for (std::size_t pos = 0; pos < edges.size(); ++pos) {
    for_each_segment_box(edges[pos], [&](const Rect& r) {
      const long ix0 = static_cast<long>(std::floor((r.x_min - x0_) / cell_));
      const long ix1 = std::min(nx_ - 1, static_cast<long>(std::floor((r.x_max - x0_) / cell_)));
      const long iy0 = static_cast<long>(std::floor((r.y_min - y0_) / cell_));
      const long iy1 = std::min(ny_ - 1, static_cast<long>(std::floor((r.y_max - y0_) / cell_)));
      for (long iy = iy0; iy <= iy1; ++iy) {
        for (long ix = ix0; ix <= ix1; ++ix) {
          auto& bucket = cells_[static_cast<std::size_t>(iy * nx_ + ix)];
          if (bucket.empty() || bucket.back() != pos) bucket.push_back(static_cast<std::uint32_t>(pos));
        }
      }
    });
  }
}

std::vector<std::uint32_t> SweepIndex::query(const std::vector<Edge>& edges, const Footprint& f,
                                             double inflate) const {
  std::vector<std::uint32_t> out;
  if (cells_.empty()) return out;
  const Rect q = bounding_box(f, inflate);
  const long ix0 = std::max(0L, static_cast<long>(std::floor((q.x_min - x0_) / cell_)));
  const long ix1 = std::min(nx_ - 1, static_cast<long>(std::floor((q.x_max - x0_) / cell_)));
  const long iy0 = std::max(0L, static_cast<long>(std::floor((q.y_min - y0_) / cell_)));
  const long iy1 = std::min(ny_ - 1, static_cast<long>(std::floor((q.y_max - y0_) / cell_)));
  std::vector<std::uint32_t> candidates;
  for (long iy = iy0; iy <= iy1; ++iy) {
    for (long ix = ix0; ix <= ix1; ++ix) {
      const auto& bucket = cells_[static_cast<std::size_t>(iy * nx_ + ix)];
      candidates.insert(candidates.end(), bucket.begin(), bucket.end());
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (const std::uint32_t pos : candidates) {
    if (polyline_hits(edges[pos].sweep, f, inflate)) out.push_back(edges[pos].id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> edges_intersecting(const EdgeBundle& bundle, const Footprint& footprint) {
  return bundle.index.query(bundle.edges, footprint, bundle.provenance.contact_radius);
}

std::vector<std::uint32_t> edges_intersecting_brute_force(const EdgeBundle& bundle, const Footprint& footprint) {
  std::vector<std::uint32_t> out;
  for (const auto& e : bundle.edges) {
    if (polyline_hits(e.sweep, footprint, bundle.provenance.contact_radius)) out.push_back(e.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

PointCheck make_point_check(const std::vector<Footprint>& statics, const Rect& bounds, double contact_radius) {
  return [&statics, bounds, contact_radius](const Vec2& p) -> std::optional<LimitKind> {
    if (!bounds.contains(p)) return LimitKind::WorkspaceBound;
    for (const auto& s : statics) {
      if (distance_point_shape(p, s) < contact_radius) return LimitKind::Collision;
    }
    return std::nullopt;
  };
}

struct AttemptResult {
  std::optional<Edge> edge;
  bool ik_failed = false;
  std::optional<LimitKind> rejection;
};

}  // namespace

EdgeBundle generate_edges(const ChainModel& chain, const FailureSpec& failure, const ReachabilityMap& map,
                          const std::vector<Footprint>& static_obstacles, const EdgeSamplingParams& params,
                          GenerationStats* stats) {
  chain.validate();
  failure.validate(chain);
  if (!(params.dt > 0.0)) throw Error("edge timestep must be positive");
  if (params.duration_min < params.dt || params.duration_min > params.duration_max) {
    throw Error("edge duration range is invalid");
  }
  std::vector<std::size_t> reachable;
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    if (map.cells[i].reachable()) reachable.push_back(i);
  }
  if (reachable.empty()) throw EmptyReachableSet();

  EdgeBundle bundle;
  bundle.dof = static_cast<std::uint32_t>(chain.dof());
  bundle.provenance = {chain_hash(chain), failure_hash(failure), map.hash(), params.samples, params.seed,
                       params.dt,         chain.contact_radius,  map.grid.bounds, map.grid.cell};

  const std::size_t ee = chain.end_effector_index();
  const PointCheck check = make_point_check(static_obstacles, map.grid.bounds, chain.contact_radius);
  std::vector<AttemptResult> results(params.samples);

  parallel_for(params.samples, params.jobs, [&](std::size_t i) {
    Rng rng(derive_seed(params.seed, i));
    const std::size_t cell_idx = reachable[uniform_index(rng, reachable.size())];
    const ReachCell& cell = map.cells[cell_idx];
    const std::size_t point = cell.status == ReachStatus::Nonprehensile ? static_cast<std::size_t>(cell.point) : ee;
    const Vec2 target = map.grid.center(cell_idx);
    const IkSolution ik = solve_ik(chain, failure, target, InteractionMode::nonprehensile(chain.interaction_points[point].name),
                                   rng(), params.ik);
    AttemptResult& r = results[i];
    if (!(ik.position_error <= params.ik.tol_position || map.grid.in_cell(point_position(chain, ik.q, point), cell_idx))) {
      r.ik_failed = true;
      return;
    }
    ControlSample control;
    control.dt = params.dt;
    control.duration = uniform(rng, params.duration_min, params.duration_max);
    const double heading = uniform(rng, -kPi, kPi);
    const double speed = uniform(rng, params.speed_min, params.speed_max);
    control.u = speed * unit(heading);

    Rollout roll = simulate_rollout(chain, failure, ik.q, control, point, params.limits, check);
    if (!roll.valid) {
      r.rejection = roll.rejection;
      return;
    }
    Edge e;
    e.start_q = ik.q;
    e.control = control;
    e.trace = std::move(roll.trace);
    e.sweep = std::move(roll.sweep);
    e.point = static_cast<std::uint32_t>(point);
    e.mode = cell.status == ReachStatus::Prehensile ? EdgeMode::Prehensile : EdgeMode::Nonprehensile;
    r.edge = std::move(e);
  });

  GenerationStats local;
  local.attempts = params.samples;
  for (auto& r : results) {
    if (r.ik_failed) {
      ++local.ik_failures;
    } else if (r.rejection) {
      ++local.rejections[*r.rejection];
    } else if (r.edge) {
      r.edge->id = static_cast<std::uint32_t>(bundle.edges.size());
      bundle.edges.push_back(std::move(*r.edge));
    }
  }
  local.accepted = bundle.edges.size();
  if (stats) *stats = local;
  bundle.rebuild_index();
  return bundle;
}

bool revalidate_edge(const ChainModel& chain, const FailureSpec& failure, const Edge& edge,
                     const DynamicsLimits& limits, const std::vector<Footprint>& static_obstacles, const Rect& bounds) {
  if (edge.trace.empty() || edge.sweep.size() != edge.trace.size()) return false;
  if (edge.trace.front().q != edge.start_q) return false;
  const PointCheck check = make_point_check(static_obstacles, bounds, chain.contact_radius);
  for (std::size_t k = 0; k < edge.trace.size(); ++k) {
    const TraceEntry& t = edge.trace[k];
    if (t.q_dot != resolved_velocity(chain, failure, t.q, edge.control.u, edge.point, limits.pinv_damping)) return false;
    for (const auto& [joint, angle] : failure.locks) {
      if (t.q[joint] != angle || t.q_dot[joint] != 0.0) return false;
    }
    if (evaluate_state(chain, failure, t.q, t.q_dot, edge.point, limits).violated) return false;
    const Vec2 p = point_position(chain, t.q, edge.point);
    if (p != edge.sweep[k] || check(p)) return false;
    if (k + 1 < edge.trace.size() && edge.trace[k + 1].q != euler_step({t.q, t.q_dot}, edge.control.dt).q) {
      return false;
    }
  }
  return true;
}

ProvenanceCheck check_provenance(const EdgeBundle& bundle, const ChainModel& chain, const FailureSpec& failure) {
  if (bundle.provenance.chain_hash != chain_hash(chain)) return ProvenanceCheck::ChainMismatch;
  if (bundle.provenance.failure_hash != failure_hash(failure)) return ProvenanceCheck::FailureMismatch;
  return ProvenanceCheck::Match;
}

// ---------------------------------------------------------------------------
// Binary encoding

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_vec(const VecX& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put(v[i]);
  }
  std::vector<unsigned char>& bytes() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> data) : data_(data) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw BundleFormatError("bundle file is truncated");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  VecX get_vec(std::size_t n) {
    VecX v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = get<double>();
    return v;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> encode(const EdgeBundle& b) {
  Writer w;
  for (char c : std::string_view("EBND")) w.put(c);
  w.put<std::uint16_t>(kBundleVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(b.dof));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(b.edges.size()));
  const Provenance& p = b.provenance;
  w.put(p.chain_hash);
  w.put(p.failure_hash);
  w.put(p.map_hash);
  w.put(p.attempts);
  w.put(p.seed);
  w.put(p.dt);
  w.put(p.contact_radius);
  w.put(p.bounds.x_min);
  w.put(p.bounds.y_min);
  w.put(p.bounds.x_max);
  w.put(p.bounds.y_max);
  w.put(p.cell);
  for (const Edge& e : b.edges) {
    w.put<std::uint32_t>(e.id);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(e.point));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.mode));
    w.put<std::uint8_t>(0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(e.trace.size()));
    w.put(e.control.u.x());
    w.put(e.control.u.y());
    w.put(e.control.duration);
    w.put(e.control.dt);
    w.put_vec(e.start_q);
    for (std::size_t k = 0; k < e.trace.size(); ++k) {
      w.put_vec(e.trace[k].q);
      w.put_vec(e.trace[k].q_dot);
      w.put(e.sweep[k].x());
      w.put(e.sweep[k].y());
    }
  }
  const std::uint64_t checksum = hash_bytes(w.bytes());
  w.put(checksum);
  return std::move(w.bytes());
}

void verify_edges(const EdgeBundle& b) {
  for (std::size_t i = 0; i < b.edges.size(); ++i) {
    const Edge& e = b.edges[i];
    if (e.id != i) throw BundleFormatError("edge ids are not consecutive");
    if (e.trace.empty()) throw BundleFormatError("edge has an empty trace");
    if (e.sweep.size() != e.trace.size()) throw BundleFormatError("sweep length differs from trace length");
    if (e.trace.front().q != e.start_q) throw BundleFormatError("trace does not start at the edge start");
    if (e.control.dt != b.provenance.dt) throw BundleFormatError("edge timestep differs from the bundle's");
    for (std::size_t k = 0; k + 1 < e.trace.size(); ++k) {
      if (e.trace[k + 1].q != euler_step({e.trace[k].q, e.trace[k].q_dot}, e.control.dt).q) {
        throw BundleFormatError("trace violates the Euler step relation");
      }
    }
  }
}

EdgeBundle decode(std::span<const unsigned char> data) {
  if (data.size() < 8) throw BundleFormatError("bundle file is truncated");
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + data.size() - 8, 8);
  Reader r(data.first(data.size() - 8));
  char magic[4];
  for (char& c : magic) c = r.get<char>();
  if (std::string_view(magic, 4) != "EBND") throw BundleFormatError("not an edge bundle (bad magic)");
  const auto version = r.get<std::uint16_t>();
  if (version != kBundleVersion) {
    throw BundleFormatError("unsupported bundle version " + std::to_string(version));
  }
  if (hash_bytes(data.first(data.size() - 8)) != stored) throw BundleFormatError("bundle checksum mismatch");
  EdgeBundle b;
  b.dof = r.get<std::uint16_t>();
  const auto count = r.get<std::uint32_t>();
  Provenance& p = b.provenance;
  p.chain_hash = r.get<std::uint64_t>();
  p.failure_hash = r.get<std::uint64_t>();
  p.map_hash = r.get<std::uint64_t>();
  p.attempts = r.get<std::uint64_t>();
  p.seed = r.get<std::uint64_t>();
  p.dt = r.get<double>();
  p.contact_radius = r.get<double>();
  p.bounds.x_min = r.get<double>();
  p.bounds.y_min = r.get<double>();
  p.bounds.x_max = r.get<double>();
  p.bounds.y_max = r.get<double>();
  p.cell = r.get<double>();
  b.edges.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Edge e;
    e.id = r.get<std::uint32_t>();
    e.point = r.get<std::uint16_t>();
    e.mode = static_cast<EdgeMode>(r.get<std::uint8_t>());
    r.get<std::uint8_t>();
    const auto len = r.get<std::uint32_t>();
    if (static_cast<std::size_t>(len) * (2 * b.dof + 2) * 8 > r.remaining()) {
      throw BundleFormatError("bundle file is truncated");
    }
    e.control.u.x() = r.get<double>();
    e.control.u.y() = r.get<double>();
    e.control.duration = r.get<double>();
    e.control.dt = r.get<double>();
    e.start_q = r.get_vec(b.dof);
    e.trace.resize(len);
    e.sweep.resize(len);
    for (std::uint32_t k = 0; k < len; ++k) {
      e.trace[k].q = r.get_vec(b.dof);
      e.trace[k].q_dot = r.get_vec(b.dof);
      e.sweep[k].x() = r.get<double>();
      e.sweep[k].y() = r.get<double>();
    }
    b.edges.push_back(std::move(e));
  }
  if (r.remaining() != 0) throw BundleFormatError("trailing bytes after the last edge");
  verify_edges(b);
  b.rebuild_index();
  return b;
}

}  // namespace

void save_bundle(std::ostream& os, const EdgeBundle& bundle) {
  const auto bytes = encode(bundle);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

EdgeBundle load_bundle(std::istream& is) {
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode(data);
}

void save_bundle(const std::string& path, const EdgeBundle& bundle) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write bundle to " + path);
  save_bundle(os, bundle);
}

EdgeBundle load_bundle(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open bundle " + path);
  return load_bundle(is);
}

std::uint64_t bundle_hash(const EdgeBundle& bundle) { return hash_bytes(encode(bundle)); }

// ---------------------------------------------------------------------------
// Text encoding

namespace {

nlohmann::json vec_json(const VecX& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VecX json_vec(const nlohmann::json& a, std::size_t n) {
  if (!a.is_array() || a.size() != n) throw BundleFormatError("vector has the wrong length");
  VecX v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

std::string bundle_to_text(const EdgeBundle& b) {
  using nlohmann::json;
  const Provenance& p = b.provenance;
  json doc;
  doc["format"] = "EBND-text";
  doc["version"] = kBundleVersion;
  doc["dof"] = b.dof;
  doc["provenance"] = {{"chain_hash", p.chain_hash}, {"failure_hash", p.failure_hash}, {"map_hash", p.map_hash},
                       {"attempts", p.attempts},     {"seed", p.seed},                 {"dt", p.dt},
                       {"contact_radius", p.contact_radius},
                       {"bounds", {p.bounds.x_min, p.bounds.y_min, p.bounds.x_max, p.bounds.y_max}},
                       {"cell", p.cell}};
  json edges = json::array();
  for (const Edge& e : b.edges) {
    json je;
    je["id"] = e.id;
    je["point"] = e.point;
    je["mode"] = e.mode == EdgeMode::Prehensile ? "pm" : "npm";
    je["control"] = {{"u", {e.control.u.x(), e.control.u.y()}}, {"duration", e.control.duration}, {"dt", e.control.dt}};
    je["start_q"] = vec_json(e.start_q);
    json trace = json::array();
    for (std::size_t k = 0; k < e.trace.size(); ++k) {
      trace.push_back({{"q", vec_json(e.trace[k].q)},
                       {"q_dot", vec_json(e.trace[k].q_dot)},
                       {"point", {e.sweep[k].x(), e.sweep[k].y()}}});
    }
    je["trace"] = std::move(trace);
    edges.push_back(std::move(je));
  }
  doc["edges"] = std::move(edges);
  return doc.dump(1);
}

EdgeBundle bundle_from_text(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw BundleFormatError(std::string("corrupt bundle text: ") + e.what());
  }
  try {
    if (doc.at("format") != "EBND-text") throw BundleFormatError("not an edge bundle text document");
    if (doc.at("version").get<int>() != kBundleVersion) throw BundleFormatError("unsupported bundle version");
    EdgeBundle b;
    b.dof = doc.at("dof").get<std::uint32_t>();
    const json& jp = doc.at("provenance");
    Provenance& p = b.provenance;
    p.chain_hash = jp.at("chain_hash").get<std::uint64_t>();
    p.failure_hash = jp.at("failure_hash").get<std::uint64_t>();
    p.map_hash = jp.at("map_hash").get<std::uint64_t>();
    p.attempts = jp.at("attempts").get<std::uint64_t>();
    p.seed = jp.at("seed").get<std::uint64_t>();
    p.dt = jp.at("dt").get<double>();
    p.contact_radius = jp.at("contact_radius").get<double>();
    const auto& bb = jp.at("bounds");
    p.bounds = {bb.at(0).get<double>(), bb.at(1).get<double>(), bb.at(2).get<double>(), bb.at(3).get<double>()};
    p.cell = jp.at("cell").get<double>();
    for (const json& je : doc.at("edges")) {
      Edge e;
      e.id = je.at("id").get<std::uint32_t>();
      e.point = je.at("point").get<std::uint32_t>();
      e.mode = je.at("mode") == "pm" ? EdgeMode::Prehensile : EdgeMode::Nonprehensile;
      const json& jc = je.at("control");
      e.control.u = {jc.at("u").at(0).get<double>(), jc.at("u").at(1).get<double>()};
      e.control.duration = jc.at("duration").get<double>();
      e.control.dt = jc.at("dt").get<double>();
      e.start_q = json_vec(je.at("start_q"), b.dof);
      for (const json& jt : je.at("trace")) {
        e.trace.push_back({json_vec(jt.at("q"), b.dof), json_vec(jt.at("q_dot"), b.dof)});
        e.sweep.emplace_back(jt.at("point").at(0).get<double>(), jt.at("point").at(1).get<double>());
      }
      b.edges.push_back(std::move(e));
    }
    verify_edges(b);
    b.rebuild_index();
    return b;
  } catch (const json::exception& e) {
    throw BundleFormatError(std::string("corrupt bundle text: ") + e.what());
  }
}

}  // namespace lmj
