#pragma once

#include "lmj/dynamics.hpp"
#include "lmj/reachability.hpp"

#include <iosfwd>
#include <map>

namespace lmj {

enum class EdgeMode : std::uint8_t { Nonprehensile = 0, Prehensile = 1 };

/// One validated rollout of the arm under a constant task-velocity command.
struct Edge {
  std::uint32_t id = 0;
  JointConfig start_q;
  ControlSample control;
  std::vector<TraceEntry> trace;
  std::vector<Vec2> sweep;  // active point position per trace entry
  std::uint32_t point = 0;  // interaction point index
  EdgeMode mode = EdgeMode::Nonprehensile;
  bool valid = true;

  double duration() const { return control.dt * static_cast<double>(trace.size() - 1); }
};

struct Provenance {
  std::uint64_t chain_hash = 0;
  std::uint64_t failure_hash = 0;
  std::uint64_t map_hash = 0;
  std::uint64_t attempts = 0;
  std::uint64_t seed = 0;
  double dt = 0.01;
  double contact_radius = 0.01;
  Rect bounds;       // workspace the sweeps are confined to
  double cell = 0.02;  // spatial index resolution

  bool operator==(const Provenance&) const = default;
};

/// Uniform grid over sweep segments. Each cell lists the edges with a
/// segment whose bounding box touches the cell, so a candidate scan over
/// the cells covering a query box is exact after the final shape test.
class SweepIndex {
 public:
  SweepIndex() = default;
  SweepIndex(const std::vector<Edge>& edges, double cell);

  /// Sorted, de-duplicated ids of edges whose sweep passes within `inflate` of f.
  std::vector<std::uint32_t> query(const std::vector<Edge>& edges, const Footprint& f, double inflate) const;

  std::size_t cell_count() const { return cells_.size(); }

 private:
  double cell_ = 0.02;
  double x0_ = 0.0, y0_ = 0.0;
  long nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;  // edge positions in the bundle
};

struct EdgeBundle {
  std::vector<Edge> edges;
  SweepIndex index;
  Provenance provenance;
  std::uint32_t dof = 0;

  void rebuild_index() { index = SweepIndex(edges, provenance.cell); }
  const Edge& edge(std::uint32_t id) const;
};

struct EdgeSamplingParams {
  std::size_t samples = 1000;  // n
  double dt = 0.01;
  double duration_min = 0.2;
  double duration_max = 1.0;
  double speed_min = 0.05;
  double speed_max = 0.5;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  DynamicsLimits limits;
  IkOptions ik;
};

struct GenerationStats {
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  std::size_t ik_failures = 0;
  std::map<LimitKind, std::size_t> rejections;

  double acceptance_rate() const {
    return attempts == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempts);
  }
};

class EmptyReachableSet : public Error {
 public:
  EmptyReachableSet() : Error("reachability map has no reachable cells") {}
};

std::uint64_t chain_hash(const ChainModel& chain);
std::uint64_t failure_hash(const FailureSpec& failure);

/// Monte-Carlo edge generation over the reachable cells of `map`.
EdgeBundle generate_edges(const ChainModel& chain, const FailureSpec& failure, const ReachabilityMap& map,
                          const std::vector<Footprint>& static_obstacles, const EdgeSamplingParams& params,
                          GenerationStats* stats = nullptr);

std::vector<std::uint32_t> edges_intersecting(const EdgeBundle& bundle, const Footprint& footprint);
/// Linear scan over every sweep; reference for the index.
std::vector<std::uint32_t> edges_intersecting_brute_force(const EdgeBundle& bundle, const Footprint& footprint);

/// Re-runs each trace state through the limit, collision and workspace checks.
bool revalidate_edge(const ChainModel& chain, const FailureSpec& failure, const Edge& edge,
                     const DynamicsLimits& limits, const std::vector<Footprint>& static_obstacles,
                     const Rect& bounds);

enum class ProvenanceCheck { Match, FailureMismatch, ChainMismatch };
ProvenanceCheck check_provenance(const EdgeBundle& bundle, const ChainModel& chain, const FailureSpec& failure);

inline constexpr std::uint16_t kBundleVersion = 1;

class BundleFormatError : public Error {
 public:
  using Error::Error;
};

/// Binary "EBND" format; see docs/bundle_format.md.
void save_bundle(std::ostream& os, const EdgeBundle& bundle);
EdgeBundle load_bundle(std::istream& is);
void save_bundle(const std::string& path, const EdgeBundle& bundle);
EdgeBundle load_bundle(const std::string& path);

/// Lossless JSON mirror of the binary format.
std::string bundle_to_text(const EdgeBundle& bundle);
EdgeBundle bundle_from_text(const std::string& text);

/// FNV-1a over the binary encoding.
std::uint64_t bundle_hash(const EdgeBundle& bundle);

}  // namespace lmj
