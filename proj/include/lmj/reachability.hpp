#pragma once

#include "lmj/kinematics.hpp"

#include <iosfwd>
#include <map>

namespace lmj {

/// Uniform square tiling of an axis-aligned workspace rectangle.
struct WorkspaceGrid {
  Rect bounds;
  double cell = 0.02;

  std::size_t nx() const;
  std::size_t ny() const;
  std::size_t size() const { return nx() * ny(); }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx() + ix; }
  Vec2 center(std::size_t ix, std::size_t iy) const;
  Vec2 center(std::size_t idx) const { return center(idx % nx(), idx / nx()); }
  /// Cell containing p, clamped to the grid.
  std::size_t locate(const Vec2& p) const;
  bool in_cell(const Vec2& p, std::size_t idx) const;
  void validate() const;

  bool operator==(const WorkspaceGrid&) const = default;
};

enum class ReachStatus : std::uint8_t { Unreachable = 0, Nonprehensile = 1, Prehensile = 2 };

std::string_view to_string(ReachStatus s);
ReachStatus parse_reach_status(std::string_view s);

struct ReachCell {
  ReachStatus status = ReachStatus::Unreachable;
  int point = -1;  // interaction point index; set iff Nonprehensile
  int attempts_used = 0;

  bool reachable() const { return status != ReachStatus::Unreachable; }
  bool operator==(const ReachCell&) const = default;
};

struct ReachParams {
  int attempts = 10;       // k
  double epsilon = -1.0;   // perturbation radius; negative selects cell/2
  std::uint64_t seed = 0;
  IkOptions ik;
  double window_lo = -kPi / 3.0;
  double window_hi = kPi / 3.0;
  unsigned jobs = 1;
};

struct ReachabilityMap {
  WorkspaceGrid grid;
  std::vector<ReachCell> cells;
  FailureSpec failure;
  std::uint64_t seed = 0;
  int attempts = 10;
  double epsilon = 0.01;

  const ReachCell& at(std::size_t ix, std::size_t iy) const { return cells[grid.index(ix, iy)]; }
  std::size_t count(ReachStatus s) const;
  std::size_t reachable_count() const;
  std::uint64_t hash() const;

  bool operator==(const ReachabilityMap&) const = default;
};

enum class AreaFilter { PrehensileOnly, All };

/// Classifies every cell centre, escalating from prehensile to
/// nonprehensile contact after half of the attempt budget.
ReachabilityMap generate_reachability_map(const ChainModel& chain, const FailureSpec& failure,
                                          const WorkspaceGrid& grid, const ReachParams& params);

/// Evaluates one cell; exposed for tests of the attempt schedule.
ReachCell classify_cell(const ChainModel& chain, const FailureSpec& failure, const WorkspaceGrid& grid,
                        std::size_t idx, const ReachParams& params);

/// One pass of 3x3 majority fill. Reachable cells are never downgraded.
ReachabilityMap smooth(const ReachabilityMap& map);

double area(const ReachabilityMap& map, AreaFilter filter);

/// 100 * (value - datum) / datum. Throws when datum is zero.
double area_change_percent(double datum, double value);
long area_change_percent_rounded(double datum, double value);

/// CSV with `# key: value` metadata lines, then x,y,status,interaction_point,attempts.
void write_map_csv(std::ostream& os, const ReachabilityMap& map, const ChainModel& chain,
                   const std::map<std::string, std::string>& extra = {});
std::map<std::string, std::string> read_map_metadata(std::istream& is);
ReachabilityMap read_map_csv(std::istream& is, const ChainModel& chain, const FailureSpec& failure);

/// Binary PGM (P5): 0 unreachable, 128 nonprehensile, 255 prehensile; top row is max y.
void write_map_pgm(std::ostream& os, const ReachabilityMap& map);

}  // namespace lmj
