#include "lmj/reachability.hpp"

#include "lmj/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace lmj {

namespace {

std::size_t cells_along(double extent, double cell) {
  return static_cast<std::size_t>(std::ceil(extent / cell - 1e-9));
}

}  // namespace

std::size_t WorkspaceGrid::nx() const { return cells_along(bounds.width(), cell); }
std::size_t WorkspaceGrid::ny() const { return cells_along(bounds.height(), cell); }

Vec2 WorkspaceGrid::center(std::size_t ix, std::size_t iy) const {
  return {bounds.x_min + (static_cast<double>(ix) + 0.5) * cell, bounds.y_min + (static_cast<double>(iy) + 0.5) * cell};
}

std::size_t WorkspaceGrid::locate(const Vec2& p) const {
  const auto clampi = [](double v, std::size_t n) {
    const auto i = static_cast<long long>(std::floor(v));
    return static_cast<std::size_t>(std::clamp<long long>(i, 0, static_cast<long long>(n) - 1));
  };
  return index(clampi((p.x() - bounds.x_min) / cell, nx()), clampi((p.y() - bounds.y_min) / cell, ny()));
}

bool WorkspaceGrid::in_cell(const Vec2& p, std::size_t idx) const {
  const Vec2 c = center(idx);
  return std::abs(p.x() - c.x()) <= 0.5 * cell && std::abs(p.y() - c.y()) <= 0.5 * cell;
}

void WorkspaceGrid::validate() const {
  if (!(cell > 0.0)) throw Error("grid cell size must be positive");
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) throw Error("grid bounds are degenerate");
}

std::string_view to_string(ReachStatus s) {
  switch (s) {
    case ReachStatus::Unreachable: return "unreachable";
    case ReachStatus::Nonprehensile: return "npm";
    case ReachStatus::Prehensile: return "pm";
  }
  return "?";
}

ReachStatus parse_reach_status(std::string_view s) {
  if (s == "unreachable") return ReachStatus::Unreachable;
  if (s == "npm") return ReachStatus::Nonprehensile;
  if (s == "pm") return ReachStatus::Prehensile;
  throw Error("unknown reach status '" + std::string(s) + "'");
}

std::size_t ReachabilityMap::count(ReachStatus s) const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [s](const auto& c) { return c.status == s; }));
}

std::size_t ReachabilityMap::reachable_count() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.reachable(); }));
}

std::uint64_t ReachabilityMap::hash() const {
  Hasher h;
  h.add(grid.bounds.x_min);
  h.add(grid.bounds.y_min);
  h.add(grid.bounds.x_max);
  h.add(grid.bounds.y_max);
  h.add(grid.cell);
  for (const auto& [j, a] : failure.locks) {
    h.add<std::uint64_t>(j);
    h.add(a);
  }
  h.add(seed);
  h.add(attempts);
  h.add(epsilon);
  for (const auto& c : cells) {
    h.add(static_cast<std::uint8_t>(c.status));
    h.add(c.point);
    h.add(c.attempts_used);
  }
  return h.value();
}

ReachCell classify_cell(const ChainModel& chain, const FailureSpec& failure, const WorkspaceGrid& grid,
                        std::size_t idx, const ReachParams& params) {
  const int k = params.attempts;
  const int half = k / 2;
  const double eps = params.epsilon < 0.0 ? 0.5 * grid.cell : params.epsilon;
  const Vec2 p = grid.center(idx);
  const std::size_t n_points = chain.interaction_points.size();
  const std::size_t ee = chain.end_effector_index();

  // A square cell fits in a circle of radius cell/sqrt(2) about its centre.
  const double slack = params.ik.tol_position + grid.cell * std::sqrt(0.5) + eps;
  std::vector<bool> feasible(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const ReachAnnulus a = reach_annulus(chain, failure, i);
    const double d = (p - a.center).norm();
    feasible[i] = d <= a.r_max + slack && d >= a.r_min - slack;
  }

  Rng rng(derive_seed(params.seed, idx));
  ReachCell cell;
  for (int attempt = 1; attempt <= k; ++attempt) {
    Vec2 target = p;
    if (attempt > 1) {
      const double r = eps * std::sqrt(uniform01(rng));
      const double a = uniform(rng, -kPi, kPi);
      target += r * unit(a);
    }
    InteractionMode mode = InteractionMode::prehensile(params.window_lo, params.window_hi);
    std::size_t point = ee;
    if (attempt > half) {
      // Cycle distal to proximal, one interaction point per attempt.
      point = n_points - 1 - static_cast<std::size_t>(attempt - half - 1) % n_points;
      mode = InteractionMode::nonprehensile(chain.interaction_points[point].name);
    }
    const std::uint64_t ik_seed = rng();
    if (!feasible[point]) continue;
    const IkSolution s = solve_ik(chain, failure, target, mode, ik_seed, params.ik);
    const bool hit = s.orientation_ok &&
                     (s.position_error <= params.ik.tol_position || grid.in_cell(point_position(chain, s.q, point), idx));
    if (hit) {
      cell.attempts_used = attempt;
      if (mode.kind == InteractionKind::Prehensile) {
        cell.status = ReachStatus::Prehensile;
      } else {
        cell.status = ReachStatus::Nonprehensile;
        cell.point = static_cast<int>(point);
      }
      return cell;
    }
  }
  cell.attempts_used = k;
  return cell;
}

ReachabilityMap generate_reachability_map(const ChainModel& chain, const FailureSpec& failure,
                                          const WorkspaceGrid& grid, const ReachParams& params) {
  chain.validate();
  failure.validate(chain);
  grid.validate();
  if (params.attempts < 2) throw Error("reachability needs at least two attempts per cell");
  const double eps = params.epsilon < 0.0 ? 0.5 * grid.cell : params.epsilon;
  if (!(eps > 0.0) || eps > 0.5 * grid.cell + 1e-15) throw Error("perturbation radius must lie in (0, cell/2]");

  ReachabilityMap map;
  map.grid = grid;
  map.failure = failure;
  map.seed = params.seed;
  map.attempts = params.attempts;
  map.epsilon = eps;
  map.cells.resize(grid.size());
  ReachParams p = params;
  p.epsilon = eps;
  parallel_for(grid.size(), params.jobs, [&](std::size_t i) { map.cells[i] = classify_cell(chain, failure, grid, i, p); });
  return map;
}

ReachabilityMap smooth(const ReachabilityMap& map) {
  ReachabilityMap out = map;
  const std::size_t nx = map.grid.nx(), ny = map.grid.ny();
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      if (map.at(ix, iy).reachable()) continue;
      int pm = 0, npm = 0;
      std::map<int, int> point_votes;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const long jx = static_cast<long>(ix) + dx, jy = static_cast<long>(iy) + dy;
          if (jx < 0 || jy < 0 || jx >= static_cast<long>(nx) || jy >= static_cast<long>(ny)) continue;
          const ReachCell& n = map.at(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy));
          if (n.status == ReachStatus::Prehensile) ++pm;
          if (n.status == ReachStatus::Nonprehensile) {
            ++npm;
            ++point_votes[n.point];
          }
        }
      }
      if (pm + npm < 5) continue;
      ReachCell& c = out.cells[map.grid.index(ix, iy)];
      if (pm >= npm) {
        c.status = ReachStatus::Prehensile;
      } else {
        c.status = ReachStatus::Nonprehensile;
        // Most common neighbouring point; ties go to the lower index.
        c.point = std::max_element(point_votes.begin(), point_votes.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; })
                      ->first;
      }
    }
  }
  return out;
}

double area(const ReachabilityMap& map, AreaFilter filter) {
  const std::size_t n = filter == AreaFilter::All ? map.reachable_count() : map.count(ReachStatus::Prehensile);
  return static_cast<double>(n) * map.grid.cell * map.grid.cell;
}

double area_change_percent(double datum, double value) {
  if (datum == 0.0) throw Error("area change is undefined for a zero datum");
  return 100.0 * (value - datum) / datum;
}

long area_change_percent_rounded(double datum, double value) {
  return std::lround(area_change_percent(datum, value));
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_map_csv(std::ostream& os, const ReachabilityMap& map, const ChainModel& chain,
                   const std::map<std::string, std::string>& extra) {
  const auto& b = map.grid.bounds;
  os << "# lmj reach-map v1\n";
  os << "# bounds: " << fmt_double(b.x_min) << ' ' << fmt_double(b.y_min) << ' ' << fmt_double(b.x_max) << ' '
     << fmt_double(b.y_max) << '\n';
  os << "# cell: " << fmt_double(map.grid.cell) << '\n';
  os << "# seed: " << map.seed << '\n';
  os << "# k: " << map.attempts << '\n';
  os << "# eps: " << fmt_double(map.epsilon) << '\n';
  for (const auto& [key, value] : extra) os << "# " << key << ": " << value << '\n';
  os << "x,y,status,interaction_point,attempts\n";
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    const Vec2 c = map.grid.center(i);
    const ReachCell& cell = map.cells[i];
    os << fmt_double(c.x()) << ',' << fmt_double(c.y()) << ',' << to_string(cell.status) << ','
       << (cell.point >= 0 ? chain.interaction_points[static_cast<std::size_t>(cell.point)].name
                           : (cell.status == ReachStatus::Prehensile ? std::string(kEndEffector) : std::string()))
       << ',' << cell.attempts_used << '\n';
  }
}

std::map<std::string, std::string> read_map_metadata(std::istream& is) {
  std::map<std::string, std::string> meta;
  std::string line;
  while (is.peek() == '#' && std::getline(is, line)) {
    const auto colon = line.find(": ");
    if (colon == std::string::npos) continue;
    meta[line.substr(2, colon - 2)] = line.substr(colon + 2);
  }
  return meta;
}

ReachabilityMap read_map_csv(std::istream& is, const ChainModel& chain, const FailureSpec& failure) {
  auto meta = read_map_metadata(is);
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw Error("map file is missing '" + key + "'");
    return it->second;
  };
  ReachabilityMap map;
  {
    std::istringstream bs(need("bounds"));
    bs >> map.grid.bounds.x_min >> map.grid.bounds.y_min >> map.grid.bounds.x_max >> map.grid.bounds.y_max;
    if (!bs) throw Error("malformed map bounds");
  }
  map.grid.cell = std::stod(need("cell"));
  map.grid.validate();
  map.seed = std::stoull(need("seed"));
  map.attempts = std::stoi(need("k"));
  map.epsilon = std::stod(need("eps"));
  map.failure = failure;
  std::string line;
  if (!std::getline(is, line) || line.rfind("x,y,status", 0) != 0) throw Error("map file is missing its column header");
  map.cells.reserve(map.grid.size());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw Error("malformed map row: " + line);
    ReachCell c;
    c.status = parse_reach_status(f[2]);
    if (c.status == ReachStatus::Nonprehensile) c.point = static_cast<int>(chain.point_index(f[3]));
    c.attempts_used = std::stoi(f[4]);
    map.cells.push_back(c);
  }
  if (map.cells.size() != map.grid.size()) throw Error("map row count does not match its grid");
  return map;
}

void write_map_pgm(std::ostream& os, const ReachabilityMap& map) {
  const std::size_t nx = map.grid.nx(), ny = map.grid.ny();
  os << "P5\n" << nx << ' ' << ny << "\n255\n";
  std::vector<unsigned char> row(nx);
  for (std::size_t r = 0; r < ny; ++r) {
    const std::size_t iy = ny - 1 - r;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      switch (map.at(ix, iy).status) {
        case ReachStatus::Unreachable: row[ix] = 0; break;
        case ReachStatus::Nonprehensile: row[ix] = 128; break;
        case ReachStatus::Prehensile: row[ix] = 255; break;
      }
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(nx));
  }
}

}  // namespace lmj
