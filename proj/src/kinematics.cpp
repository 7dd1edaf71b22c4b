#include "lmj/kinematics.hpp"

#include <algorithm>
#include <limits>

namespace lmj {

std::size_t ChainModel::point_index(std::string_view name) const {
  for (std::size_t i = 0; i < interaction_points.size(); ++i) {
    if (interaction_points[i].name == name) return i;
  }
  throw Error("unknown interaction point '" + std::string(name) + "'");
}

void ChainModel::validate() const {
  const std::size_t n = dof();
  if (n == 0) throw Error("chain has no links");
  if (link_masses.size() != n || link_inertias.size() != n || joint_limits.size() != n ||
      velocity_limits.size() != n || torque_limits.size() != n || friction.size() != n) {
    throw Error("chain per-joint vectors disagree in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(link_lengths[i] > 0.0)) throw Error("link length must be positive");
    if (!(link_masses[i] > 0.0)) throw Error("link mass must be positive");
    if (!(link_inertias[i] > 0.0)) throw Error("link inertia must be positive");
    if (!(joint_limits[i].lo < joint_limits[i].hi)) throw Error("joint limit q_min must be below q_max");
    if (!(velocity_limits[i] > 0.0)) throw Error("velocity limit must be positive");
    if (!(torque_limits[i] > 0.0)) throw Error("torque limit must be positive");
    if (friction[i].viscous < 0.0 || friction[i].coulomb < 0.0) throw Error("friction must be non-negative");
  }
  if (interaction_points.size() < 3) {
    throw Error("chain needs an end effector and at least two proximal interaction points");
  }
  for (const auto& p : interaction_points) {
    if (p.link >= n) throw Error("interaction point '" + p.name + "' on missing link");
    if (p.offset < 0.0 || p.offset > link_lengths[p.link]) {
      throw Error("interaction point '" + p.name + "' offset outside its link");
    }
  }
  const auto& last = interaction_points.back();
  if (last.name != kEndEffector || last.link != n - 1 || last.offset != link_lengths.back()) {
    throw Error("end_effector must be the last point, at the tip of the last link");
  }
  if (!(contact_radius > 0.0)) throw Error("contact radius must be positive");
}

std::vector<std::size_t> FailureSpec::unlocked(std::size_t dof) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dof; ++i) {
    if (!is_locked(i)) out.push_back(i);
  }
  return out;
}

void FailureSpec::validate(const ChainModel& chain) const {
  for (const auto& [joint, angle] : locks) {
    if (joint >= chain.dof()) throw Error("locked joint index out of range");
    const auto& lim = chain.joint_limits[joint];
    if (angle < lim.lo || angle > lim.hi) throw Error("lock angle outside joint limits");
  }
}

JointConfig nominal_config(const ChainModel& chain, const FailureSpec& failure) {
  JointConfig q(chain.dof());
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    const auto it = failure.locks.find(i);
    q[i] = it != failure.locks.end() ? it->second
                                     : 0.5 * (chain.joint_limits[i].lo + chain.joint_limits[i].hi);
  }
  return q;
}

namespace {

void check_config(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q) {
  if (static_cast<std::size_t>(q.size()) != chain.dof()) throw Error("joint vector length differs from chain dof");
  for (const auto& [joint, angle] : failure.locks) {
    if (q[joint] != angle) throw Error("configuration disagrees with locked joint angle");
  }
}

// Joint pivots P_0..P_{n} and cumulative link headings.
struct ChainFrames {
  std::vector<Vec2> pivots;
  std::vector<double> headings;
};

ChainFrames frames(const ChainModel& chain, const JointConfig& q, std::size_t upto_link) {
  ChainFrames f;
  f.pivots.reserve(upto_link + 2);
  f.headings.reserve(upto_link + 1);
  Vec2 p = chain.base.position();
  double phi = chain.base.theta;
  for (std::size_t i = 0; i <= upto_link; ++i) {
    phi += q[i];
    f.pivots.push_back(p);
    f.headings.push_back(phi);
    p += chain.link_lengths[i] * unit(phi);
  }
  f.pivots.push_back(p);
  return f;
}

}  // namespace

Vec2 point_position(const ChainModel& chain, const JointConfig& q, std::size_t point_idx) {
  const auto& ip = chain.interaction_points[point_idx];
  Vec2 p = chain.base.position();
  double phi = chain.base.theta;
  for (std::size_t i = 0; i < ip.link; ++i) {
    phi += q[i];
    p += chain.link_lengths[i] * unit(phi);
  }
  phi += q[ip.link];
  return p + ip.offset * unit(phi);
}

double point_heading(const ChainModel& chain, const JointConfig& q, std::size_t point_idx) {
  const auto& ip = chain.interaction_points[point_idx];
  double phi = chain.base.theta;
  for (std::size_t i = 0; i <= ip.link; ++i) phi += q[i];
  return phi;
}

PlanarPose forward_kinematics(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q,
                              std::string_view point) {
  check_config(chain, failure, q);
  const std::size_t idx = chain.point_index(point);
  const Vec2 p = point_position(chain, q, idx);
  return {p.x(), p.y(), wrap_angle(point_heading(chain, q, idx))};
}

Eigen::Matrix<double, 2, Eigen::Dynamic> position_jacobian(const ChainModel& chain, const FailureSpec& failure,
                                                           const JointConfig& q, std::size_t point_idx) {
  const auto& ip = chain.interaction_points[point_idx];
  const auto f = frames(chain, q, ip.link);
  const Vec2 p = f.pivots[ip.link] + ip.offset * unit(f.headings[ip.link]);
  Eigen::Matrix<double, 2, Eigen::Dynamic> j = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, chain.dof());
  for (std::size_t c = 0; c <= ip.link; ++c) {
    if (failure.is_locked(c)) continue;
    j.col(c) = perp(p - f.pivots[c]);
  }
  return j;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian(const ChainModel& chain, const FailureSpec& failure,
                                                  const JointConfig& q, std::string_view point) {
  check_config(chain, failure, q);
  const std::size_t idx = chain.point_index(point);
  const auto& ip = chain.interaction_points[idx];
  Eigen::Matrix<double, 3, Eigen::Dynamic> j = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, chain.dof());
  j.topRows<2>() = position_jacobian(chain, failure, q, idx);
  for (std::size_t c = 0; c <= ip.link; ++c) {
    if (!failure.is_locked(c)) j(2, c) = 1.0;
  }
  return j;
}

Eigen::Matrix<double, 2, Eigen::Dynamic> position_jacobian_dot(const ChainModel& chain, const FailureSpec& failure,
                                                               const JointConfig& q, const VecX& qd,
                                                               std::size_t point_idx) {
  const auto& ip = chain.interaction_points[point_idx];
  const auto f = frames(chain, q, ip.link);
  // Heading rates accumulate unlocked joint velocities only.
  std::vector<double> rate(ip.link + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i <= ip.link; ++i) {
    if (!failure.is_locked(i)) acc += qd[i];
    rate[i] = acc;
  }
  Eigen::Matrix<double, 2, Eigen::Dynamic> jd = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, chain.dof());
  // d/dt (p - P_c) summed backwards from the point.
  Vec2 rel_rate = ip.offset * rate[ip.link] * perp(unit(f.headings[ip.link]));
  for (std::size_t c = ip.link + 1; c-- > 0;) {
    if (c < ip.link) rel_rate += chain.link_lengths[c] * rate[c] * perp(unit(f.headings[c]));
    if (!failure.is_locked(c)) jd.col(c) = perp(rel_rate);
  }
  return jd;
}

double manipulability(const MatX& j) {
  if (j.cols() == 0) return 0.0;
  const double det = (j * j.transpose()).determinant();
  return det > 0.0 ? std::sqrt(det) : 0.0;
}

double mobility(const MatX& j) {
  if (j.cols() == 0 || j.rows() == 0) return 0.0;
  const double det = j.cols() >= j.rows() ? (j * j.transpose()).determinant() : (j.transpose() * j).determinant();
  return det > 0.0 ? std::sqrt(det) : 0.0;
}

MatX active_columns(const ChainModel& chain, const FailureSpec& failure, const MatX& j, std::size_t point_idx) {
  const std::size_t link = chain.interaction_points[point_idx].link;
  std::vector<Eigen::Index> cols;
  for (std::size_t c = 0; c <= link; ++c) {
    if (!failure.is_locked(c)) cols.push_back(static_cast<Eigen::Index>(c));
  }
  MatX out(j.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = j.col(cols[i]);
  return out;
}

ReachAnnulus reach_annulus(const ChainModel& chain, const FailureSpec& failure, std::size_t point_idx) {
  const auto& ip = chain.interaction_points[point_idx];
  const JointConfig q = nominal_config(chain, failure);
  const auto f = frames(chain, q, ip.link);
  const Vec2 p = f.pivots[ip.link] + ip.offset * unit(f.headings[ip.link]);
  std::vector<std::size_t> active;
  for (std::size_t c = 0; c <= ip.link; ++c) {
    if (!failure.is_locked(c)) active.push_back(c);
  }
  ReachAnnulus a;
  if (active.empty()) {
    a.center = p;
    return a;
  }
  a.center = f.pivots[active.front()];
  double total = 0.0, longest = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const Vec2 next = i + 1 < active.size() ? f.pivots[active[i + 1]] : p;
    const double len = (next - f.pivots[active[i]]).norm();
    total += len;
    longest = std::max(longest, len);
  }
  a.r_max = total;
  a.r_min = std::max(0.0, 2.0 * longest - total);
  return a;
}

double window_violation(const ChainModel& chain, const Vec2& target, double heading, const InteractionMode& mode) {
  if (mode.kind != InteractionKind::Prehensile) return 0.0;
  const Vec2 ray = target - chain.base.position();
  const double ray_angle = ray.norm() > 1e-12 ? std::atan2(ray.y(), ray.x()) : chain.base.theta;
  const double rel = wrap_angle(heading - ray_angle);
  if (rel < mode.window_lo) return mode.window_lo - rel;
  if (rel > mode.window_hi) return mode.window_hi - rel;
  return 0.0;
}

IkSolution solve_ik(const ChainModel& chain, const FailureSpec& failure, const Vec2& target,
                    const InteractionMode& mode, std::uint64_t seed, const IkOptions& opts) {
  const std::size_t idx = chain.point_index(mode.point);
  const bool prehensile = mode.kind == InteractionKind::Prehensile;
  if (prehensile && mode.point != kEndEffector) throw Error("prehensile mode requires the end effector");
  if (!(mode.window_lo < mode.window_hi)) throw Error("orientation window is empty");

  const std::size_t link = chain.interaction_points[idx].link;
  std::vector<std::size_t> active;
  for (std::size_t c = 0; c <= link; ++c) {
    if (!failure.is_locked(c)) active.push_back(c);
  }
  const auto n_active = static_cast<Eigen::Index>(active.size());
  // Aim slightly inside the window so the solution does not sit on its edge.
  const double margin = std::min(0.05, 0.25 * (mode.window_hi - mode.window_lo));
  InteractionMode aim = mode;
  aim.window_lo += margin;
  aim.window_hi -= margin;
  constexpr double kOrientationWeight = 0.3;

  Rng rng(seed);
  IkSolution best;
  best.position_error = std::numeric_limits<double>::infinity();
  best.orientation_ok = false;

  auto evaluate = [&](const JointConfig& q, IkSolution& s) {
    s.q = q;
    s.position_error = (target - point_position(chain, q, idx)).norm();
    s.orientation_ok =
        std::abs(window_violation(chain, target, point_heading(chain, q, idx), mode)) <= opts.tol_orientation;
    s.solved = s.position_error <= opts.tol_position && s.orientation_ok;
  };
  auto better = [](const IkSolution& a, const IkSolution& b) {
    if (a.solved != b.solved) return a.solved;
    if (a.orientation_ok != b.orientation_ok) return a.orientation_ok;
    return a.position_error < b.position_error;
  };

  const int restarts = n_active == 0 ? 1 : std::max(1, opts.restarts);
  for (int r = 0; r < restarts; ++r) {
    JointConfig q = nominal_config(chain, failure);
    for (std::size_t j = 0; j < chain.dof(); ++j) {
      if (!failure.is_locked(j)) q[j] = uniform(rng, chain.joint_limits[j].lo, chain.joint_limits[j].hi);
    }
    double prev_err = std::numeric_limits<double>::infinity();
    int stalled = 0;
    IkSolution cur;
    for (int it = 0; it <= opts.iterations; ++it) {
      evaluate(q, cur);
      if (cur.solved || n_active == 0 || it == opts.iterations) break;

      const Vec2 ep = target - point_position(chain, q, idx);
      const double eo = prehensile ? window_violation(chain, target, point_heading(chain, q, idx), aim) : 0.0;
      const bool use_ori = prehensile && eo != 0.0;
      const Eigen::Index rows = use_ori ? 3 : 2;

      const auto jp = position_jacobian(chain, failure, q, idx);
      MatX j(rows, n_active);
      VecX e(rows);
      for (Eigen::Index c = 0; c < n_active; ++c) {
        j(0, c) = jp(0, static_cast<Eigen::Index>(active[c]));
        j(1, c) = jp(1, static_cast<Eigen::Index>(active[c]));
        if (use_ori) j(2, c) = kOrientationWeight;
      }
      e.head<2>() = ep;
      if (use_ori) e[2] = kOrientationWeight * eo;

      const MatX jjt = j * j.transpose() + opts.damping * opts.damping * MatX::Identity(rows, rows);
      VecX dq = j.transpose() * jjt.ldlt().solve(e);
      const double max_step = dq.cwiseAbs().maxCoeff();
      if (max_step > 0.3) dq *= 0.3 / max_step;
      for (Eigen::Index c = 0; c < n_active; ++c) {
        const std::size_t jt = active[c];
        q[jt] = std::clamp(q[jt] + dq[c], chain.joint_limits[jt].lo, chain.joint_limits[jt].hi);
      }

      const double err = ep.norm() + std::abs(eo) * kOrientationWeight;
      if (err > prev_err * (1.0 - 1e-4)) {
        if (++stalled >= 8) {
          evaluate(q, cur);
          break;
        }
      } else {
        stalled = 0;
      }
      prev_err = std::min(prev_err, err);
    }
    if (better(cur, best)) best = cur;
    if (best.solved) break;
  }
  return best;
}

std::optional<JointConfig> inverse_kinematics(const ChainModel& chain, const FailureSpec& failure,
                                              const PlanarPose& target, const InteractionMode& mode,
                                              std::uint64_t seed, const IkOptions& opts) {
  const std::size_t idx = chain.point_index(mode.point);
  const Vec2 t = target.position();
  const ReachAnnulus a = reach_annulus(chain, failure, idx);
  const double d = (t - a.center).norm();
  if (d > a.r_max + opts.tol_position || d < a.r_min - opts.tol_position) return std::nullopt;
  IkSolution s = solve_ik(chain, failure, t, mode, seed, opts);
  if (!s.solved) return std::nullopt;
  return s.q;
}

}  // namespace lmj
