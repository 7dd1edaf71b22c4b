#include "lmj/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmj {

std::string_view to_string(LimitKind k) {
  switch (k) {
    case LimitKind::JointPosition: return "JointPosition";
    case LimitKind::JointVelocity: return "JointVelocity";
    case LimitKind::JointAcceleration: return "JointAcceleration";
    case LimitKind::Torque: return "Torque";
    case LimitKind::Manipulability: return "Manipulability";
    case LimitKind::Collision: return "Collision";
    case LimitKind::WorkspaceBound: return "WorkspaceBound";
  }
  return "?";
}

namespace {

struct BodyFrames {
  std::vector<Vec2> pivots;  // P_0 .. P_{n-1}
  std::vector<Vec2> coms;    // link centres of mass
};

BodyFrames body_frames(const ChainModel& chain, const JointConfig& q) {
  const std::size_t n = chain.dof();
  BodyFrames f;
  f.pivots.resize(n);
  f.coms.resize(n);
  Vec2 p = chain.base.position();
  double phi = chain.base.theta;
  for (std::size_t i = 0; i < n; ++i) {
    phi += q[i];
    const Vec2 u = unit(phi);
    f.pivots[i] = p;
    f.coms[i] = p + 0.5 * chain.link_lengths[i] * u;
    p += chain.link_lengths[i] * u;
  }
  return f;
}

}  // namespace

MatX mass_matrix(const ChainModel& chain, const JointConfig& q) {
  const std::size_t n = chain.dof();
  const BodyFrames f = body_frames(chain, q);
  MatX m = MatX::Zero(n, n);
  // Composite body j..n-1: mass, centre of mass, inertia about that centre.
  double mass = 0.0;
  Vec2 com = Vec2::Zero();
  double inertia = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    const double mb = chain.link_masses[j];
    const double new_mass = mass + mb;
    const Vec2 new_com = (mass * com + mb * f.coms[j]) / new_mass;
    inertia = inertia + mass * (com - new_com).squaredNorm() + chain.link_inertias[j] +
              mb * (f.coms[j] - new_com).squaredNorm();
    mass = new_mass;
    com = new_com;
    const Vec2 rj = com - f.pivots[j];
    for (std::size_t i = 0; i <= j; ++i) {
      const double v = inertia + mass * (com - f.pivots[i]).dot(rj);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

MatX mass_matrix_partial(const ChainModel& chain, const JointConfig& q, std::size_t k) {
  const std::size_t n = chain.dof();
  const BodyFrames f = body_frames(chain, q);
  auto d_com = [&](std::size_t b) -> Vec2 { return b >= k ? perp(f.coms[b] - f.pivots[k]) : Vec2::Zero(); };
  auto d_pivot = [&](std::size_t i) -> Vec2 { return i > k ? perp(f.pivots[i] - f.pivots[k]) : Vec2::Zero(); };
  MatX dm = MatX::Zero(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      double v = 0.0;
      for (std::size_t b = j; b < n; ++b) {
        const Vec2 a = f.coms[b] - f.pivots[i];
        const Vec2 c = f.coms[b] - f.pivots[j];
        v += chain.link_masses[b] * ((d_com(b) - d_pivot(i)).dot(c) + a.dot(d_com(b) - d_pivot(j)));
      }
      dm(i, j) = v;
      dm(j, i) = v;
    }
  }
  return dm;
}

MatX coriolis_matrix(const ChainModel& chain, const JointConfig& q, const VecX& q_dot) {
  const std::size_t n = chain.dof();
  std::vector<MatX> dm(n);
  for (std::size_t k = 0; k < n; ++k) dm[k] = mass_matrix_partial(chain, q, k);
  MatX c = MatX::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        v += 0.5 * (dm[k](i, j) + dm[j](i, k) - dm[i](j, k)) * q_dot[k];
      }
      c(i, j) = v;
    }
  }
  return c;
}

VecX gravity_torques(const ChainModel& chain, const JointConfig& q) {
  const std::size_t n = chain.dof();
  VecX g = VecX::Zero(n);
  if (chain.gravity.isZero(0.0)) return g;
  const BodyFrames f = body_frames(chain, q);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t b = i; b < n; ++b) v -= chain.link_masses[b] * chain.gravity.dot(perp(f.coms[b] - f.pivots[i]));
    g[i] = v;
  }
  return g;
}

VecX joint_friction(const ChainModel& chain, const VecX& q_dot) {
  VecX f(q_dot.size());
  for (Eigen::Index i = 0; i < q_dot.size(); ++i) {
    const double s = q_dot[i] > 0.0 ? 1.0 : (q_dot[i] < 0.0 ? -1.0 : 0.0);
    f[i] = chain.friction[i].viscous * q_dot[i] + chain.friction[i].coulomb * s;
  }
  return f;
}

VecX inverse_dynamics(const ChainModel& chain, const JointConfig& q, const VecX& q_dot, const VecX& q_ddot) {
  return mass_matrix(chain, q) * q_ddot + coriolis_matrix(chain, q, q_dot) * q_dot + gravity_torques(chain, q) +
         joint_friction(chain, q_dot);
}

MatX damped_pinv(const MatX& j, double damping) {
  const MatX jjt = j * j.transpose() + damping * damping * MatX::Identity(j.rows(), j.rows());
  return j.transpose() * jjt.ldlt().solve(MatX::Identity(j.rows(), j.rows()));
}

namespace {

VecX scatter_active(const ChainModel& chain, const FailureSpec& failure, std::size_t point_idx,
                    const VecX& reduced) {
  VecX out = VecX::Zero(chain.dof());
  Eigen::Index r = 0;
  for (std::size_t c = 0; c <= chain.interaction_points[point_idx].link; ++c) {
    if (!failure.is_locked(c)) out[c] = reduced[r++];
  }
  return out;
}

}  // namespace

VecX resolved_velocity(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q, const Vec2& u,
                       std::size_t point_idx, double damping) {
  const MatX j = active_columns(chain, failure, position_jacobian(chain, failure, q, point_idx), point_idx);
  if (j.cols() == 0) return VecX::Zero(chain.dof());
  return scatter_active(chain, failure, point_idx, damped_pinv(j, damping) * u);
}

VecX resolved_acceleration(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q,
                           const VecX& q_dot, const Vec2& u_dot, std::size_t point_idx, double damping) {
  const MatX j = active_columns(chain, failure, position_jacobian(chain, failure, q, point_idx), point_idx);
  if (j.cols() == 0) return VecX::Zero(chain.dof());
  const auto jd = position_jacobian_dot(chain, failure, q, q_dot, point_idx);
  VecX qd_masked = q_dot;
  for (const auto& [joint, angle] : failure.locks) qd_masked[joint] = 0.0;
  const Vec2 rhs = u_dot - jd * qd_masked;
  return scatter_active(chain, failure, point_idx, damped_pinv(j, damping) * rhs);
}

LimitReport check_limits(const ChainModel& chain, const JointConfig& q, const VecX& q_dot, const VecX& q_ddot,
                         const VecX& tau, double manipulability, const DynamicsLimits& limits) {
  const std::size_t n = chain.dof();
  for (std::size_t i = 0; i < n; ++i) {
    if (q[i] < chain.joint_limits[i].lo || q[i] > chain.joint_limits[i].hi) {
      return LimitReport::fail(LimitKind::JointPosition);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(q_dot[i]) > chain.velocity_limits[i]) return LimitReport::fail(LimitKind::JointVelocity);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(q_ddot[i]) > limits.max_joint_acceleration) return LimitReport::fail(LimitKind::JointAcceleration);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(tau[i]) > chain.torque_limits[i]) return LimitReport::fail(LimitKind::Torque);
  }
  if (manipulability < limits.min_manipulability) return LimitReport::fail(LimitKind::Manipulability);
  return LimitReport::ok();
}

DynamicsState euler_step(const DynamicsState& state, double dt) {
  return {state.q + state.q_dot * dt, state.q_dot};
}

std::size_t rollout_steps(const ControlSample& control) {
  const auto k = static_cast<long long>(std::llround(control.duration / control.dt));
  return static_cast<std::size_t>(std::max<long long>(1, k));
}

LimitReport evaluate_state(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q,
                           const VecX& q_dot, std::size_t point_idx, const DynamicsLimits& limits) {
  const VecX q_ddot = resolved_acceleration(chain, failure, q, q_dot, Vec2::Zero(), point_idx, limits.pinv_damping);
  const VecX tau = inverse_dynamics(chain, q, q_dot, q_ddot);
  const MatX j = active_columns(chain, failure, position_jacobian(chain, failure, q, point_idx), point_idx);
  // A point with no unlocked joints cannot move; there is no singularity to guard.
  const double m = j.cols() == 0 ? std::numeric_limits<double>::infinity() : mobility(j);
  return check_limits(chain, q, q_dot, q_ddot, tau, m, limits);
}

Rollout simulate_rollout(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q0,
                         const ControlSample& control, std::size_t point_idx, const DynamicsLimits& limits,
                         const PointCheck& point_check) {
  if (!(control.dt > 0.0)) throw Error("control timestep must be positive");
  Rollout out;
  const std::size_t steps = rollout_steps(control);
  out.trace.reserve(steps + 1);
  out.sweep.reserve(steps + 1);
  DynamicsState s{q0, VecX::Zero(chain.dof())};
  for (std::size_t k = 0; k <= steps; ++k) {
    s.q_dot = resolved_velocity(chain, failure, s.q, control.u, point_idx, limits.pinv_damping);
    const Vec2 p = point_position(chain, s.q, point_idx);
    LimitReport r = evaluate_state(chain, failure, s.q, s.q_dot, point_idx, limits);
    if (!r.violated && point_check) {
      if (auto kind = point_check(p)) r = LimitReport::fail(*kind);
    }
    if (r.violated) {
      out.valid = false;
      out.rejection = r.which;
      return out;
    }
    out.trace.push_back({s.q, s.q_dot});
    out.sweep.push_back(p);
    if (k < steps) s = euler_step(s, control.dt);
  }
  return out;
}

}  // namespace lmj
