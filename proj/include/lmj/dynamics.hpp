#pragma once

#include "lmj/kinematics.hpp"

#include <functional>
#include <optional>
#include <string_view>

namespace lmj {

struct DynamicsState {
  JointConfig q;
  VecX q_dot;
};

/// Piecewise-constant task-space velocity command for one interaction point.
struct ControlSample {
  Vec2 u = Vec2::Zero();  // [m/s]
  double duration = 0.0;  // [s]
  double dt = 0.01;       // [s]
};

enum class LimitKind {
  JointPosition,
  JointVelocity,
  JointAcceleration,
  Torque,
  Manipulability,
  Collision,
  WorkspaceBound,
};

inline constexpr LimitKind kAllLimitKinds[] = {
    LimitKind::JointPosition,  LimitKind::JointVelocity, LimitKind::JointAcceleration, LimitKind::Torque,
    LimitKind::Manipulability, LimitKind::Collision,     LimitKind::WorkspaceBound,
};

std::string_view to_string(LimitKind k);

struct LimitReport {
  bool violated = false;
  std::optional<LimitKind> which;

  static LimitReport ok() { return {}; }
  static LimitReport fail(LimitKind k) { return {true, k}; }
};

struct DynamicsLimits {
  double max_joint_acceleration = 10.0;  // [rad/s^2]
  double min_manipulability = 0.01;
  double pinv_damping = 0.01;
  bool operator==(const DynamicsLimits&) const = default;
};

/// Joint-space inertia via composite rigid bodies.
MatX mass_matrix(const ChainModel& chain, const JointConfig& q);

/// Partial derivative of M with respect to joint k.
MatX mass_matrix_partial(const ChainModel& chain, const JointConfig& q, std::size_t k);

/// Christoffel-symbol Coriolis matrix; Mdot - 2C is skew-symmetric.
MatX coriolis_matrix(const ChainModel& chain, const JointConfig& q, const VecX& q_dot);

/// Torques opposing in-plane gravity. Zero for a horizontal table.
VecX gravity_torques(const ChainModel& chain, const JointConfig& q);

/// viscous * qd + coulomb * sign(qd), with sign(0) = 0.
VecX joint_friction(const ChainModel& chain, const VecX& q_dot);

/// tau = M(q) qdd + C(q, qd) qd + g(q) + f(qd).
VecX inverse_dynamics(const ChainModel& chain, const JointConfig& q, const VecX& q_dot, const VecX& q_ddot);

/// Damped pseudoinverse J^T (J J^T + lambda^2 I)^-1.
MatX damped_pinv(const MatX& j, double damping);

/// Joint velocity that realises task velocity u at the point; locked joints get 0.
VecX resolved_velocity(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q, const Vec2& u,
                       std::size_t point_idx, double damping = 0.01);

/// qdd = J^+ (u_dot - Jdot qd) over unlocked joints; locked joints get 0.
VecX resolved_acceleration(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q,
                           const VecX& q_dot, const Vec2& u_dot, std::size_t point_idx, double damping = 0.01);

/// Flags the first violated limit in the order position, velocity,
/// acceleration, torque, manipulability.
LimitReport check_limits(const ChainModel& chain, const JointConfig& q, const VecX& q_dot, const VecX& q_ddot,
                         const VecX& tau, double manipulability, const DynamicsLimits& limits);

/// q' = q + qd * dt; qd held.
DynamicsState euler_step(const DynamicsState& state, double dt);

/// Extra per-step validity check on the active point (collision, workspace).
using PointCheck = std::function<std::optional<LimitKind>(const Vec2& point)>;

struct TraceEntry {
  JointConfig q;
  VecX q_dot;
};

struct Rollout {
  std::vector<TraceEntry> trace;
  std::vector<Vec2> sweep;
  bool valid = true;
  std::optional<LimitKind> rejection;
};

/// Number of integration steps for a control (at least one).
std::size_t rollout_steps(const ControlSample& control);

/// Per-step feasibility quantities for one trace state.
LimitReport evaluate_state(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q,
                           const VecX& q_dot, std::size_t point_idx, const DynamicsLimits& limits);

/// Simulates a constant task-velocity command from q0, rejecting the
/// rollout at the first step that violates a limit or the point check.
Rollout simulate_rollout(const ChainModel& chain, const FailureSpec& failure, const JointConfig& q0,
                         const ControlSample& control, std::size_t point_idx, const DynamicsLimits& limits,
                         const PointCheck& point_check = {});

}  // namespace lmj
