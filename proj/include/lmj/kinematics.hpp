#pragma once

#include "lmj/common.hpp"
#include "lmj/geometry.hpp"

#include <map>
#include <optional>
#include <vector>

namespace lmj {

using JointConfig = VecX;

struct JointLimit {
  double lo = -kPi;
  double hi = kPi;
  bool operator==(const JointLimit&) const = default;
};

struct JointFriction {
  double viscous = 0.0;  // N*m*s/rad
  double coulomb = 0.0;  // N*m
  bool operator==(const JointFriction&) const = default;
};

/// A named frame on the arm through which contact can happen.
struct InteractionPoint {
  std::string name;
  std::size_t link = 0;
  double offset = 0.0;  // distance from the link's proximal joint [m]
  bool operator==(const InteractionPoint&) const = default;
};

inline constexpr std::string_view kEndEffector = "end_effector";

/// Planar serial chain of revolute joints. Link i is driven by joint i and
/// carries its centre of mass at half its length.
struct ChainModel {
  std::vector<double> link_lengths;
  std::vector<double> link_masses;
  std::vector<double> link_inertias;  // about the link CoM
  std::vector<JointLimit> joint_limits;
  std::vector<double> velocity_limits;
  std::vector<double> torque_limits;
  std::vector<JointFriction> friction;
  std::vector<InteractionPoint> interaction_points;  // proximal to distal
  PlanarPose base;
  Vec2 gravity = Vec2::Zero();  // in the working plane
  double contact_radius = 0.01;  // radius of every interaction point's contact disc

  std::size_t dof() const { return link_lengths.size(); }

  /// Throws lmj::Error when the name is unknown.
  std::size_t point_index(std::string_view name) const;
  const InteractionPoint& point(std::string_view name) const {
    return interaction_points[point_index(name)];
  }
  std::size_t end_effector_index() const { return point_index(kEndEffector); }

  /// Throws lmj::Error describing the first violated invariant.
  void validate() const;

  bool operator==(const ChainModel&) const = default;
};

/// Locked multi-joint failure: joint index -> frozen angle. Empty means no failure.
struct FailureSpec {
  std::map<std::size_t, double> locks;

  bool is_locked(std::size_t joint) const { return locks.contains(joint); }
  std::vector<std::size_t> unlocked(std::size_t dof) const;
  void validate(const ChainModel& chain) const;

  bool operator==(const FailureSpec&) const = default;
};

enum class InteractionKind { Prehensile, Nonprehensile };

struct InteractionMode {
  InteractionKind kind = InteractionKind::Nonprehensile;
  std::string point{kEndEffector};
  // End-effector heading band for grasping, measured relative to the ray
  // from the arm base to the target. Ignored for nonprehensile contact.
  double window_lo = -kPi / 3.0;
  double window_hi = kPi / 3.0;

  static InteractionMode prehensile(double lo = -kPi / 3.0, double hi = kPi / 3.0) {
    return {InteractionKind::Prehensile, std::string{kEndEffector}, lo, hi};
  }
  static InteractionMode nonprehensile(std::string point) {
    return {InteractionKind::Nonprehensile, std::move(point), -kPi / 3.0, kPi / 3.0};
  }
};

struct IkOptions {
  double damping = 0.05;
  int restarts = 20;
  int iterations = 200;
  double tol_position = 1e-3;
  double tol_orientation = 1e-2;
};

/// Best-effort solver output; `solved` applies the tolerance contract.
struct IkSolution {
  JointConfig q;
  double position_error = 0.0;
  bool orientation_ok = true;
  bool solved = false;
};

/// Set of positions a point can reach ignoring joint limits: an annulus
/// around the first unlocked joint (or a single point when fully locked).
struct ReachAnnulus {
  Vec2 center = Vec2::Zero();
  double r_min = 0.0;
  double r_max = 0.0;
};

/// Joint configuration with every joint at its lock angle or at the
/// midpoint of its limits.
JointConfig nominal_config(const ChainModel& chain, const FailureSpec& failure);

PlanarPose forward_kinematics(const ChainModel& chain, const FailureSpec& failure,
                              const JointConfig& q, std::string_view point);

/// Unchecked position of interaction point `point_idx`.
Vec2 point_position(const ChainModel& chain, const JointConfig& q, std::size_t point_idx);
/// Unchecked heading of the link that carries `point_idx`.
double point_heading(const ChainModel& chain, const JointConfig& q, std::size_t point_idx);

/// 3xN task Jacobian (x, y, theta rows); locked columns are exactly zero.
Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian(const ChainModel& chain, const FailureSpec& failure,
                                                  const JointConfig& q, std::string_view point);
Eigen::Matrix<double, 2, Eigen::Dynamic> position_jacobian(const ChainModel& chain,
                                                           const FailureSpec& failure,
                                                           const JointConfig& q, std::size_t point_idx);
/// Time derivative of the position rows along joint velocity qd.
Eigen::Matrix<double, 2, Eigen::Dynamic> position_jacobian_dot(const ChainModel& chain,
                                                               const FailureSpec& failure,
                                                               const JointConfig& q, const VecX& qd,
                                                               std::size_t point_idx);

/// sqrt(det(J J^T)); zero when J J^T is singular.
double manipulability(const MatX& j);

/// Product of the min(rows, cols) singular values of J. Equals
/// manipulability() whenever J has at least as many columns as rows.
double mobility(const MatX& j);

/// Columns of `j` restricted to the unlocked joints that move the point.
MatX active_columns(const ChainModel& chain, const FailureSpec& failure, const MatX& j,
                    std::size_t point_idx);

ReachAnnulus reach_annulus(const ChainModel& chain, const FailureSpec& failure, std::size_t point_idx);

/// Heading error of a prehensile pose, relative to the base ray; zero inside the window.
double window_violation(const ChainModel& chain, const Vec2& target, double heading,
                        const InteractionMode& mode);

IkSolution solve_ik(const ChainModel& chain, const FailureSpec& failure, const Vec2& target,
                    const InteractionMode& mode, std::uint64_t seed, const IkOptions& opts = {});

/// Damped-least-squares IK with random restarts. Returns nullopt when no
/// configuration meets the tolerances within the restart budget.
std::optional<JointConfig> inverse_kinematics(const ChainModel& chain, const FailureSpec& failure,
                                              const PlanarPose& target, const InteractionMode& mode,
                                              std::uint64_t seed, const IkOptions& opts = {});

}  // namespace lmj
