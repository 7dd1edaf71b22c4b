#pragma once

#include "lmj/edgebundle.hpp"

#include <iosfwd>

namespace lmj {

enum class ObjectRole { Target, Movable, Static };

std::string_view to_string(ObjectRole r);
ObjectRole parse_object_role(std::string_view s);

struct SceneObject {
  int id = 0;
  PlanarPose pose;
  Shape shape = Disc{0.03};
  double mass = 0.1;
  double mu_surface = 0.4;  // object-table Coulomb coefficient
  ObjectRole role = ObjectRole::Movable;

  Footprint footprint() const { return {shape, pose}; }
  bool operator==(const SceneObject&) const = default;
};

/// Tabletop scene. Movable objects and the target must be discs; boxes are
/// only supported as static geometry.
struct Environment {
  std::vector<SceneObject> objects;
  Footprint goal{Disc{0.05}, {}};
  Rect table_bounds{-0.6, 0.0, 0.6, 0.8};
  double gravity_accel = 9.81;
  // Execution noise. Each action draws one contact-normal rotation from
  // N(0, sigma_theta) seeded by (noise_seed, actions_executed).
  double sigma_theta = 0.0;
  std::uint64_t noise_seed = 0;
  std::uint64_t actions_executed = 0;

  std::size_t target_index() const;
  const SceneObject& target() const { return objects[target_index()]; }
  /// Throws lmj::Error describing the first violated invariant.
  void validate() const;

  bool operator==(const Environment&) const = default;
};

struct SimParams {
  double transfer = 0.8;  // kappa: fraction of normal contact speed passed on
  int chain_depth = 3;    // object-object impulse propagation limit
  bool rotation = false;  // spin from tangential contact, off by default
  bool pick_and_drag = true;
  double window_lo = -kPi / 3.0;
  double window_hi = kPi / 3.0;

  bool operator==(const SimParams&) const = default;
};

struct ContactEvent {
  std::size_t step = 0;  // sweep segment index
  int object = 0;
  Vec2 direction = Vec2::Zero();  // unit impulse direction
  double speed = 0.0;             // imparted speed [m/s]
  Vec2 displacement = Vec2::Zero();
  double rotation = 0.0;
};

struct ExecutionOutcome {
  Environment env_after;
  std::vector<ContactEvent> contacts;
  Vec2 target_displacement = Vec2::Zero();
  bool any_object_off_table = false;
  bool grasped = false;        // pick-and-drag happened
  bool robot_blocked = false;  // sweep ended early against an object or static
  std::size_t steps_executed = 0;
};

/// Closed-form Coulomb slide: v_hat * |v0|^2 / (2 mu g).
Vec2 free_slide(const Vec2& v0, double mu, double g);
/// Rotation analogue of free_slide for an initial spin with radius of gyration `radius`.
double free_spin(double omega0, double mu, double g, double radius);
/// Explicit time stepping of the same deceleration law; used to check the closed form.
double integrate_free_slide(double speed, double mu, double g, double dt);

/// Sweeps the edge's interaction point through the scene. Impacts impart
/// kappa times the normal contact speed and the struck object slides to
/// rest; sliders stop at contact, passing an impulse on to movable objects.
ExecutionOutcome execute_edge(const Environment& env, const ChainModel& chain, const Edge& edge,
                              const SimParams& params = {});

/// exp(sigma * Z) with Z standard normal.
double lognormal_factor(Rng& rng, double sigma);

/// Copy with per-object friction scaled by lognormal factors and
/// execution noise enabled. Zero sigmas give an exact copy.
Environment perturb(const Environment& env, double sigma_mu, std::uint64_t seed,
                    double sigma_theta = 3.0 * kPi / 180.0);

bool goal_reached(const Environment& env);
double target_goal_distance(const Environment& env);

/// True when every object pose matches exactly.
bool same_poses(const Environment& a, const Environment& b);

/// Rows of step,object,dx,dy,dtheta for each contact event.
void write_outcome_csv(std::ostream& os, const ExecutionOutcome& outcome, bool header = true);

}  // namespace lmj
