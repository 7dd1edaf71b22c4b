#include "lmj/npm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace lmj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTouch = 1e-9;     // gap treated as resting contact
constexpr double kBlocked = 1e-12;  // smaller pushes count as blocked
constexpr int kMaxHitsPerStep = 32;

double disc_radius(const SceneObject& o) { return std::get<Disc>(o.shape).radius; }

Vec2 rotate(const Vec2& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

// First distance along c + s*dir (s in [0, s_max]) at which a disc of
// radius r centred there touches `other`. Zero when already touching and
// moving inward; infinity when there is no contact.
double first_contact(const Vec2& c, const Vec2& dir, double s_max, double r, const Footprint& other) {
  const double g0 = distance_point_shape(c, other) - r;
  if (g0 <= kTouch) {
    Vec2 out = c - closest_point_on_shape(c, other);
    if (out.norm() < 1e-12) out = c - other.pose.position();
    return dir.dot(out) < 0.0 ? 0.0 : kInf;
  }
  if (!(s_max > 0.0)) return kInf;
  if (distance_segment_shape(c, c + s_max * dir, other) > r) return kInf;
  double lo = 0.0, hi = s_max;
  for (int i = 0; i < 64 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (distance_segment_shape(c, c + mid * dir, other) <= r) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

// Distance along dir from an interior point to the rectangle boundary.
double exit_distance(const Vec2& c, const Vec2& dir, const Rect& r) {
  double s = kInf;
  if (dir.x() > 0.0) s = std::min(s, (r.x_max - c.x()) / dir.x());
  if (dir.x() < 0.0) s = std::min(s, (r.x_min - c.x()) / dir.x());
  if (dir.y() > 0.0) s = std::min(s, (r.y_max - c.y()) / dir.y());
  if (dir.y() < 0.0) s = std::min(s, (r.y_min - c.y()) / dir.y());
  return std::max(0.0, s);
}

Vec2 contact_normal(const Vec2& from, const Footprint& obj) {
  Vec2 n = closest_point_on_shape(from, obj) - from;
  if (n.norm() < 1e-12) n = obj.pose.position() - from;
  const double len = n.norm();
  return len > 0.0 ? Vec2(n / len) : Vec2::Zero();
}

class Sweeper {
 public:
  Sweeper(Environment& env, const SimParams& params, double noise, ExecutionOutcome& out)
      : env_(env), params_(params), noise_(noise), out_(out) {}

  // Moves object i with initial velocity v0 across the table. Returns the displacement.
  Vec2 slide(std::size_t i, const Vec2& v0, int depth, std::size_t step, double spin) {
    SceneObject& o = env_.objects[i];
    const double speed = v0.norm();
    if (!(speed > 0.0)) return Vec2::Zero();
    const Vec2 dir = v0 / speed;
    const double g = env_.gravity_accel;
    const double mu = o.mu_surface;
    const double r = disc_radius(o);
    const Vec2 c = o.pose.position();

    double s_stop = free_slide(v0, mu, g).norm();
    int hit = -1;
    bool off_table = false;
    const double s_edge = exit_distance(c, dir, env_.table_bounds);
    if (s_edge < s_stop) {
      s_stop = s_edge;
      off_table = true;
    }
    for (std::size_t j = 0; j < env_.objects.size(); ++j) {
      if (j == i) continue;
      const double s = first_contact(c, dir, s_stop, r, env_.objects[j].footprint());
      if (s != kInf && (s < s_stop || (s == s_stop && hit < 0))) {
        s_stop = s;
        hit = static_cast<int>(j);
        off_table = false;
      }
    }
    const Vec2 moved = s_stop * dir;
    o.pose.x = c.x() + moved.x();
    o.pose.y = c.y() + moved.y();
    double dtheta = 0.0;
    if (spin != 0.0) {
      dtheta = free_spin(spin, mu, g, r);
      o.pose.theta = wrap_angle(o.pose.theta + dtheta);
    }
    if (off_table) out_.any_object_off_table = true;
    out_.contacts.push_back({step, o.id, dir, speed, moved, dtheta});

    if (hit >= 0 && depth < params_.chain_depth) {
      SceneObject& struck = env_.objects[static_cast<std::size_t>(hit)];
      if (struck.role != ObjectRole::Static) {
        const double rem2 = std::max(0.0, speed * speed - 2.0 * mu * g * s_stop);
        const Vec2 n = rotate(contact_normal(o.pose.position(), struck.footprint()), noise_);
        const double vn = std::sqrt(rem2) * dir.dot(n);
        if (vn > 0.0) slide(static_cast<std::size_t>(hit), params_.transfer * vn * n, depth + 1, step, 0.0);
      }
    }
    return moved;
  }

 private:
  Environment& env_;
  const SimParams& params_;
  double noise_;
  ExecutionOutcome& out_;
};

// Pick-and-drag: the target rides along the remaining sweep until it would
// touch another object or leave the table.
void drag_target(Environment& env, std::size_t ti, const Edge& edge, std::size_t k, const Vec2& grip,
                 ExecutionOutcome& out) {
  SceneObject& t = env.objects[ti];
  const double r = disc_radius(t);
  const Vec2 start = t.pose.position();
  const Vec2 offset = start - grip;
  Vec2 c = start;
  for (std::size_t m = k + 1; m < edge.sweep.size(); ++m) {
    const Vec2 next = edge.sweep[m] + offset;
    const Vec2 delta = next - c;
    const double len = delta.norm();
    if (len == 0.0) continue;
    const Vec2 dir = delta / len;
    double s_stop = len;
    bool stopped = false;
    bool off_table = false;
    const double s_edge = exit_distance(c, dir, env.table_bounds);
    if (s_edge < s_stop) {
      s_stop = s_edge;
      stopped = off_table = true;
    }
    for (std::size_t j = 0; j < env.objects.size(); ++j) {
      if (j == ti) continue;
      const double s = first_contact(c, dir, s_stop, r, env.objects[j].footprint());
      if (s <= s_stop) {
        s_stop = s;
        stopped = true;
        off_table = false;
      }
    }
    c += s_stop * dir;
    if (off_table) out.any_object_off_table = true;
    if (stopped) break;
  }
  t.pose.x = c.x();
  t.pose.y = c.y();
  const Vec2 moved = c - start;
  const double len = moved.norm();
  out.contacts.push_back({k, t.id, len > 0.0 ? Vec2(moved / len) : Vec2::Zero(), 0.0, moved, 0.0});
}

}  // namespace

std::string_view to_string(ObjectRole r) {
  switch (r) {
    case ObjectRole::Target: return "target";
    case ObjectRole::Movable: return "movable";
    case ObjectRole::Static: return "static";
  }
  return "movable";
}

ObjectRole parse_object_role(std::string_view s) {
  if (s == "target") return ObjectRole::Target;
  if (s == "movable") return ObjectRole::Movable;
  if (s == "static") return ObjectRole::Static;
  throw Error("unknown object role '" + std::string(s) + "'");
}

std::size_t Environment::target_index() const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].role == ObjectRole::Target) return i;
  }
  throw Error("scene has no target object");
}

void Environment::validate() const {
  if (!(table_bounds.width() > 0.0 && table_bounds.height() > 0.0)) throw Error("table bounds are empty");
  if (!(gravity_accel > 0.0)) throw Error("gravity must be positive");
  if (sigma_theta < 0.0) throw Error("sigma_theta must be non-negative");
  std::size_t targets = 0;
  for (const auto& o : objects) {
    const std::string name = "object " + std::to_string(o.id);
    if (o.role == ObjectRole::Target) ++targets;
    if (!(o.mass > 0.0)) throw Error(name + ": mass must be positive");
    if (!(o.mu_surface > 0.0)) throw Error(name + ": mu_surface must be positive");
    if (const auto* d = std::get_if<Disc>(&o.shape)) {
      if (!(d->radius > 0.0)) throw Error(name + ": radius must be positive");
    } else {
      const auto& b = std::get<Box>(o.shape);
      if (!(b.width > 0.0 && b.height > 0.0)) throw Error(name + ": box extents must be positive");
      if (o.role != ObjectRole::Static) throw Error(name + ": only static objects may be boxes");
    }
    if (o.role != ObjectRole::Static && !table_bounds.contains(o.pose.position())) {
      throw Error(name + ": centroid lies outside the table");
    }
  }
  if (targets != 1) throw Error("scene must contain exactly one target");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      if (shapes_overlap(objects[i].footprint(), objects[j].footprint(), 1e-9)) {
        throw Error("objects " + std::to_string(objects[i].id) + " and " + std::to_string(objects[j].id) +
                    " overlap");
      }
    }
  }
  const Rect g = bounding_box(goal);
  if (g.x_min < table_bounds.x_min || g.y_min < table_bounds.y_min || g.x_max > table_bounds.x_max ||
      g.y_max > table_bounds.y_max) {
    throw Error("goal region leaves the table");
  }
}

Vec2 free_slide(const Vec2& v0, double mu, double g) {
  if (!(mu > 0.0) || !(g > 0.0)) throw Error("free_slide needs positive mu and g");
  const double speed = v0.norm();
  if (speed == 0.0) return Vec2::Zero();
  return v0 * (speed / (2.0 * mu * g));
}

double free_spin(double omega0, double mu, double g, double radius) {
  if (!(mu > 0.0) || !(g > 0.0) || !(radius > 0.0)) throw Error("free_spin needs positive mu, g and radius");
  // Angular deceleration mu*g/radius, so the rim obeys the linear law.
  return omega0 * std::abs(omega0) * radius / (2.0 * mu * g);
}

double integrate_free_slide(double speed, double mu, double g, double dt) {
  if (!(dt > 0.0)) throw Error("integration step must be positive");
  const double a = mu * g;
  double x = 0.0;
  double v = std::abs(speed);
  while (v > 0.0) {
    const double v_next = std::max(0.0, v - a * dt);
    const double h = v_next > 0.0 ? dt : v / a;  // last step ends when the object stops
    x += 0.5 * (v + v_next) * h;
    v = v_next;
  }
  return x;
}

ExecutionOutcome execute_edge(const Environment& env, const ChainModel& chain, const Edge& edge,
                              const SimParams& params) {
  ExecutionOutcome out;
  out.env_after = env;
  Environment& e = out.env_after;
  double noise = 0.0;
  if (env.sigma_theta > 0.0) {
    Rng rng(derive_seed(env.noise_seed, env.actions_executed));
    noise = env.sigma_theta * standard_normal(rng);
  }
  ++e.actions_executed;

  const std::size_t ti = env.target_index();
  const Vec2 target_start = env.objects[ti].pose.position();
  const double rc = chain.contact_radius;
  const double dt = edge.control.dt;
  const bool can_grasp = params.pick_and_drag && edge.mode == EdgeMode::Prehensile &&
                         edge.point == chain.end_effector_index();
  const InteractionMode grasp = InteractionMode::prehensile(params.window_lo, params.window_hi);
  Sweeper sweeper(e, params, noise, out);

  std::size_t executed = 0;
  bool stop = false;
  for (std::size_t k = 0; k + 1 < edge.sweep.size() && !stop; ++k) {
    executed = k + 1;
    const Vec2 a = edge.sweep[k];
    const Vec2 b = edge.sweep[k + 1];
    const Vec2 v = (b - a) / dt;
    const double seg = (b - a).norm();
    if (seg == 0.0) continue;
    const Vec2 dir = (b - a) / seg;
    Vec2 pos = a;
    double left = seg;
    for (int hits = 0; hits < kMaxHitsPerStep && !stop; ++hits) {
      double s_hit = kInf;
      std::size_t j_hit = 0;
      for (std::size_t j = 0; j < e.objects.size(); ++j) {
        const double s = first_contact(pos, dir, left, rc, e.objects[j].footprint());
        if (s < s_hit) {
          s_hit = s;
          j_hit = j;
        }
      }
      if (s_hit == kInf) break;
      pos += s_hit * dir;
      left = std::max(0.0, left - s_hit);
      SceneObject& obj = e.objects[j_hit];
      if (obj.role == ObjectRole::Static) {
        out.contacts.push_back({k, obj.id, contact_normal(pos, obj.footprint()), 0.0, Vec2::Zero(), 0.0});
        out.robot_blocked = stop = true;
        break;
      }
      if (can_grasp && j_hit == ti) {
        const double heading = point_heading(chain, edge.trace[k].q, edge.point);
        if (window_violation(chain, obj.pose.position(), heading, grasp) == 0.0) {
          drag_target(e, ti, edge, k, pos, out);
          out.grasped = stop = true;
          executed = edge.sweep.size() - 1;
          break;
        }
      }
      const Vec2 n = rotate(contact_normal(pos, obj.footprint()), noise);
      const double vn = v.dot(n);
      Vec2 moved = Vec2::Zero();
      if (vn > 0.0) {
        double spin = 0.0;
        if (params.rotation) spin = -params.transfer * v.dot(perp(n)) / disc_radius(obj);
        moved = sweeper.slide(j_hit, params.transfer * vn * n, 1, k, spin);
      } else {
        out.contacts.push_back({k, obj.id, n, 0.0, Vec2::Zero(), 0.0});
      }
      if (moved.norm() < kBlocked) out.robot_blocked = stop = true;
    }
  }
  out.steps_executed = executed;
  out.target_displacement = e.objects[ti].pose.position() - target_start;
  return out;
}

double lognormal_factor(Rng& rng, double sigma) { return std::exp(sigma * standard_normal(rng)); }

Environment perturb(const Environment& env, double sigma_mu, std::uint64_t seed, double sigma_theta) {
  if (sigma_mu < 0.0 || sigma_theta < 0.0) throw Error("perturbation sigmas must be non-negative");
  Environment out = env;
  if (sigma_mu > 0.0) {
    Rng rng(derive_seed(seed, "friction"));
    for (auto& o : out.objects) o.mu_surface *= lognormal_factor(rng, sigma_mu);
  }
  if (sigma_theta > 0.0) {
    out.sigma_theta = sigma_theta;
    out.noise_seed = derive_seed(seed, "contact-noise");
    out.actions_executed = 0;
  }
  return out;
}

bool goal_reached(const Environment& env) { return target_goal_distance(env) == 0.0; }

double target_goal_distance(const Environment& env) {
  return distance_point_shape(env.target().pose.position(), env.goal);
}

bool same_poses(const Environment& a, const Environment& b) {
  if (a.objects.size() != b.objects.size()) return false;
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    if (a.objects[i].id != b.objects[i].id || !(a.objects[i].pose == b.objects[i].pose)) return false;
  }
  return true;
}

void write_outcome_csv(std::ostream& os, const ExecutionOutcome& outcome, bool header) {
  if (header) os << "step,object,dx,dy,dtheta\n";
  char buf[160];
  for (const auto& c : outcome.contacts) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%.17g\n", c.step, c.object, c.displacement.x(),
                  c.displacement.y(), c.rotation);
    os << buf;
  }
}

}  // namespace lmj
