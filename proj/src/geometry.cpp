#include "lmj/geometry.hpp"

#include <algorithm>
#include <array>

namespace lmj {

namespace {

Vec2 to_local(const Vec2& p, const PlanarPose& pose) {
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  const Vec2 d = p - pose.position();
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
}

Vec2 to_world(const Vec2& p, const PlanarPose& pose) {
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  return {pose.x + c * p.x() - s * p.y(), pose.y + s * p.x() + c * p.y()};
}

std::array<Vec2, 4> box_corners(const Box& b, const PlanarPose& pose) {
  const double hx = 0.5 * b.width, hy = 0.5 * b.height;
  return {to_world({-hx, -hy}, pose), to_world({hx, -hy}, pose), to_world({hx, hy}, pose),
          to_world({-hx, hy}, pose)};
}

// Liang-Barsky clip of a local-frame segment against the centered box.
bool segment_crosses_box(const Vec2& a, const Vec2& b, double hx, double hy) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x() + hx, hx - a.x(), a.y() + hy, hy - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

double distance_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

Vec2 closest_point_on_shape(const Vec2& p, const Footprint& f) {
  return std::visit(
      [&](const auto& s) -> Vec2 {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          const Vec2 d = p - f.pose.position();
          const double n = d.norm();
          if (n <= s.radius) return p;
          return f.pose.position() + d * (s.radius / n);
        } else {
          const Vec2 l = to_local(p, f.pose);
          const Vec2 c{std::clamp(l.x(), -0.5 * s.width, 0.5 * s.width),
                       std::clamp(l.y(), -0.5 * s.height, 0.5 * s.height)};
          return to_world(c, f.pose);
        }
      },
      f.shape);
}

double distance_point_shape(const Vec2& p, const Footprint& f) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return std::max(0.0, (p - f.pose.position()).norm() - s.radius);
        } else {
          const Vec2 l = to_local(p, f.pose);
          const double dx = std::max(std::abs(l.x()) - 0.5 * s.width, 0.0);
          const double dy = std::max(std::abs(l.y()) - 0.5 * s.height, 0.0);
          return std::hypot(dx, dy);
        }
      },
      f.shape);
}

double distance_segment_shape(const Vec2& a, const Vec2& b, const Footprint& f) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return std::max(0.0, distance_point_segment(f.pose.position(), a, b) - s.radius);
        } else {
          const double hx = 0.5 * s.width, hy = 0.5 * s.height;
          if (segment_crosses_box(to_local(a, f.pose), to_local(b, f.pose), hx, hy)) return 0.0;
          double d = std::min(distance_point_shape(a, f), distance_point_shape(b, f));
          for (const Vec2& c : box_corners(s, f.pose)) d = std::min(d, distance_point_segment(c, a, b));
          return d;
        }
      },
      f.shape);
}

bool polyline_hits(std::span<const Vec2> polyline, const Footprint& f, double inflate) {
  if (polyline.empty()) return false;
  if (polyline.size() == 1) return distance_point_shape(polyline[0], f) <= inflate;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    if (distance_segment_shape(polyline[i], polyline[i + 1], f) <= inflate) return true;
  }
  return false;
}

bool shapes_overlap(const Footprint& a, const Footprint& b, double tolerance) {
  const auto* da = std::get_if<Disc>(&a.shape);
  const auto* db = std::get_if<Disc>(&b.shape);
  if (da && db) {
    return (a.pose.position() - b.pose.position()).norm() < da->radius + db->radius - tolerance;
  }
  if (da) return distance_point_shape(a.pose.position(), b) < da->radius - tolerance;
  if (db) return distance_point_shape(b.pose.position(), a) < db->radius - tolerance;

  // Separating axis test for two oriented boxes.
  const auto& ba = std::get<Box>(a.shape);
  const auto& bb = std::get<Box>(b.shape);
  const auto ca = box_corners(ba, a.pose);
  const auto cb = box_corners(bb, b.pose);
  const Vec2 axes[4] = {unit(a.pose.theta), perp(unit(a.pose.theta)), unit(b.pose.theta),
                        perp(unit(b.pose.theta))};
  for (const Vec2& ax : axes) {
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (const Vec2& c : ca) {
      amin = std::min(amin, c.dot(ax));
      amax = std::max(amax, c.dot(ax));
    }
    for (const Vec2& c : cb) {
      bmin = std::min(bmin, c.dot(ax));
      bmax = std::max(bmax, c.dot(ax));
    }
    if (amax - tolerance <= bmin || bmax - tolerance <= amin) return false;
  }
  return true;
}

Rect bounding_box(const Footprint& f, double inflate) {
  return std::visit(
      [&](const auto& s) -> Rect {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          const double r = s.radius + inflate;
          return {f.pose.x - r, f.pose.y - r, f.pose.x + r, f.pose.y + r};
        } else {
          Rect r{1e300, 1e300, -1e300, -1e300};
          for (const Vec2& c : box_corners(s, f.pose)) {
            r.x_min = std::min(r.x_min, c.x());
            r.y_min = std::min(r.y_min, c.y());
            r.x_max = std::max(r.x_max, c.x());
            r.y_max = std::max(r.y_max, c.y());
          }
          r.x_min -= inflate;
          r.y_min -= inflate;
          r.x_max += inflate;
          r.y_max += inflate;
          return r;
        }
      },
      f.shape);
}

double bounding_radius(const Shape& s) {
  if (const auto* d = std::get_if<Disc>(&s)) return d->radius;
  const auto& b = std::get<Box>(s);
  return 0.5 * std::hypot(b.width, b.height);
}

}  // namespace lmj
