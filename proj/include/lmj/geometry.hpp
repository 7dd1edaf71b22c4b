#pragma once

#include "lmj/common.hpp"

#include <optional>
#include <variant>

namespace lmj {

struct PlanarPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]

  Vec2 position() const { return {x, y}; }
  bool operator==(const PlanarPose&) const = default;
};

struct Disc {
  double radius = 0.0;
  bool operator==(const Disc&) const = default;
};

/// Box with full extents (width along the local x axis).
struct Box {
  double width = 0.0;
  double height = 0.0;
  bool operator==(const Box&) const = default;
};

using Shape = std::variant<Disc, Box>;

/// Axis-aligned rectangle.
struct Rect {
  double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
  bool operator==(const Rect&) const = default;
};

/// A shape placed in the world.
struct Footprint {
  Shape shape;
  PlanarPose pose;
  bool operator==(const Footprint&) const = default;
};

double distance_point_segment(const Vec2& p, const Vec2& a, const Vec2& b);

/// Distance from a point to a placed shape; zero when inside.
double distance_point_shape(const Vec2& p, const Footprint& f);

/// Closest point of a placed shape to p (p itself when inside).
Vec2 closest_point_on_shape(const Vec2& p, const Footprint& f);

/// Distance from a segment to a placed shape; zero when they intersect.
double distance_segment_shape(const Vec2& a, const Vec2& b, const Footprint& f);

/// True when the polyline passes within `inflate` of the shape.
bool polyline_hits(std::span<const Vec2> polyline, const Footprint& f, double inflate);

/// Overlap test between two placed shapes, shrunk by `tolerance`.
bool shapes_overlap(const Footprint& a, const Footprint& b, double tolerance = 0.0);

/// Axis-aligned bounding box of a placed shape grown by `inflate`.
Rect bounding_box(const Footprint& f, double inflate = 0.0);

/// Radius of the smallest disc around the pose enclosing the shape.
double bounding_radius(const Shape& s);

}  // namespace lmj
