#pragma once
// Simple closed polygons (last vertex implicitly joined to the first).

#include <vector>

#include "refmap/types.hpp"

namespace refmap {

struct Box {
    Point2 lo;
    Point2 hi;
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
};

struct Polygon {
    std::vector<Point2> vertices;

    static Polygon rectangle(double x0, double y0, double x1, double y1);
    /// Regular n-gon approximating a circle.
    static Polygon circle(Point2 center, double radius, std::size_t n);

    std::size_t size() const { return vertices.size(); }
    const Point2& vertex(std::size_t i) const { return vertices[i % vertices.size()]; }

    double signed_area() const;
    double area() const;
    double perimeter() const;
    Box bounds() const;
    /// Points on an edge count as inside.
    bool contains(const Point2& p) const;
    bool is_simple() const;
    /// Closest point of the polygon (interior or boundary) to p.
    Point2 clamp(const Point2& p) const;
    bool operator==(const Polygon&) const = default;
};

/// Proper or touching intersection of segments ab and cd.
bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

/// Closest point to p on segment ab.
Point2 closest_on_segment(const Point2& p, const Point2& a, const Point2& b);

/// Perimeter over square root of area.
double shape_gamma(const Polygon& poly);

/// Points spaced evenly by arc length along the boundary (step
/// perimeter / ceil(perimeter / spacing)), each moved `offset` along the
/// inward normal of its edge (points on a vertex move along the bisector).
std::vector<Point2> polygon_boundary_points(const Polygon& poly, double spacing, double offset);

/// Cell centers of a square lattice at `pitch` that fall inside the polygon.
std::vector<Point2> polygon_area_points(const Polygon& poly, double pitch);

/// Number of lattice lines (x = k*pitch or y = k*pitch) crossed by the
/// boundary, the discrete perimeter count used for the area/boundary
/// test-point comparison.
std::size_t grid_line_crossings(const Polygon& poly, double pitch);

}  // namespace refmap
