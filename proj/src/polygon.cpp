#include "refmap/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace refmap {

Polygon Polygon::rectangle(double x0, double y0, double x1, double y1) {
    if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("rectangle must have positive extent");
    return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

Polygon Polygon::circle(Point2 center, double radius, std::size_t n) {
    if (!(radius > 0.0) || n < 3) throw std::invalid_argument("circle needs radius > 0 and n >= 3");
    Polygon p;
    p.vertices.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        p.vertices.push_back(center + Point2{radius * std::cos(a), radius * std::sin(a)});
    }
    return p;
}

double Polygon::signed_area() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += vertex(i).cross(vertex(i + 1));
    return 0.5 * s;
}

double Polygon::area() const { return std::abs(signed_area()); }

double Polygon::perimeter() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += distance(vertex(i), vertex(i + 1));
    return s;
}

Box Polygon::bounds() const {
    if (vertices.empty()) return {};
    Box b{vertices.front(), vertices.front()};
    for (const auto& v : vertices) {
        b.lo.x = std::min(b.lo.x, v.x);
        b.lo.y = std::min(b.lo.y, v.y);
        b.hi.x = std::max(b.hi.x, v.x);
        b.hi.y = std::max(b.hi.y, v.y);
    }
    return b;
}

Point2 closest_on_segment(const Point2& p, const Point2& a, const Point2& b) {
    const Point2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 == 0.0) return a;
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return a + ab * t;
}

bool Polygon::contains(const Point2& p) const {
    const double tol = 1e-9 * std::max(1.0, std::max(bounds().width(), bounds().height()));
    bool inside = false;
    for (std::size_t i = 0, j = size() - 1; i < size(); j = i++) {
        const Point2& a = vertices[i];
        const Point2& b = vertices[j];
        if (distance(closest_on_segment(p, a, b), p) <= tol) return true;
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xc) inside = !inside;
        }
    }
    return inside;
}

namespace {

int orientation(const Point2& a, const Point2& b, const Point2& c) {
    const double v = (b - a).cross(c - a);
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

bool on_segment(const Point2& a, const Point2& b, const Point2& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

bool Polygon::is_simple() const {
    const std::size_t n = size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // adjacent edges share a vertex by construction
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            if (segments_intersect(vertex(i), vertex(i + 1), vertex(j), vertex(j + 1))) return false;
        }
    }
    return area() > 0.0;
}

Point2 Polygon::clamp(const Point2& p) const {
    if (contains(p)) return p;
    Point2 best = vertices.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) {
        const Point2 c = closest_on_segment(p, vertex(i), vertex(i + 1));
        const double d = distance(c, p);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

double shape_gamma(const Polygon& poly) { return poly.perimeter() / std::sqrt(poly.area()); }

std::vector<Point2> polygon_boundary_points(const Polygon& poly, double spacing, double offset) {
    if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
    if (offset < 0.0) throw std::invalid_argument("offset must be non-negative");
    const double perim = poly.perimeter();
    const auto count = static_cast<std::size_t>(std::ceil(perim / spacing - 1e-9));
    const double step = perim / static_cast<double>(count);
    // Inward normal: left of each edge for counter-clockwise polygons.
    const double inward = poly.signed_area() > 0.0 ? 1.0 : -1.0;

    std::vector<Point2> out;
    out.reserve(count);
    std::size_t edge = 0;
    double edge_start = 0.0;
    double edge_len = distance(poly.vertex(0), poly.vertex(1));
    for (std::size_t k = 0; k < count; ++k) {
        const double s = step * static_cast<double>(k);
        while (s >= edge_start + edge_len - 1e-9 * perim && edge + 1 < poly.size()) {
            edge_start += edge_len;
            ++edge;
            edge_len = distance(poly.vertex(edge), poly.vertex(edge + 1));
        }
        const Point2 a = poly.vertex(edge);
        const Point2 b = poly.vertex(edge + 1);
        const Point2 dir = (b - a) / edge_len;
        const Point2 normal{-dir.y * inward, dir.x * inward};
        if (s - edge_start < 1e-9 * perim) {
            // On a vertex: step along the bisector so both edges sit `offset` away.
            const Point2 pa = poly.vertex(edge + poly.size() - 1);
            const Point2 pdir = (a - pa) / distance(a, pa);
            const Point2 pnormal{-pdir.y * inward, pdir.x * inward};
            const double c = 1.0 + normal.dot(pnormal);
            if (c > 1e-6) {
                out.push_back(a + (normal + pnormal) * (offset / c));
                continue;
            }
        }
        out.push_back(a + dir * (s - edge_start) + normal * offset);
    }
    return out;
}

std::vector<Point2> polygon_area_points(const Polygon& poly, double pitch) {
    if (!(pitch > 0.0)) throw std::invalid_argument("pitch must be positive");
    const Box b = poly.bounds();
    const auto nx = static_cast<std::size_t>(std::ceil(b.width() / pitch - 1e-9));
    const auto ny = static_cast<std::size_t>(std::ceil(b.height() / pitch - 1e-9));
    std::vector<Point2> out;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const Point2 c{b.lo.x + (static_cast<double>(i) + 0.5) * pitch,
                           b.lo.y + (static_cast<double>(j) + 0.5) * pitch};
            if (poly.contains(c)) out.push_back(c);
        }
    }
    return out;
}

std::size_t grid_line_crossings(const Polygon& poly, double pitch) {
    if (!(pitch > 0.0)) throw std::invalid_argument("pitch must be positive");
    const Box b = poly.bounds();
    auto lines_in = [&](double u0, double u1, double origin) {
        // lattice values origin + k*pitch in the half-open span (min, max]
        const double lo = (std::min(u0, u1) - origin) / pitch;
        const double hi = (std::max(u0, u1) - origin) / pitch;
        const auto k_hi = static_cast<long long>(std::floor(hi + 1e-9));
        const auto k_lo = static_cast<long long>(std::floor(lo + 1e-9));
        return static_cast<std::size_t>(k_hi - k_lo);
    };
    std::size_t count = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2 a = poly.vertex(i);
        const Point2 c = poly.vertex(i + 1);
        count += lines_in(a.x, c.x, b.lo.x);
        count += lines_in(a.y, c.y, b.lo.y);
    }
    return count;
}

}  // namespace refmap
