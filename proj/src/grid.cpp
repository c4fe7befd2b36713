#include "refmap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace refmap {

GridGeometry GridGeometry::covering(const Box& box, double pitch) {
    if (!(pitch > 0.0)) throw std::invalid_argument("grid pitch must be positive");
    const auto nx = static_cast<std::size_t>(std::max(1.0, std::ceil(box.width() / pitch - 1e-9)));
    const auto ny = static_cast<std::size_t>(std::max(1.0, std::ceil(box.height() / pitch - 1e-9)));
    return {box.lo + Point2{0.5 * pitch, 0.5 * pitch}, pitch, nx, ny};
}

std::optional<std::size_t> GridGeometry::nearest(const Point2& p) const {
    const Point2 g = to_grid(p);
    const double fi = std::floor(g.x + 0.5);
    const double fj = std::floor(g.y + 0.5);
    if (!(fi >= 0.0 && fj >= 0.0 && fi < static_cast<double>(nx) && fj < static_cast<double>(ny))) {
        return std::nullopt;
    }
    return index(static_cast<std::size_t>(fi), static_cast<std::size_t>(fj));
}

namespace {

struct Stencil {
    std::size_t i0, j0;
    double fx, fy;
};

// Lower-left node and fractional offsets; nullopt outside the lattice.
std::optional<Stencil> stencil(const GridGeometry& g, const Point2& p) {
    const Point2 u = g.to_grid(p);
    if (!(u.x >= 0.0 && u.y >= 0.0)) return std::nullopt;
    const double maxi = static_cast<double>(g.nx - 1);
    const double maxj = static_cast<double>(g.ny - 1);
    if (!(u.x <= maxi && u.y <= maxj)) return std::nullopt;
    double i0 = std::floor(u.x);
    double j0 = std::floor(u.y);
    // right/top edge: use the last full interval
    if (i0 >= maxi) i0 = std::max(0.0, maxi - 1.0);
    if (j0 >= maxj) j0 = std::max(0.0, maxj - 1.0);
    return Stencil{static_cast<std::size_t>(i0), static_cast<std::size_t>(j0), u.x - i0, u.y - j0};
}

}  // namespace

double GridField::interpolate(const Point2& p) const {
    const auto s = stencil(geom, p);
    if (!s) return 0.0;
    const std::size_t i1 = std::min(s->i0 + 1, geom.nx - 1);
    const std::size_t j1 = std::min(s->j0 + 1, geom.ny - 1);
    const double v00 = at(s->i0, s->j0);
    const double v10 = at(i1, s->j0);
    const double v01 = at(s->i0, j1);
    const double v11 = at(i1, j1);
    return (1.0 - s->fy) * ((1.0 - s->fx) * v00 + s->fx * v10) + s->fy * ((1.0 - s->fx) * v01 + s->fx * v11);
}

void GridField::splat(const Point2& p, double w) {
    const auto s = stencil(geom, p);
    if (!s) return;
    const std::size_t i1 = std::min(s->i0 + 1, geom.nx - 1);
    const std::size_t j1 = std::min(s->j0 + 1, geom.ny - 1);
    at(s->i0, s->j0) += w * (1.0 - s->fx) * (1.0 - s->fy);
    at(i1, s->j0) += w * s->fx * (1.0 - s->fy);
    at(s->i0, j1) += w * (1.0 - s->fx) * s->fy;
    at(i1, j1) += w * s->fx * s->fy;
}

double GridField::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

std::size_t GridMask::count() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](auto c) { return c != 0; }));
}

std::vector<std::size_t> GridMask::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (cells[k]) out.push_back(k);
    }
    return out;
}

bool GridMask::contains(const Point2& p) const {
    const auto idx = geom.nearest(p);
    return idx && cells[*idx] != 0;
}

bool GridMask::subset_of(const GridMask& other) const {
    if (!(geom == other.geom)) throw std::invalid_argument("mask geometries differ");
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (cells[k] && !other.cells[k]) return false;
    }
    return true;
}

GridMask polygon_mask(const GridGeometry& g, const Polygon& poly) {
    GridMask m(g);
    for (std::size_t k = 0; k < g.size(); ++k) m.cells[k] = poly.contains(g.center(k)) ? 1 : 0;
    return m;
}

std::size_t coverage_count(std::size_t n, double coverage) {
    const double want = std::ceil(coverage * static_cast<double>(n) - 1e-9);
    return static_cast<std::size_t>(std::clamp(want, 1.0, static_cast<double>(n)));
}

double level_for_coverage(std::vector<double> samples, double coverage) {
    if (samples.empty()) throw std::invalid_argument("level_for_coverage needs samples");
    const std::size_t m = coverage_count(samples.size(), coverage);
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(m - 1), samples.end(),
                     std::greater<>());
    return samples[m - 1];
}

}  // namespace refmap
