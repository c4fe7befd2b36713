#pragma once
// Regular 2D grids. Node (i, j) sits at origin + (i*pitch, j*pitch) and owns
// the square cell of side `pitch` centred on it. Storage is row-major with x
// varying fastest: index = j*nx + i.

#include <cstdint>
#include <optional>
#include <vector>

#include "refmap/polygon.hpp"
#include "refmap/types.hpp"

namespace refmap {

struct GridGeometry {
    Point2 origin;
    double pitch{1.0};
    std::size_t nx{0};
    std::size_t ny{0};

    /// Cells of side `pitch` covering `box` exactly or with a partial last cell.
    static GridGeometry covering(const Box& box, double pitch);

    std::size_t size() const { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
    Point2 center(std::size_t i, std::size_t j) const {
        return origin + Point2{static_cast<double>(i) * pitch, static_cast<double>(j) * pitch};
    }
    Point2 center(std::size_t idx) const { return center(idx % nx, idx / nx); }
    double cell_area() const { return pitch * pitch; }
    /// Nearest node; nullopt when p falls outside every cell.
    std::optional<std::size_t> nearest(const Point2& p) const;
    /// Continuous coordinate of p in node units.
    Point2 to_grid(const Point2& p) const { return (p - origin) / pitch; }
    bool operator==(const GridGeometry&) const = default;
};

struct GridField {
    GridGeometry geom;
    std::vector<double> values;

    GridField() = default;
    explicit GridField(const GridGeometry& g, double fill = 0.0) : geom(g), values(g.size(), fill) {}

    double& at(std::size_t i, std::size_t j) { return values[geom.index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return values[geom.index(i, j)]; }

    /// Bilinear interpolation between nodes; 0 outside the node lattice.
    double interpolate(const Point2& p) const;
    /// Adjoint of interpolate: deposit `w` onto the four surrounding nodes.
    void splat(const Point2& p, double w);
    double norm() const;
};

/// Boolean cell mask (1 byte per cell).
struct GridMask {
    GridGeometry geom;
    std::vector<std::uint8_t> cells;

    GridMask() = default;
    explicit GridMask(const GridGeometry& g, bool fill = false) : geom(g), cells(g.size(), fill ? 1 : 0) {}

    bool at(std::size_t idx) const { return cells[idx] != 0; }
    std::size_t count() const;
    double area() const { return static_cast<double>(count()) * geom.cell_area(); }
    std::vector<std::size_t> indices() const;
    bool empty() const { return count() == 0; }
    /// Cell containing p is set.
    bool contains(const Point2& p) const;
    /// Every cell set in *this is set in other (same geometry required).
    bool subset_of(const GridMask& other) const;
};

/// Mask of cells whose centre lies in the polygon.
GridMask polygon_mask(const GridGeometry& g, const Polygon& poly);

/// Smallest count m of the `n` values such that m / n >= coverage (rounded up).
std::size_t coverage_count(std::size_t n, double coverage);

/// Largest level t such that at least a `coverage` fraction of `samples`
/// are >= t; ties count as included. Samples may contain -inf.
double level_for_coverage(std::vector<double> samples, double coverage);

}  // namespace refmap
