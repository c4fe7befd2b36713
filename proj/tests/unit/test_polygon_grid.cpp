#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "refmap/grid.hpp"
#include "refmap/polygon.hpp"
#include "support.hpp"

using namespace refmap;

TEST(Polygon, RectangleBasics) {
    const Polygon r = Polygon::rectangle(0, 0, 4, 3);
    EXPECT_DOUBLE_EQ(r.area(), 12.0);
    EXPECT_DOUBLE_EQ(r.perimeter(), 14.0);
    EXPECT_GT(r.signed_area(), 0.0);
    EXPECT_TRUE(r.contains({2, 1}));
    EXPECT_TRUE(r.contains({4, 3}));  // edges count as inside
    EXPECT_FALSE(r.contains({4.001, 1}));
    EXPECT_TRUE(r.is_simple());
}

TEST(Polygon, BowtieIsNotSimple) {
    const Polygon p{{{0, 0}, {2, 2}, {2, 0}, {0, 2}}};
    EXPECT_FALSE(p.is_simple());
}

TEST(Polygon, ClampReturnsInteriorPointsUnchanged) {
    const Polygon r = Polygon::rectangle(0, 0, 10, 10);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 500; ++k) {
        const Point2 p = gen::uniform_point(rng, -5, 15);
        const Point2 c = r.clamp(p);
        EXPECT_TRUE(r.contains(c));
        if (r.contains(p)) {
            EXPECT_EQ(c, p);
        } else {
            const Point2 box{std::clamp(p.x, 0.0, 10.0), std::clamp(p.y, 0.0, 10.0)};
            EXPECT_NEAR(distance(c, box), 0.0, 1e-12);
        }
    }
}

TEST(Polygon, ContainsAgreesWithAreaByMonteCarlo) {
    const Polygon p{{{0, 0}, {6, 0}, {6, 2}, {2, 2}, {2, 6}, {0, 6}}};  // L shape, area 20
    std::mt19937_64 rng(2);
    int in = 0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) in += p.contains(gen::uniform_point(rng, 0, 6)) ? 1 : 0;
    EXPECT_NEAR(36.0 * in / n, p.area(), 0.15);
}

TEST(Polygon, ShapeGamma) {
    EXPECT_NEAR(shape_gamma(Polygon::rectangle(0, 0, 7, 7)), 4.0, 1e-12);
    EXPECT_NEAR(shape_gamma(Polygon::circle({0, 0}, 5.0, 2048)), 2.0 * std::sqrt(std::numbers::pi), 1e-4);
}

TEST(Polygon, BoundaryPointsAreSpacedAndInset) {
    const Polygon r = Polygon::rectangle(0, 0, 10, 5);
    const auto pts = polygon_boundary_points(r, 0.5, 0.0);
    EXPECT_EQ(pts.size(), 60u);
    const auto inset = polygon_boundary_points(r, 0.5, 0.25);
    for (const Point2& p : inset) {
        EXPECT_TRUE(r.contains(p));
        const double d = std::min({p.x, 10 - p.x, p.y, 5 - p.y});
        EXPECT_NEAR(d, 0.25, 1e-9);
    }
}

TEST(Polygon, AreaPointsCountMatchesArea) {
    const Polygon r = Polygon::rectangle(0, 0, 10, 10);
    EXPECT_EQ(polygon_area_points(r, 0.5).size(), 400u);
}

TEST(Polygon, GridLineCrossingsOfSquare) {
    EXPECT_EQ(grid_line_crossings(Polygon::rectangle(0, 0, 100, 100), 0.5), 800u);
}

TEST(Polygon, SegmentIntersection) {
    EXPECT_TRUE(segments_intersect({0, 0}, {2, 2}, {0, 2}, {2, 0}));
    EXPECT_TRUE(segments_intersect({0, 0}, {2, 0}, {2, 0}, {3, 1}));  // touching
    EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
}

TEST(Grid, CoveringPutsNodesAtCellCentres) {
    const GridGeometry g = GridGeometry::covering({{0, 0}, {10, 5}}, 0.5);
    EXPECT_EQ(g.nx, 20u);
    EXPECT_EQ(g.ny, 10u);
    EXPECT_DOUBLE_EQ(g.origin.x, 0.25);
    const auto idx = g.nearest({0.74, 0.26});
    ASSERT_TRUE(idx.has_value());
    EXPECT_EQ(*idx, g.index(1, 0));
    EXPECT_FALSE(g.nearest({-0.01, 1}).has_value());
}

TEST(Grid, InterpolateReproducesLinearFields) {
    const GridGeometry g{{0, 0}, 0.5, 30, 20};
    GridField f(g);
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const Point2 c = g.center(i, j);
            f.at(i, j) = 2.0 * c.x - 3.0 * c.y + 1.0;
        }
    }
    std::mt19937_64 rng(3);
    for (int k = 0; k < 200; ++k) {
        const Point2 p{gen::uniform(rng, 0, 14.5), gen::uniform(rng, 0, 9.5)};
        EXPECT_NEAR(f.interpolate(p), 2.0 * p.x - 3.0 * p.y + 1.0, 1e-9);
    }
}

TEST(Grid, SplatIsTheAdjointOfInterpolate) {
    const GridGeometry g{{-1, -1}, 0.25, 17, 13};
    std::mt19937_64 rng(4);
    GridField field(g);
    for (auto& v : field.values) v = gen::uniform(rng, -1, 1);
    for (int k = 0; k < 100; ++k) {
        const Point2 p{gen::uniform(rng, -1.5, 4), gen::uniform(rng, -1.5, 3)};
        const double w = gen::uniform(rng, -2, 2);
        GridField dep(g);
        dep.splat(p, w);
        double inner = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) inner += dep.values[i] * field.values[i];
        EXPECT_NEAR(inner, w * field.interpolate(p), 1e-12);
    }
}

TEST(Grid, PolygonMaskAreaApproachesPolygonArea) {
    const Polygon c = Polygon::circle({5, 5}, 4, 256);
    const GridGeometry g = GridGeometry::covering(c.bounds(), 0.05);
    EXPECT_NEAR(polygon_mask(g, c).area(), c.area(), 0.02 * c.area());
}

TEST(Grid, MaskSubsetAndContains) {
    const GridGeometry g{{0, 0}, 1, 4, 4};
    GridMask a(g), b(g);
    a.cells[5] = 1;
    b.cells[5] = b.cells[6] = 1;
    EXPECT_TRUE(a.subset_of(b));
    EXPECT_FALSE(b.subset_of(a));
    EXPECT_TRUE(a.contains(g.center(5)));
    EXPECT_EQ(b.indices(), (std::vector<std::size_t>{5, 6}));
}

TEST(Coverage, LevelIsLargestThatCovers) {
    EXPECT_EQ(coverage_count(20, 0.95), 19u);
    EXPECT_EQ(coverage_count(10, 0.95), 10u);
    std::vector<double> v{5, 1, 4, 2, 3};
    EXPECT_DOUBLE_EQ(level_for_coverage(v, 0.6), 3.0);
    EXPECT_DOUBLE_EQ(level_for_coverage(v, 1.0), 1.0);
}

TEST(Coverage, PropertyFractionAtOrAboveLevelSuffices) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 300;
        std::vector<double> v(n);
        for (auto& x : v) x = std::floor(gen::uniform(rng, 0, 20));  // ties on purpose
        const double cov = gen::uniform(rng, 0.05, 1.0);
        const double t = level_for_coverage(v, cov);
        std::size_t above = 0, strictly = 0;
        for (double x : v) {
            above += x >= t ? 1 : 0;
            strictly += x > t ? 1 : 0;
        }
        EXPECT_GE(above, coverage_count(n, cov));
        EXPECT_LT(strictly, coverage_count(n, cov));  // any larger level would fail
    }
}
