#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "refmap/bounds.hpp"
#include "support.hpp"

using namespace refmap;

namespace {

BoundInputs inputs(double vol_sa, double ratio, std::size_t n_r) { return {vol_sa, vol_sa / ratio, n_r, 0.05}; }

}  // namespace

TEST(Bound, PublishedRadii) {
    EXPECT_NEAR(equivalent_radius(ambiguity_lower_bound(inputs(40000, 15.9, 3))), 1.62, 0.05);
    EXPECT_NEAR(equivalent_radius(ambiguity_lower_bound(inputs(40000, 31.8, 3))), 0.60, 0.05);
}

TEST(Bound, ClosedFormAgreesWithDirectPower) {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 500; ++k) {
        const double vsa = gen::uniform(rng, 10, 1e5);
        const double ratio = gen::uniform(rng, 1.01, 100);
        const auto n = static_cast<std::size_t>(1 + rng() % 6);
        const double direct = vsa / std::pow(1.0 + ratio, static_cast<double>(n));
        EXPECT_NEAR(ambiguity_lower_bound(inputs(vsa, ratio, n)), direct, 1e-12 * vsa);
    }
}

TEST(Bound, ShrinksWithMorePathsAndLargerRatio) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 300; ++k) {
        const double vsa = gen::uniform(rng, 100, 1e5);
        const double ratio = gen::uniform(rng, 1.01, 64);
        const auto n = static_cast<std::size_t>(1 + rng() % 5);
        const double b = ambiguity_lower_bound(inputs(vsa, ratio, n));
        EXPECT_LT(ambiguity_lower_bound(inputs(vsa, ratio, n + 1)), b);
        EXPECT_LT(ambiguity_lower_bound(inputs(vsa, ratio * 1.1, n)), b);
        EXPECT_LT(b, vsa);
    }
}

TEST(Bound, AccuracyRatioIdentity) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 300; ++k) {
        const BoundInputs b = inputs(gen::uniform(rng, 100, 1e5), gen::uniform(rng, 1.01, 64), 1 + rng() % 6);
        EXPECT_NEAR(log_accuracy_ratio(b.vol_sa, ambiguity_lower_bound(b)), ra_upper_bound(b), 1e-12 * ra_upper_bound(b));
    }
}

TEST(Bound, DoublingPathsSquaresTheShrinkFactor) {
    const BoundInputs one = inputs(40000, 15.9, 3);
    const BoundInputs two = inputs(40000, 15.9, 6);
    const double f1 = ambiguity_lower_bound(one) / one.vol_sa;
    const double f2 = ambiguity_lower_bound(two) / two.vol_sa;
    EXPECT_NEAR(f2, f1 * f1, 1e-12 * f1 * f1);
}

TEST(Bound, InputsAreValidated) {
    EXPECT_THROW(ambiguity_lower_bound({0, 1, 3, 0.05}), std::invalid_argument);
    EXPECT_THROW(ambiguity_lower_bound({1, -1, 3, 0.05}), std::invalid_argument);
    EXPECT_THROW(ambiguity_lower_bound({1, 1, 3, 1.0}), std::invalid_argument);
    EXPECT_THROW(log_accuracy_ratio(1, 0), std::invalid_argument);
}

TEST(OffsetCloud, UniformDiskAreaIsRecovered) {
    std::mt19937_64 rng(4);
    const double r = 3.0;
    std::vector<Point2> pts;
    while (pts.size() < 20000) {
        const Point2 p = gen::uniform_point(rng, -r, r);
        if (p.norm() <= r) pts.push_back(p);
    }
    const double area = offset_cloud_area(pts, 0.05, {0.05, 0.2});
    EXPECT_NEAR(area, std::numbers::pi * r * r, 0.1 * std::numbers::pi * r * r);
}

TEST(OffsetCloud, AreaGrowsAsEpsilonShrinks) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Point2> pts;
    for (int k = 0; k < 3000; ++k) pts.push_back({n(rng), 0.5 * n(rng)});
    double prev = 0.0;
    for (double eps : {0.5, 0.2, 0.05, 0.01}) {
        const double a = offset_cloud_area(pts, eps);
        EXPECT_GE(a, prev);
        prev = a;
    }
}

TEST(OffsetCloud, IsOrderIndependent) {
    std::mt19937_64 rng(6);
    std::vector<Point2> pts;
    for (int k = 0; k < 500; ++k) pts.push_back(gen::uniform_point(rng, -2, 2));
    const double a = offset_cloud_area(pts, 0.05);
    std::shuffle(pts.begin(), pts.end(), rng);
    EXPECT_EQ(offset_cloud_area(pts, 0.05), a);
}

TEST(GroundTruthSheaf, MarksReflectorCells) {
    EnvironmentSpec s;
    s.family = EnvironmentFamily::point_list;
    s.width = s.height = 10;
    s.points = {{2.1, 3.3}, {7.7, 8.2}};
    const Environment env = generate_environment(s, 0);
    const GridGeometry g = GridGeometry::covering({{0, 0}, {10, 10}}, 0.5);
    const SheafMask m = ground_truth_sheaf(env, g, 0.05);
    EXPECT_EQ(m.mask.count(), 2u);
    for (const Point2& p : s.points) EXPECT_TRUE(m.mask.contains(p));
}

TEST(MonteCarlo, SmallScatterEnsembleIsReproducible) {
    AmbiguityConfig cfg;
    cfg.spec.family = EnvironmentFamily::random_scatter;
    cfg.spec.target_ratio = 15.9;
    cfg.structures = 12;
    const AmbiguityEstimate est = monte_carlo_ambiguity(cfg, 7);
    EXPECT_EQ(est.trials + est.skipped, 12u);
    ASSERT_GT(est.trials, 6u);
    EXPECT_NEAR(est.mean_ratio, 15.9, 0.05 * 15.9);
    EXPECT_GT(est.area, 0.0);
    // Same seed, same offsets.
    EXPECT_EQ(monte_carlo_ambiguity(cfg, 7).offsets, est.offsets);
}
