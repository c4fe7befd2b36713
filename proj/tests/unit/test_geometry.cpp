#include <gtest/gtest.h>

#include <numbers>

#include "refmap/geometry.hpp"
#include "support.hpp"

using namespace refmap;
using refmap::gen::bisect_reflector;
using refmap::gen::feasible_triple;

TEST(Measurement, WrapsAngleAndRejectsNonPositiveDelay) {
    const Measurement m(3.0 * std::numbers::pi, 1e-7);
    EXPECT_NEAR(m.theta(), std::numbers::pi, 1e-12);
    EXPECT_THROW(Measurement(0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(Measurement(0.0, -1e-9), std::invalid_argument);
}

TEST(ForwardPath, MatchesDirectDistances) {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 1000; ++k) {
        const auto t = feasible_triple(rng);
        const Measurement m = forward_path(t.user, t.bs, t.reflector);
        const double len = distance(t.user, t.reflector) + distance(t.reflector, t.bs);
        EXPECT_NEAR(m.path_length(), len, 1e-9 * len);
        EXPECT_NEAR(std::remainder(m.theta() - (t.reflector - t.bs).angle(), 2 * std::numbers::pi), 0.0, 1e-12);
    }
}

TEST(Inversion, RoundTripsForwardPath) {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 5000; ++k) {
        const auto t = feasible_triple(rng);
        const Point2 s = invert_measurement(forward_path(t.user, t.bs, t.reflector), t.user, t.bs);
        ASSERT_LT(distance(s, t.reflector), 1e-9) << k;
    }
}

TEST(Inversion, AgreesWithBisectionOracle) {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 500; ++k) {
        const Point2 user = gen::uniform_point(rng, -20, 20);
        const Point2 bs = gen::uniform_point(rng, -20, 20);
        const double theta = gen::uniform(rng, -std::numbers::pi, std::numbers::pi);
        const double los = distance(user, bs);
        const double tau = (los + gen::uniform(rng, 0.5, 40.0)) / kSpeedOfLight;
        const Measurement m(theta, tau);
        const Inversion inv = try_invert_measurement(m, user, bs);
        if (inv.status != InversionStatus::ok) continue;
        EXPECT_LT(distance(inv.reflector, bisect_reflector(m.theta(), tau, user, bs)), 1e-6);
    }
}

TEST(Inversion, CartesianFormAgreesAwayFromVerticalRays) {
    std::mt19937_64 rng(14);
    int checked = 0;
    for (int k = 0; k < 2000; ++k) {
        const auto t = feasible_triple(rng);
        const Measurement m = forward_path(t.user, t.bs, t.reflector);
        if (std::abs(std::cos(m.theta())) < 0.2) continue;
        const Point2 a = invert_measurement(m, t.user, t.bs);
        const Point2 b = invert_measurement_cartesian(m, t.user, t.bs);
        EXPECT_LT(distance(a, b), 1e-6 * (1.0 + a.norm()));
        ++checked;
    }
    EXPECT_GT(checked, 1000);
}

TEST(Inversion, InfeasibleWhenPathNotLongerThanLineOfSight) {
    const Point2 user{10, 0};
    const Point2 bs{0, 0};
    const Measurement m(0.5, 10.0 / kSpeedOfLight);
    EXPECT_THROW(invert_measurement(m, user, bs), InfeasibleMeasurement);
    EXPECT_EQ(try_invert_measurement(m, user, bs).status, InversionStatus::infeasible);
}

TEST(Inversion, DegenerateWhenUserOnTheRayBeyondTheReflector) {
    // AoA ray points at the user and the delay equals the LoS: r collapses.
    const Point2 user{10, 0};
    const Point2 bs{0, 0};
    const Measurement m(0.0, 10.0 / kSpeedOfLight + 1e-18);
    const Inversion inv = try_invert_measurement(m, user, bs);
    EXPECT_NE(inv.status, InversionStatus::ok);
}

TEST(Partials, MatchFiniteDifferences) {
    std::mt19937_64 rng(15);
    for (int k = 0; k < 300; ++k) {
        const auto t = feasible_triple(rng, 2.0);
        const Measurement m = forward_path(t.user, t.bs, t.reflector);
        const RadiusPartials p = radius_partials(m, t.user, t.bs);
        const double ht = 1e-6;
        const double hk = 1e-13;
        auto r_at = [&](double th, double tau) { return try_invert_measurement(Measurement(th, tau), t.user, t.bs).radius; };
        const double fd_t = (r_at(m.theta() + ht, m.tau()) - r_at(m.theta() - ht, m.tau())) / (2 * ht);
        const double fd_k = (r_at(m.theta(), m.tau() + hk) - r_at(m.theta(), m.tau() - hk)) / (2 * hk);
        EXPECT_NEAR(p.r, distance(t.reflector, t.bs), 1e-9);
        EXPECT_NEAR(p.dr_dtheta, fd_t, 1e-4 * (1.0 + std::abs(fd_t)));
        EXPECT_NEAR(p.dr_dtau, fd_k, 1e-4 * std::abs(fd_k) + 1.0);
    }
}

TEST(Covariance, MatchesFiniteDifferenceJacobianPropagation) {
    std::mt19937_64 rng(16);
    const MeasurementVariance v{1e-6, 4e-20};
    for (int k = 0; k < 200; ++k) {
        const auto t = feasible_triple(rng, 2.0);
        const Measurement m = forward_path(t.user, t.bs, t.reflector);
        const Mat2 cov = measurement_covariance(m, v, t.user, t.bs);
        const double ht = 1e-7;
        const double hk = 1e-14;
        auto at = [&](double th, double tau) { return invert_measurement(Measurement(th, tau), t.user, t.bs); };
        const Point2 jt = (at(m.theta() + ht, m.tau()) - at(m.theta() - ht, m.tau())) / (2 * ht);
        const Point2 jk = (at(m.theta(), m.tau() + hk) - at(m.theta(), m.tau() - hk)) / (2 * hk);
        const Mat2 oracle{jt.x * jt.x * v.var_theta + jk.x * jk.x * v.var_tau,
                          jt.x * jt.y * v.var_theta + jk.x * jk.y * v.var_tau,
                          jt.x * jt.y * v.var_theta + jk.x * jk.y * v.var_tau,
                          jt.y * jt.y * v.var_theta + jk.y * jk.y * v.var_tau};
        const double scale = std::max(oracle.xx, oracle.yy);
        EXPECT_NEAR(cov.xx, oracle.xx, 1e-4 * scale);
        EXPECT_NEAR(cov.xy, oracle.xy, 1e-4 * scale);
        EXPECT_NEAR(cov.yy, oracle.yy, 1e-4 * scale);
        EXPECT_DOUBLE_EQ(cov.xy, cov.yx);
    }
}

TEST(Covariance, IsLinearInTheVariances) {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 200; ++k) {
        const auto t = feasible_triple(rng);
        const Measurement m = forward_path(t.user, t.bs, t.reflector);
        const MeasurementVariance v{gen::uniform(rng, 1e-8, 1e-4), gen::uniform(rng, 1e-22, 1e-18)};
        const Mat2 a = measurement_covariance(m, v, t.user, t.bs);
        const Mat2 b = measurement_covariance(m, v.scaled(2.0), t.user, t.bs);
        EXPECT_DOUBLE_EQ(b.xx, 2.0 * a.xx);
        EXPECT_DOUBLE_EQ(b.xy, 2.0 * a.xy);
        EXPECT_DOUBLE_EQ(b.yy, 2.0 * a.yy);
    }
}

TEST(Covariance, IsPositiveSemidefinite) {
    std::mt19937_64 rng(18);
    for (int k = 0; k < 500; ++k) {
        const auto t = feasible_triple(rng);
        const Measurement m = forward_path(t.user, t.bs, t.reflector);
        const Mat2 c = measurement_covariance(m, {1e-5, 1e-19}, t.user, t.bs);
        const auto [lo, hi] = c.eigenvalues();
        EXPECT_GE(lo, -1e-12 * hi);
    }
}

TEST(EllipseLocus, PointsHaveThePathLength) {
    const Point2 user{3, 4};
    const Point2 bs{-2, 1};
    const Measurement m(0.3, 25.0 / kSpeedOfLight);
    for (const Point2& p : ellipse_locus(m, user, bs, 64)) {
        EXPECT_NEAR(distance(p, user) + distance(p, bs), 25.0, 1e-9);
    }
}

TEST(Geometry, IsTranslationInvariant) {
    std::mt19937_64 rng(19);
    for (int k = 0; k < 200; ++k) {
        const auto t = feasible_triple(rng);
        const Point2 shift = gen::uniform_point(rng, -1000, 1000);
        const Measurement a = forward_path(t.user, t.bs, t.reflector);
        const Measurement b = forward_path(t.user + shift, t.bs + shift, t.reflector + shift);
        EXPECT_NEAR(a.theta(), b.theta(), 1e-9);
        EXPECT_NEAR(a.tau(), b.tau(), 1e-15);
        const Point2 s = invert_measurement(b, t.user + shift, t.bs + shift) - shift;
        EXPECT_LT(distance(s, t.reflector), 1e-7);
    }
}
