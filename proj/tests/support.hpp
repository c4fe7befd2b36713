#pragma once
// Hand-rolled generators and independent oracles shared by the tests.

#include <cmath>
#include <random>

#include "refmap/geometry.hpp"

namespace refmap::gen {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Point2 uniform_point(std::mt19937_64& rng, double lo, double hi) {
    return {uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

struct Triple {
    Point2 user;
    Point2 bs;
    Point2 reflector;
};

// Distance of the user from the BS->reflector ray's supporting geometry, in
// the form of the polar-inversion denominator L - d cos(theta - phi).
inline double polar_denominator(const Triple& t) {
    const Point2 d = t.user - t.bs;
    const Point2 s = t.reflector - t.bs;
    const double theta = s.angle();
    const double big_l = s.norm() + distance(t.user, t.reflector);
    return big_l - d.norm() * std::cos(theta - d.angle());
}

// Random triple in a 100 m box with the reflector away from both endpoints
// and the denominator above `min_den`.
inline Triple feasible_triple(std::mt19937_64& rng, double min_den = 0.5) {
    while (true) {
        Triple t{uniform_point(rng, -50.0, 50.0), uniform_point(rng, -50.0, 50.0), uniform_point(rng, -50.0, 50.0)};
        if (distance(t.reflector, t.bs) < 0.5 || distance(t.reflector, t.user) < 0.5) continue;
        if (polar_denominator(t) < min_den) continue;
        return t;
    }
}

// Reflector on the AoA ray by bisection of r + |bs + r u - user| = c0 tau.
// The left side is non-decreasing in r, so bisection needs no geometry.
inline Point2 bisect_reflector(double theta, double tau, const Point2& user, const Point2& bs) {
    const Point2 u{std::cos(theta), std::sin(theta)};
    const double big_l = kSpeedOfLight * tau;
    auto f = [&](double r) { return r + distance(bs + r * u, user) - big_l; };
    double lo = 0.0;
    double hi = big_l;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return bs + 0.5 * (lo + hi) * u;
}

}  // namespace refmap::gen
