#include "refmap/geometry.hpp"

#include <numbers>
#include <string>

namespace refmap {

namespace {

// Shared pieces of the polar form r = (L^2 - d^2) / (2 (L - d cos(theta - phi))).
struct PolarTerms {
    double path;         // L = c0 * tau
    double baseline;     // d = |user - bs|
    double cos_rel;      // cos(theta - phi)
    double sin_rel;      // sin(theta - phi)
    double numerator;    // L^2 - d^2
    double denominator;  // L - d cos(theta - phi)
};

PolarTerms polar_terms(const Measurement& m, const Point2& user, const Point2& bs) {
    const Point2 rel = user - bs;
    const double d = rel.norm();
    const double phi = d > 0.0 ? rel.angle() : 0.0;
    const double L = m.path_length();
    const double c = std::cos(m.theta() - phi);
    const double s = std::sin(m.theta() - phi);
    return {L, d, c, s, (L - d) * (L + d), L - d * c};
}

InversionStatus classify(const PolarTerms& t) {
    if (!(t.path > t.baseline)) return InversionStatus::infeasible;
    if (!(t.denominator >= kMinPolarDenominator)) return InversionStatus::degenerate;
    return InversionStatus::ok;
}

[[noreturn]] void raise(InversionStatus s, const PolarTerms& t) {
    if (s == InversionStatus::infeasible) {
        throw InfeasibleMeasurement("path length " + std::to_string(t.path) +
                                    " m does not exceed TX-RX distance " +
                                    std::to_string(t.baseline) + " m");
    }
    throw DegenerateGeometry("grazing geometry: polar denominator " + std::to_string(t.denominator) +
                             " m below threshold");
}

}  // namespace

Measurement::Measurement(double theta, double tau) : theta_(wrap_angle(theta)), tau_(tau) {
    if (!std::isfinite(theta) || !std::isfinite(tau)) throw std::invalid_argument("measurement must be finite");
    if (!(tau > 0.0)) throw std::invalid_argument("measurement tau must be strictly positive");
}

Measurement forward_path(const Point2& user, const Point2& bs, const Point2& reflector) {
    const Point2 out = reflector - bs;
    const double leg_bs = out.norm();
    if (!(leg_bs > 1e-12)) throw DegenerateGeometry("reflector coincides with the base station");
    const double leg_user = distance(reflector, user);
    return Measurement(out.angle(), (leg_user + leg_bs) / kSpeedOfLight);
}

Inversion try_invert_measurement(const Measurement& m, const Point2& user, const Point2& bs) noexcept {
    const PolarTerms t = polar_terms(m, user, bs);
    const InversionStatus status = classify(t);
    if (status != InversionStatus::ok) return {status, {}, 0.0};
    const double r = t.numerator / (2.0 * t.denominator);
    return {status, bs + Point2{r * std::cos(m.theta()), r * std::sin(m.theta())}, r};
}

Point2 invert_measurement(const Measurement& m, const Point2& user, const Point2& bs) {
    const PolarTerms t = polar_terms(m, user, bs);
    const InversionStatus status = classify(t);
    if (status != InversionStatus::ok) raise(status, t);
    const double r = t.numerator / (2.0 * t.denominator);
    return bs + Point2{r * std::cos(m.theta()), r * std::sin(m.theta())};
}

Point2 invert_measurement_cartesian(const Measurement& m, const Point2& user, const Point2& bs) {
    const PolarTerms t = polar_terms(m, user, bs);
    const InversionStatus status = classify(t);
    if (status != InversionStatus::ok) raise(status, t);
    const double x = t.numerator * std::cos(m.theta()) / (2.0 * t.denominator);
    const double y = x * std::tan(m.theta());
    return bs + Point2{x, y};
}

RadiusPartials radius_partials(const Measurement& m, const Point2& user, const Point2& bs) {
    const PolarTerms t = polar_terms(m, user, bs);
    const InversionStatus status = classify(t);
    if (status != InversionStatus::ok) raise(status, t);
    const double r = t.numerator / (2.0 * t.denominator);
    // dD/dtheta = d sin(theta - phi), dN/dL = 2L, dD/dL = 1.
    const double dr_dtheta = -r * t.baseline * t.sin_rel / t.denominator;
    const double dr_dtau = kSpeedOfLight * (t.path - r) / t.denominator;
    return {r, dr_dtheta, dr_dtau};
}

namespace {

Mat2 covariance_from_partials(const RadiusPartials& p, double theta, const MeasurementVariance& v) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    // Jacobian of (r cos(theta), r sin(theta)) w.r.t. (theta, tau).
    const double jx_theta = p.dr_dtheta * c - p.r * s;
    const double jx_tau = p.dr_dtau * c;
    const double jy_theta = p.dr_dtheta * s + p.r * c;
    const double jy_tau = p.dr_dtau * s;
    const double sxx = jx_theta * jx_theta * v.var_theta + jx_tau * jx_tau * v.var_tau;
    const double syy = jy_theta * jy_theta * v.var_theta + jy_tau * jy_tau * v.var_tau;
    const double sxy = jx_theta * jy_theta * v.var_theta + jx_tau * jy_tau * v.var_tau;
    return {sxx, sxy, sxy, syy};
}

}  // namespace

Mat2 measurement_covariance(const Measurement& m, const MeasurementVariance& v, const Point2& user,
                            const Point2& bs) {
    if (v.var_theta < 0.0 || v.var_tau < 0.0) throw std::invalid_argument("variances must be non-negative");
    return covariance_from_partials(radius_partials(m, user, bs), m.theta(), v);
}

std::optional<Mat2> try_measurement_covariance(const Measurement& m, const MeasurementVariance& v,
                                               const Point2& user, const Point2& bs) noexcept {
    const PolarTerms t = polar_terms(m, user, bs);
    if (classify(t) != InversionStatus::ok) return std::nullopt;
    const double r = t.numerator / (2.0 * t.denominator);
    const RadiusPartials p{r, -r * t.baseline * t.sin_rel / t.denominator,
                           kSpeedOfLight * (t.path - r) / t.denominator};
    return covariance_from_partials(p, m.theta(), v);
}

std::vector<Point2> ellipse_locus(const Measurement& m, const Point2& user, const Point2& bs, std::size_t n) {
    const Point2 rel = user - bs;
    const double d = rel.norm();
    const double L = m.path_length();
    if (!(L > d)) throw InfeasibleMeasurement("ellipse locus requires c0*tau > |user - bs|");
    const double a = 0.5 * L;
    const double c = 0.5 * d;
    const double b = std::sqrt((a - c) * (a + c));
    const double phi = d > 0.0 ? rel.angle() : 0.0;
    const double cp = std::cos(phi);
    const double sp = std::sin(phi);
    const Point2 center = bs + rel * 0.5;

    std::vector<Point2> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        const double ex = a * std::cos(t);
        const double ey = b * std::sin(t);
        out.push_back(center + Point2{cp * ex - sp * ey, sp * ex + cp * ey});
    }
    return out;
}

}  // namespace refmap
