#pragma once
// Forward and inverse mapping between a first-order reflector position and
// the (AoA, ToA) pair the base station observes, plus first-order covariance
// propagation of measurement noise into reflector position.
//
// Every routine takes the base-station position explicitly; internally the
// problem is translated so the BS sits at the origin.

#include <optional>
#include <vector>

#include "refmap/types.hpp"

namespace refmap {

/// One (AoA, ToA) observation. theta is kept in (-pi, pi], tau > 0.
class Measurement {
public:
    Measurement() = default;
    Measurement(double theta, double tau);

    double theta() const { return theta_; }
    double tau() const { return tau_; }
    /// Total path length c0 * tau, meters.
    double path_length() const { return kSpeedOfLight * tau_; }

    bool operator==(const Measurement&) const = default;

private:
    double theta_{0.0};
    double tau_{1.0};
};

/// Measured variances of one observation (rad^2, s^2).
struct MeasurementVariance {
    double var_theta{0.0};
    double var_tau{0.0};

    MeasurementVariance scaled(double t) const { return {var_theta * t, var_tau * t}; }
    bool operator==(const MeasurementVariance&) const = default;
};

/// Grazing threshold on the polar-form denominator, meters.
inline constexpr double kMinPolarDenominator = 1e-6;

/// TX at `user`, RX at `bs`, single bounce at `reflector`.
/// Throws DegenerateGeometry when the reflector coincides with the BS.
Measurement forward_path(const Point2& user, const Point2& bs, const Point2& reflector);

/// Outcome of a non-throwing inversion.
enum class InversionStatus { ok, infeasible, degenerate };

struct Inversion {
    InversionStatus status{InversionStatus::ok};
    Point2 reflector;
    /// Polar radius from the BS along the AoA ray.
    double radius{0.0};
};

/// Reflector position from one measurement given the TX position (polar form,
/// valid for every AoA). Throws InfeasibleMeasurement / DegenerateGeometry.
Point2 invert_measurement(const Measurement& m, const Point2& user, const Point2& bs);

/// Same as invert_measurement but reports failures through the status field.
Inversion try_invert_measurement(const Measurement& m, const Point2& user, const Point2& bs) noexcept;

/// Cartesian intersection of the AoA line with the ToA ellipse, the form that
/// uses x = ... cos(theta), y = x tan(theta). Singular at theta = +-pi/2; kept
/// only as a cross-check of the polar form.
Point2 invert_measurement_cartesian(const Measurement& m, const Point2& user, const Point2& bs);

/// Partial derivatives of the polar radius r(theta, tau).
struct RadiusPartials {
    double r{0.0};
    double dr_dtheta{0.0};  // m / rad
    double dr_dtau{0.0};    // m / s
};

/// Throws like invert_measurement.
RadiusPartials radius_partials(const Measurement& m, const Point2& user, const Point2& bs);

/// First-order covariance of the inverted reflector position, AoA and ToA
/// errors independent. Throws like invert_measurement.
Mat2 measurement_covariance(const Measurement& m, const MeasurementVariance& v,
                            const Point2& user, const Point2& bs);

/// Non-throwing variant; nullopt when the inversion is infeasible or degenerate.
std::optional<Mat2> try_measurement_covariance(const Measurement& m, const MeasurementVariance& v,
                                               const Point2& user, const Point2& bs) noexcept;

/// n points on the ellipse |p - user| + |p - bs| = c0 * tau.
std::vector<Point2> ellipse_locus(const Measurement& m, const Point2& user, const Point2& bs,
                                  std::size_t n);

}  // namespace refmap
