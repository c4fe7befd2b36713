#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace refmap {

/// Speed of light in vacuum, m/s (exact SI value).
inline constexpr double kSpeedOfLight = 299792458.0;

/// Planar position or displacement, meters.
struct Point2 {
    double x{0.0};
    double y{0.0};

    constexpr Point2() = default;
    constexpr Point2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Point2 operator+(const Point2& r) const { return {x + r.x, y + r.y}; }
    constexpr Point2 operator-(const Point2& r) const { return {x - r.x, y - r.y}; }
    constexpr Point2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Point2 operator/(double s) const { return {x / s, y / s}; }
    friend constexpr Point2 operator*(double s, const Point2& p) { return {p.x * s, p.y * s}; }
    Point2& operator+=(const Point2& r) { x += r.x; y += r.y; return *this; }
    Point2& operator-=(const Point2& r) { x -= r.x; y -= r.y; return *this; }
    constexpr bool operator==(const Point2&) const = default;

    constexpr double dot(const Point2& r) const { return x * r.x + y * r.y; }
    constexpr double cross(const Point2& r) const { return x * r.y - y * r.x; }
    double norm() const { return std::hypot(x, y); }
    double angle() const { return std::atan2(y, x); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

/// 2x2 real matrix, row-major. Covariances are in m^2.
struct Mat2 {
    double xx{0.0}, xy{0.0};
    double yx{0.0}, yy{0.0};

    static constexpr Mat2 identity(double s = 1.0) { return {s, 0.0, 0.0, s}; }

    constexpr Mat2 operator+(const Mat2& r) const { return {xx + r.xx, xy + r.xy, yx + r.yx, yy + r.yy}; }
    constexpr Mat2 operator*(double s) const { return {xx * s, xy * s, yx * s, yy * s}; }
    constexpr Point2 operator*(const Point2& p) const { return {xx * p.x + xy * p.y, yx * p.x + yy * p.y}; }
    constexpr bool operator==(const Mat2&) const = default;

    constexpr double trace() const { return xx + yy; }
    constexpr double det() const { return xx * yy - xy * yx; }
    Mat2 inverse() const {
        const double d = det();
        return {yy / d, -xy / d, -yx / d, xx / d};
    }
    /// Eigenvalues of the symmetric part, ascending.
    std::pair<double, double> eigenvalues() const {
        const double off = 0.5 * (xy + yx);
        const double mean = 0.5 * (xx + yy);
        const double rad = std::hypot(0.5 * (xx - yy), off);
        return {mean - rad, mean + rad};
    }
};

/// Base class for all model/runtime errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// c0*tau does not exceed the TX-RX distance: no ellipse exists.
class InfeasibleMeasurement : public Error {
public:
    using Error::Error;
};

/// Geometry outside the first-order model (coincident points, grazing rays).
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace refmap
