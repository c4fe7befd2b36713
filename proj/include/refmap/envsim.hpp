#pragma once
// Synthetic environments and the measurement model: which reflectors light
// up for a transmitter position, what noisy (theta, tau) the BS records, and
// where offline test points go.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "refmap/geometry.hpp"
#include "refmap/grid.hpp"
#include "refmap/polygon.hpp"

namespace refmap {

/// Deterministic 64-bit stream derived from (seed, stream) via splitmix64.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

struct Disk {
    Point2 center;
    double radius{0.0};
    bool operator==(const Disk&) const = default;
};

struct Environment {
    Point2 bs;
    Polygon rol;
    Polygon boundary;
    std::vector<Point2> reflectors;
    /// Reflectivity per reflector, same length as reflectors (1 by default).
    std::vector<double> reflectivity;
    /// Reflector-bearing disks for the scatter family (empty otherwise).
    std::vector<Disk> disks;

    /// Throws std::invalid_argument on a broken invariant.
    void validate() const;
    bool operator==(const Environment&) const = default;
};

enum class EnvironmentFamily { rectangle, random_scatter, point_list };

struct EnvironmentSpec {
    EnvironmentFamily family{EnvironmentFamily::rectangle};
    double width{60.0};
    double height{60.0};
    /// Base-station position; defaults to the centre of the room.
    std::optional<Point2> bs;

    // rectangle
    std::size_t per_wall{10};
    double rol_inset{2.0};

    // random_scatter
    double target_ratio{15.9};
    double disk_radius{2.0};
    std::size_t points_per_disk{16};
    /// Pitch used to rasterize the disk union when measuring the ratio.
    double ratio_pitch{0.25};
    /// Clearance between the BS and any disk edge.
    double bs_clearance{1.0};

    // point_list
    std::vector<Point2> points;
    std::optional<Polygon> boundary;
    std::optional<Polygon> rol;
};

/// Deterministic in (spec, seed). Throws refmap::Error for an unachievable ratio.
Environment generate_environment(const EnvironmentSpec& spec, std::uint64_t seed);

/// Vol(rol) over the rasterized area of the disk union.
double realized_area_ratio(const Environment& env, double pitch);

/// Rasterized union of env.disks on g.
GridMask disk_union_mask(const Environment& env, const GridGeometry& g);

struct NoiseModel {
    double sigma_theta{0.0};  // rad
    double sigma_tau{0.0};    // s
    std::uint64_t seed{0};

    MeasurementVariance variance() const { return {sigma_theta * sigma_theta, sigma_tau * sigma_tau}; }
};

enum class ActivationLaw { exact, poisson };

struct SamplingOptions {
    ActivationLaw law{ActivationLaw::exact};
    /// Drop paths whose legs cross the boundary polyline.
    bool visibility{false};
    /// Add the direct path (truth index -1).
    bool include_los{false};
    /// Draw reflectors with probability proportional to reflectivity.
    bool reflectivity_weighted{false};
};

struct PathObservation {
    Measurement m;
    MeasurementVariance var;
};

struct MeasurementSet {
    std::vector<PathObservation> entries;
    /// Generating reflector index per entry; -1 marks the direct path.
    std::optional<std::vector<long>> truth;
    bool blind{false};

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

MeasurementSet sample_measurements(const Environment& env, const Point2& user, std::size_t n_r,
                                   const NoiseModel& noise, std::uint64_t epoch,
                                   const SamplingOptions& opts = {});

/// Arc-length spaced points on the RoL boundary moved `offset` inward.
std::vector<Point2> boundary_test_points(const Environment& env, double spacing, double offset);
std::vector<Point2> boundary_test_points(const Polygon& poly, double spacing, double offset);

/// `count` points drawn uniformly by arc length on the polygon, moved inward.
std::vector<Point2> random_boundary_points(const Polygon& poly, std::size_t count, double offset,
                                           std::mt19937_64& rng);

/// Uniform point inside the polygon (rejection from its bounding box).
Point2 random_point_in(const Polygon& poly, std::mt19937_64& rng);

struct OfflineCollection {
    std::vector<Point2> estimates;
    std::vector<Mat2> covariances;
    /// Index of the test point that produced each estimate.
    std::vector<std::size_t> source;
    /// Generating reflector per estimate (simulator ground truth).
    std::vector<long> truth;
    std::size_t skipped{0};
};

/// Test point k uses measurement epoch epoch_base + k.
OfflineCollection collect_offline(const Environment& env, const std::vector<Point2>& test_points,
                                  std::size_t n_r, const NoiseModel& noise, const SamplingOptions& opts = {},
                                  std::uint64_t epoch_base = 0);

}  // namespace refmap
