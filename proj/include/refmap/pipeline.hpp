#pragma once
// End-to-end pieces shared by the command line tool and the experiments:
// offline map building from a measurement log, single localization trials,
// and the CDF sweep.

#include <map>
#include <optional>
#include <vector>

#include "refmap/experiment.hpp"

namespace refmap {

struct MapProducts {
    SampleCloud cloud;
    RecoveryResult recovery;
    SheafMask sheaf;
    std::size_t skipped{0};
};

/// Inverts every logged measurement against the test point with the same
/// epoch; infeasible entries are counted in `skipped`.
SampleCloud cloud_from_log(const std::vector<Point2>& test_points, const std::map<std::uint64_t, MeasurementSet>& log,
                           const Point2& bs, std::size_t& skipped);

MapProducts build_map(SampleCloud cloud, const Polygon& rol, const OfflineConfig& cfg);

/// Test points, offline collection and map building in one go.
MapProducts survey(const Environment& env, const OfflineConfig& cfg, const NoiseModel& noise,
                   const SamplingOptions& sampling = {});

/// About `count` sizes spaced geometrically from min(first, n) to n.
std::vector<std::size_t> geometric_prefixes(std::size_t n, std::size_t count, std::size_t first = 16);

struct TrialResult {
    Point2 user;
    LocalizationResult result;
    double error{0.0};
};

/// One online draw. Empty when the user is blind or sees no path.
std::optional<TrialResult> localization_trial(const Environment& env, const SheafMask& sheaf, const Polygon& rol,
                                              const Point2& user, std::size_t n_r, const NoiseModel& noise,
                                              std::uint64_t epoch, const SamplingOptions& sampling,
                                              const OnlineConfig& online);

struct CdfCell {
    NoiseLevel noise;
    std::size_t n_r{0};
    bool restricted{false};
    std::size_t trials{0};
    std::size_t blind{0};
    CdfTable table;
};

/// One map per noise level, then cfg.cdf.trials users per (noise, n_r) cell.
std::vector<CdfCell> run_cdf_experiment(const ExperimentConfig& cfg, const Environment& env);

/// Square of the given side centred on the rol's bounding box, clipped to it.
Polygon restricted_rol(const Polygon& rol, double side);

}  // namespace refmap
