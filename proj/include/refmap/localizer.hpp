#pragma once
// Online phase: score candidate user positions against the reflector map,
// confine the search with per-path sector/annulus regions, and climb the
// score from several starts.

#include <cstdint>
#include <functional>
#include <vector>

#include "refmap/envsim.hpp"
#include "refmap/mapbuilder.hpp"

namespace refmap {

/// Grid-aligned cell set; same conventions as GridField.
using Region = GridMask;

enum class ScoreMode {
    /// Product over paths of per-path sheaf integrals.
    per_path,
    /// One reflector variable shared by every path inside a single integral.
    shared_reflector,
};

struct ScoreOptions {
    ScoreMode mode{ScoreMode::per_path};
    /// Sector half-width in AoA standard deviations.
    double k_sigma{3.0};
    /// Annulus half-width in ToA standard deviations, floored at tau_floor.
    double tau_sigmas{5.0};
    double tau_floor{1e-9};
    /// Isotropic std added to every V_i; negative means the sheaf pitch, the
    /// smallest value for which the cell sum over a 2x2 block stays unimodal.
    double floor_sigma{-1.0};
    /// Rol grid pitch; non-positive means the sheaf pitch.
    double rol_pitch{-1.0};
};

/// Bearing test on cell centres; `lateral` widens the half-angle by
/// asin(lateral / range) so cells whose extent touches the ray are kept.
Region sector_subset(const SheafMask& sheaf, const Point2& bs, double theta, double delta, double lateral = 0.0);

/// Rol cells p with c0*tau0 - widen < |p - q| + |bs - q| < c0*tau1 + widen for
/// some sector cell centre q.
Region annulus_region(const Region& rol_cells, const Point2& bs, const Region& sector, double tau0, double tau1,
                      double widen = 0.0);

struct PathTerms;

class ScoreContext {
public:
    ScoreContext(MeasurementSet measurements, SheafMask sheaf, const Point2& bs, Polygon rol,
                 const ScoreOptions& opts = {});
    ~ScoreContext();
    ScoreContext(ScoreContext&&) noexcept;
    ScoreContext& operator=(ScoreContext&&) noexcept;

    /// log Q; -inf when some path is infeasible at p or its sector is empty.
    double log_q(const Point2& p) const;
    double q(const Point2& p) const;
    /// Number of measurements that are infeasible at p.
    std::size_t infeasible_count(const Point2& p) const;

    const MeasurementSet& measurements() const { return ms_; }
    const SheafMask& sheaf() const { return sheaf_; }
    const Point2& bs() const { return bs_; }
    const Polygon& rol() const { return rol_; }
    const Region& rol_cells() const { return rol_cells_; }
    const ScoreOptions& options() const { return opts_; }
    double floor_sigma() const { return floor_sigma_; }
    /// Sector of path i (sheaf grid).
    const Region& sector(std::size_t i) const;

private:
    MeasurementSet ms_;
    SheafMask sheaf_;
    Point2 bs_;
    Polygon rol_;
    Region rol_cells_;
    ScoreOptions opts_;
    double floor_sigma_{0.0};
    std::vector<PathTerms> paths_;
    // shared mode: union of sectors
    std::vector<double> union_x_, union_y_;
};

struct Prelocalization {
    Region region;
    /// Intersection was empty and the full rol was returned instead.
    bool fallback{false};
    std::vector<Region> per_path;
};

Prelocalization prelocalize(const ScoreContext& ctx);

struct AscentOptions {
    /// Fixed step multiplier on the gradient; <= 0 selects normalized steps.
    double gamma{0.0};
    double dx{0.05};
    double tol{0.01};
    std::size_t max_iter{200};
    /// Shrink a fixed-gamma step until the objective does not drop.
    bool backtracking{false};
};

struct AscentResult {
    Point2 p;
    double objective;
    std::vector<Point2> trace;
    std::size_t iterations{0};
};

class AscentError : public Error {
public:
    AscentError(const std::string& what, std::vector<Point2> trace) : Error(what), trace_(std::move(trace)) {}
    const std::vector<Point2>& trace() const { return trace_; }

private:
    std::vector<Point2> trace_;
};

/// Maximizes `objective` (may return -inf, never NaN) from `start`, clamping
/// iterates to `domain`. Returns the best point visited.
AscentResult gradient_ascent(const std::function<double(const Point2&)>& objective, const Polygon& domain,
                             const Point2& start, const AscentOptions& opts = {});

/// Ascent on log Q.
AscentResult gradient_ascent(const ScoreContext& ctx, const Point2& start, const AscentOptions& opts = {});

enum class StartMode {
    /// One uniformly drawn cell per stratum.
    random,
    /// The best-scoring cell of each stratum.
    best_in_stratum,
};

struct LocalizeOptions {
    std::size_t n_starts{16};
    StartMode start_mode{StartMode::random};
    AscentOptions ascent;
    std::uint64_t seed{0};
};

struct LocalizationResult {
    Point2 p_hat;
    double score{0.0};
    double log_score{0.0};
    Region region;
    bool region_fallback{false};
    std::size_t starts{0};
    std::size_t iterations{0};
    std::vector<std::vector<Point2>> trace;
};

LocalizationResult localize(const ScoreContext& ctx, const LocalizeOptions& opts = {});

struct GridArgmax {
    Point2 p;
    double log_score;
};

/// Exhaustive maximum of log Q over the region's cell centres, refined on a
/// local lattice of `refine_pitch` spanning one region pitch around it.
GridArgmax grid_argmax(const ScoreContext& ctx, const Region& region, double refine_pitch = 0.1);

/// log Q sampled at every rol cell centre (-inf outside the rol).
GridField score_surface(const ScoreContext& ctx);

}  // namespace refmap
