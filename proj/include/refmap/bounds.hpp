#pragma once
// Ambiguity-area lower bound, log-scale accuracy ratio, and a Monte Carlo
// estimate of the empirical ambiguity area for checking the bound.

#include <cstdint>
#include <vector>

#include "refmap/envsim.hpp"
#include "refmap/localizer.hpp"

namespace refmap {

struct BoundInputs {
    double vol_sa{0.0};     // m^2
    double vol_sheaf{0.0};  // m^2
    std::size_t n_r{0};
    double epsilon{0.05};

    double ratio() const { return vol_sa / vol_sheaf; }
    void validate() const;
};

/// Vol(S_A) * 2^(-n_r * log2(1 + Vol(S_A)/Vol(sheaf))).
double ambiguity_lower_bound(const BoundInputs& b);

/// Radius of the disk with the given area.
double equivalent_radius(double area);

/// log2(vol_sa / vol_su).
double log_accuracy_ratio(double vol_sa, double vol_su);

/// n_r * log2(1 + Vol(S_A)/Vol(sheaf)).
double ra_upper_bound(const BoundInputs& b);

struct KdeOptions {
    double pitch{0.1};
    double bandwidth{0.2};
};

/// Area of the 1 - epsilon level set of a Gaussian kernel density built on
/// the points, using the same quantile rule as the map covering sheaf.
double offset_cloud_area(std::vector<Point2> offsets, double epsilon, const KdeOptions& kde = {});

struct AmbiguityEstimate {
    std::vector<Point2> offsets;
    double area{0.0};
    std::size_t trials{0};
    /// Blind or otherwise unusable draws.
    std::size_t skipped{0};
    /// Mean realized Vol(S_A)/Vol(sheaf) over the structures.
    double mean_ratio{0.0};
};

struct AmbiguityConfig {
    EnvironmentSpec spec;
    std::size_t n_r{3};
    std::size_t structures{100};
    std::size_t users_per_structure{1};
    double epsilon{0.05};
    /// Sheaf and coarse search pitch.
    double pitch{0.25};
    double refine_pitch{0.1};
    KdeOptions kde;
    ScoreOptions score;
};

/// Sheaf mask of the true reflector set: the disk union when the
/// environment carries disks, otherwise the cells holding a reflector.
SheafMask ground_truth_sheaf(const Environment& env, const GridGeometry& g, double epsilon);

/// Zero-noise trials: draw a structure and a user, synthesize n_r paths,
/// take the grid argmax of the score, record p_hat - p_u.
AmbiguityEstimate monte_carlo_ambiguity(const AmbiguityConfig& cfg, std::uint64_t seed);

}  // namespace refmap
