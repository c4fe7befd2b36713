#pragma once
// Offline phase: spectral estimator of the reflector indicator, iterative
// band-limited recovery of the indicator on a grid, and the covering sheaf.

#include <complex>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "refmap/envsim.hpp"
#include "refmap/grid.hpp"

namespace refmap {

struct SampleCloud {
    std::vector<Point2> points;
    /// Per-point weights; empty means 1.
    std::vector<double> weights;
    /// Sampled field value per point; empty means 1 (indicator samples).
    std::vector<double> values;
    /// Per-point position covariance; empty when unknown.
    std::vector<Mat2> covariances;

    static SampleCloud from(const OfflineCollection& c);

    std::size_t size() const { return points.size(); }
    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
    double value(std::size_t i) const { return values.empty() ? 1.0 : values[i]; }
    /// Throws std::invalid_argument when empty, non-finite or ragged.
    void validate() const;
};

/// (1/N) sum exp(-2 pi j (l1 x + l2 y)); multiplied by `volume` when given.
std::complex<double> fourier_estimate(const SampleCloud& cloud, double lambda1, double lambda2,
                                      std::optional<double> volume = std::nullopt);

struct ConvergencePoint {
    double lambda1;
    double lambda2;
    std::size_t n;
    double magnitude_db;
};

/// 10*log10 |estimate| over the first n points, for every (lambda, n) pair.
std::vector<ConvergencePoint> convergence_curve(const SampleCloud& cloud,
                                                const std::vector<std::pair<double, double>>& lambdas,
                                                const std::vector<std::size_t>& prefix_sizes);

/// Rol bounding box padded on every side.
GridGeometry default_map_grid(const Polygon& rol, double pitch = 0.25, double pad = 5.0);

enum class ProjectionMethod { fft, direct };

/// Orthogonal projection onto fields whose periodic spectrum vanishes for
/// |f_x| > lambda_m or |f_y| > lambda_m (separable ideal low-pass).
class BandLimitProjector {
public:
    BandLimitProjector(const GridGeometry& g, double lambda_m, ProjectionMethod method);
    ~BandLimitProjector();
    BandLimitProjector(const BandLimitProjector&) = delete;
    BandLimitProjector& operator=(const BandLimitProjector&) = delete;

    void apply(std::vector<double>& field);
    /// Spatial kernel along one axis of length n (direct route).
    const std::vector<double>& kernel_x() const { return kx_; }
    const std::vector<double>& kernel_y() const { return ky_; }

private:
    struct FftState;
    GridGeometry g_;
    double lambda_m_;
    ProjectionMethod method_;
    std::vector<double> kx_, ky_;
    std::unique_ptr<FftState> fft_;
};

struct RecoveryOptions {
    double alpha{0.2};
    std::size_t iterations{10};
    double lambda_m{1.0};
    ProjectionMethod method{ProjectionMethod::fft};
    /// Weight each sample by 1 / (samples sharing its nearest cell).
    bool equalize_density{true};
};

struct RecoveryResult {
    GridField field;
    /// ||M(k+1) - M(k)|| for k = 0 .. iterations-1.
    std::vector<double> step_norms;
    /// ||M(k)|| for k = 1 .. iterations.
    std::vector<double> iterate_norms;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::vector<GridField> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<GridField>& history() const { return history_; }

private:
    std::vector<GridField> history_;
};

RecoveryResult recover_map(const SampleCloud& cloud, const GridGeometry& grid, const RecoveryOptions& opts = {});

struct SheafMask {
    GridMask mask;
    double epsilon{0.05};
    double area{0.0};
    /// Field level the mask was cut at (quantile constructor only).
    double threshold{0.0};

    const GridGeometry& geom() const { return mask.geom; }
};

/// Cells at or above the largest level that still covers a 1 - epsilon
/// fraction of the cloud (each point read at its nearest cell).
SheafMask covering_sheaf(const GridField& field, const SampleCloud& cloud, double epsilon);

/// Union of per-sample Gaussian confidence ellipses at the 1 - epsilon level,
/// each covariance inflated by floor_sigma^2 * I.
SheafMask gaussian_union_sheaf(const GridGeometry& grid, const SampleCloud& cloud, double epsilon,
                               double floor_sigma);

SheafMask sheaf_from_mask(GridMask mask, double epsilon);

}  // namespace refmap
