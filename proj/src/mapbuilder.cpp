#include "refmap/mapbuilder.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

#include "refmap/simd.hpp"

namespace refmap {

SampleCloud SampleCloud::from(const OfflineCollection& c) {
    SampleCloud s;
    s.points = c.estimates;
    s.covariances = c.covariances;
    return s;
}

void SampleCloud::validate() const {
    if (points.empty()) throw std::invalid_argument("sample cloud is empty");
    for (const auto& p : points) {
        if (!p.finite()) throw std::invalid_argument("sample cloud contains a non-finite point");
    }
    if (!weights.empty() && weights.size() != points.size()) throw std::invalid_argument("weights length mismatch");
    if (!values.empty() && values.size() != points.size()) throw std::invalid_argument("values length mismatch");
    if (!covariances.empty() && covariances.size() != points.size()) {
        throw std::invalid_argument("covariances length mismatch");
    }
}

namespace {

void split_xy(const std::vector<Point2>& pts, std::size_t n, std::vector<double>& xs, std::vector<double>& ys) {
    xs.resize(n);
    ys.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = pts[i].x;
        ys[i] = pts[i].y;
    }
}

}  // namespace

std::complex<double> fourier_estimate(const SampleCloud& cloud, double lambda1, double lambda2,
                                      std::optional<double> volume) {
    if (cloud.points.empty()) throw std::invalid_argument("fourier_estimate needs a non-empty cloud");
    std::vector<double> xs, ys;
    split_xy(cloud.points, cloud.size(), xs, ys);
    const auto sum = simd::kernels().phasor_sum(xs.data(), ys.data(), xs.size(), lambda1, lambda2);
    const double scale = volume.value_or(1.0) / static_cast<double>(cloud.size());
    return sum * scale;
}

std::vector<ConvergencePoint> convergence_curve(const SampleCloud& cloud,
                                                const std::vector<std::pair<double, double>>& lambdas,
                                                const std::vector<std::size_t>& prefix_sizes) {
    for (std::size_t k = 0; k < prefix_sizes.size(); ++k) {
        if (prefix_sizes[k] == 0) throw std::invalid_argument("convergence_curve: empty prefix");
        if (prefix_sizes[k] > cloud.size()) throw std::invalid_argument("convergence_curve: prefix exceeds cloud");
        if (k > 0 && prefix_sizes[k] < prefix_sizes[k - 1]) {
            throw std::invalid_argument("convergence_curve: prefix sizes must ascend");
        }
    }
    std::vector<double> xs, ys;
    split_xy(cloud.points, cloud.size(), xs, ys);
    const auto& kern = simd::kernels();
    std::vector<ConvergencePoint> out;
    out.reserve(lambdas.size() * prefix_sizes.size());
    for (const auto& [l1, l2] : lambdas) {
        for (std::size_t n : prefix_sizes) {
            const auto s = kern.phasor_sum(xs.data(), ys.data(), n, l1, l2) / static_cast<double>(n);
            out.push_back({l1, l2, n, 10.0 * std::log10(std::abs(s))});
        }
    }
    return out;
}

GridGeometry default_map_grid(const Polygon& rol, double pitch, double pad) {
    Box b = rol.bounds();
    b.lo -= Point2{pad, pad};
    b.hi += Point2{pad, pad};
    return GridGeometry::covering(b, pitch);
}

// ---------------------------------------------------------------------------
// Band-limit projection

namespace {

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

bool keep_frequency(long m, std::size_t n, double pitch, double lambda_m) {
    return std::abs(static_cast<double>(m)) <= lambda_m * static_cast<double>(n) * pitch + 1e-9;
}

// Periodic Dirichlet kernel k[t] = (1/n) sum_{kept m} cos(2 pi m t / n).
std::vector<double> dirichlet_kernel(std::size_t n, double pitch, double lambda_m) {
    std::vector<long> kept;
    const long half = static_cast<long>(n / 2);
    for (long m = -static_cast<long>((n - 1) / 2); m <= half; ++m) {
        if (keep_frequency(m, n, pitch, lambda_m)) kept.push_back(m);
    }
    std::vector<double> k(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        double s = 0.0;
        for (long m : kept) {
            // reduce m*t mod n before scaling to keep the argument small
            const long r = static_cast<long>((static_cast<long long>(m) * static_cast<long long>(t)) %
                                             static_cast<long long>(n));
            s += std::cos(2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(n));
        }
        k[t] = s / static_cast<double>(n);
    }
    return k;
}

// out[i] = sum_t k[(t - i) mod n] in[t]  (k symmetric)
void circular_convolve(const std::vector<double>& kdouble, const double* in, double* out, std::size_t n) {
    const auto& kern = simd::kernels();
    for (std::size_t i = 0; i < n; ++i) out[i] = kern.dot(kdouble.data() + (n - i), in, n);
}

std::vector<double> doubled(const std::vector<double>& k) {
    std::vector<double> d(2 * k.size());
    for (std::size_t t = 0; t < d.size(); ++t) d[t] = k[t % k.size()];
    return d;
}

}  // namespace

struct BandLimitProjector::FftState {
    double* real{nullptr};
    fftw_complex* spec{nullptr};
    fftw_plan forward{nullptr};
    fftw_plan backward{nullptr};

    ~FftState() {
        std::lock_guard lock(fftw_planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        if (real) fftw_free(real);
        if (spec) fftw_free(spec);
    }
};

BandLimitProjector::BandLimitProjector(const GridGeometry& g, double lambda_m, ProjectionMethod method)
    : g_(g), lambda_m_(lambda_m), method_(method) {
    if (!(lambda_m > 0.0)) throw std::invalid_argument("band limit must be positive");
    if (lambda_m > 1.0 / (2.0 * g.pitch) + 1e-12) {
        throw std::invalid_argument("band limit " + std::to_string(lambda_m) + " cycles/m exceeds the grid Nyquist " +
                                    std::to_string(1.0 / (2.0 * g.pitch)));
    }
    if (method_ == ProjectionMethod::direct) {
        kx_ = dirichlet_kernel(g.nx, g.pitch, lambda_m);
        ky_ = dirichlet_kernel(g.ny, g.pitch, lambda_m);
        return;
    }
    fft_ = std::make_unique<FftState>();
    const std::size_t nc = g.ny * (g.nx / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    fft_->real = fftw_alloc_real(g.size());
    fft_->spec = fftw_alloc_complex(nc);
    const int n0 = static_cast<int>(g.ny);
    const int n1 = static_cast<int>(g.nx);
    fft_->forward = fftw_plan_dft_r2c_2d(n0, n1, fft_->real, fft_->spec, FFTW_ESTIMATE);
    fft_->backward = fftw_plan_dft_c2r_2d(n0, n1, fft_->spec, fft_->real, FFTW_ESTIMATE);
    if (!fft_->forward || !fft_->backward) throw Error("FFTW plan creation failed");
}

BandLimitProjector::~BandLimitProjector() = default;

void BandLimitProjector::apply(std::vector<double>& field) {
    if (field.size() != g_.size()) throw std::invalid_argument("projector: field size mismatch");
    const std::size_t nx = g_.nx;
    const std::size_t ny = g_.ny;

    if (method_ == ProjectionMethod::direct) {
        const auto kdx = doubled(kx_);
        const auto kdy = doubled(ky_);
        std::vector<double> tmp(field.size());
        for (std::size_t j = 0; j < ny; ++j) circular_convolve(kdx, field.data() + j * nx, tmp.data() + j * nx, nx);
        // columns: transpose, convolve rows, transpose back
        std::vector<double> col(ny), colout(ny);
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) col[j] = tmp[j * nx + i];
            circular_convolve(kdy, col.data(), colout.data(), ny);
            for (std::size_t j = 0; j < ny; ++j) field[j * nx + i] = colout[j];
        }
        return;
    }

    std::copy(field.begin(), field.end(), fft_->real);
    fftw_execute(fft_->forward);
    const std::size_t nhx = nx / 2 + 1;
    for (std::size_t j = 0; j < ny; ++j) {
        const long my = j <= ny / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(ny);
        const bool keep_y = keep_frequency(my, ny, g_.pitch, lambda_m_);
        for (std::size_t i = 0; i < nhx; ++i) {
            fftw_complex& c = fft_->spec[j * nhx + i];
            if (!keep_y || !keep_frequency(static_cast<long>(i), nx, g_.pitch, lambda_m_)) {
                c[0] = 0.0;
                c[1] = 0.0;
            }
        }
    }
    fftw_execute(fft_->backward);
    const double scale = 1.0 / static_cast<double>(nx * ny);
    for (std::size_t k = 0; k < field.size(); ++k) field[k] = fft_->real[k] * scale;
}

// ---------------------------------------------------------------------------
// Recovery

namespace {

double diff_norm(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

RecoveryResult recover_map(const SampleCloud& cloud, const GridGeometry& grid, const RecoveryOptions& opts) {
    cloud.validate();
    if (!(opts.alpha > 0.0 && opts.alpha < 2.0)) throw std::invalid_argument("recovery alpha must lie in (0, 2)");
    if (grid.nx < 2 || grid.ny < 2) throw std::invalid_argument("recovery grid needs at least 2x2 nodes");
    BandLimitProjector proj(grid, opts.lambda_m, opts.method);

    const std::size_t n = cloud.size();
    std::vector<double> w(n);
    std::vector<std::size_t> cell_count(grid.size(), 0);
    std::vector<std::optional<std::size_t>> cell(n);
    for (std::size_t k = 0; k < n; ++k) {
        cell[k] = grid.nearest(cloud.points[k]);
        if (cell[k]) ++cell_count[*cell[k]];
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double eq = (opts.equalize_density && cell[k]) ? 1.0 / static_cast<double>(cell_count[*cell[k]]) : 1.0;
        w[k] = cloud.weight(k) * eq;
    }

    GridField data(grid);
    for (std::size_t k = 0; k < n; ++k) data.splat(cloud.points[k], w[k] * cloud.value(k));

    RecoveryResult out;
    GridField m(grid);
    std::vector<GridField> history{m};
    GridField sampled(grid);
    for (std::size_t it = 0; it < opts.iterations; ++it) {
        std::fill(sampled.values.begin(), sampled.values.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k) sampled.splat(cloud.points[k], w[k] * m.interpolate(cloud.points[k]));
        GridField next(grid);
        for (std::size_t q = 0; q < grid.size(); ++q) {
            next.values[q] = m.values[q] + opts.alpha * (data.values[q] - sampled.values[q]);
        }
        proj.apply(next.values);
        out.step_norms.push_back(diff_norm(next.values, m.values));
        out.iterate_norms.push_back(next.norm());
        m = std::move(next);
        history.push_back(m);
        const std::size_t k = out.iterate_norms.size();
        if (!std::isfinite(out.iterate_norms.back()) ||
            (k > 3 && out.iterate_norms[k - 1] > 10.0 * out.iterate_norms[k - 4])) {
            throw DivergenceError("map recovery diverged at iteration " + std::to_string(k), std::move(history));
        }
    }
    out.field = std::move(m);
    return out;
}

// ---------------------------------------------------------------------------
// Covering sheaf

SheafMask sheaf_from_mask(GridMask mask, double epsilon) {
    SheafMask s;
    s.area = mask.area();
    s.mask = std::move(mask);
    s.epsilon = epsilon;
    return s;
}

SheafMask covering_sheaf(const GridField& field, const SampleCloud& cloud, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    cloud.validate();
    std::vector<double> at_points(cloud.size());
    for (std::size_t k = 0; k < cloud.size(); ++k) {
        const auto idx = field.geom.nearest(cloud.points[k]);
        at_points[k] = idx ? field.values[*idx] : -std::numeric_limits<double>::infinity();
    }
    const double t = level_for_coverage(std::move(at_points), 1.0 - epsilon);
    GridMask mask(field.geom);
    for (std::size_t q = 0; q < field.values.size(); ++q) mask.cells[q] = field.values[q] >= t ? 1 : 0;
    SheafMask s = sheaf_from_mask(std::move(mask), epsilon);
    s.threshold = t;
    return s;
}

SheafMask gaussian_union_sheaf(const GridGeometry& grid, const SampleCloud& cloud, double epsilon,
                               double floor_sigma) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    cloud.validate();
    // chi-square(2) quantile at 1 - epsilon
    const double level = -2.0 * std::log(epsilon);
    GridMask mask(grid);
    for (std::size_t k = 0; k < cloud.size(); ++k) {
        Mat2 v = cloud.covariances.empty() ? Mat2{} : cloud.covariances[k];
        v = v + Mat2::identity(floor_sigma * floor_sigma);
        const Mat2 vi = v.inverse();
        const double reach = std::sqrt(level * v.eigenvalues().second);
        const Point2 p = cloud.points[k];
        const Point2 lo = grid.to_grid(p - Point2{reach, reach});
        const Point2 hi = grid.to_grid(p + Point2{reach, reach});
        const double i0 = std::max(0.0, std::ceil(lo.x));
        const double j0 = std::max(0.0, std::ceil(lo.y));
        const double i1 = std::min(static_cast<double>(grid.nx) - 1.0, std::floor(hi.x));
        const double j1 = std::min(static_cast<double>(grid.ny) - 1.0, std::floor(hi.y));
        for (double j = j0; j <= j1; j += 1.0) {
            for (double i = i0; i <= i1; i += 1.0) {
                const auto ii = static_cast<std::size_t>(i);
                const auto jj = static_cast<std::size_t>(j);
                const Point2 u = grid.center(ii, jj) - p;
                if (u.dot(vi * u) <= level) mask.cells[grid.index(ii, jj)] = 1;
            }
        }
        // the sample's own cell is always covered
        if (const auto idx = grid.nearest(p)) mask.cells[*idx] = 1;
    }
    return sheaf_from_mask(std::move(mask), epsilon);
}

}  // namespace refmap
