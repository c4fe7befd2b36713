#include "refmap/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include "refmap/parallel.hpp"
#include "refmap/simd.hpp"

namespace refmap {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Region sector_subset(const SheafMask& sheaf, const Point2& bs, double theta, double delta, double lateral) {
    if (!(delta > 0.0)) throw std::invalid_argument("sector half-width must be positive");
    const GridGeometry& g = sheaf.geom();
    Region out(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!sheaf.mask.cells[k]) continue;
        if (delta >= std::numbers::pi) {
            out.cells[k] = 1;
            continue;
        }
        const Point2 rel = g.center(k) - bs;
        const double range = rel.norm();
        double half = delta;
        if (lateral > 0.0) half += range > lateral ? std::asin(lateral / range) : std::numbers::pi;
        if (range == 0.0 || std::abs(wrap_angle(rel.angle() - theta)) <= half) out.cells[k] = 1;
    }
    return out;
}

Region annulus_region(const Region& rol_cells, const Point2& bs, const Region& sector, double tau0, double tau1,
                      double widen) {
    if (!(tau0 < tau1)) throw std::invalid_argument("annulus needs tau0 < tau1");
    const GridGeometry& g = rol_cells.geom;
    Region out(g);
    if (sector.empty()) return out;
    const double len0 = kSpeedOfLight * tau0 - widen;
    const double len1 = std::isfinite(tau1) ? kSpeedOfLight * tau1 + widen : std::numeric_limits<double>::infinity();

    // Per row: +1/-1 markers of covered x-index spans, then a running sum.
    std::vector<int> marks((g.nx + 1) * g.ny, 0);
    auto mark = [&](std::size_t j, double xa, double xb) {
        const double ia = std::ceil((xa - g.origin.x) / g.pitch);
        const double ib = std::floor((xb - g.origin.x) / g.pitch);
        const double lo = std::max(ia, 0.0);
        const double hi = std::min(ib, static_cast<double>(g.nx) - 1.0);
        if (lo > hi) return;
        marks[j * (g.nx + 1) + static_cast<std::size_t>(lo)] += 1;
        marks[j * (g.nx + 1) + static_cast<std::size_t>(hi) + 1] -= 1;
    };

    for (std::size_t qi : sector.indices()) {
        const Point2 q = sector.geom.center(qi);
        const double back = distance(bs, q);
        const double r_in = std::max(0.0, len0 - back);
        const double r_out = len1 - back;
        if (!(r_out > 0.0)) continue;
        for (std::size_t j = 0; j < g.ny; ++j) {
            const double dy = g.origin.y + static_cast<double>(j) * g.pitch - q.y;
            if (std::abs(dy) > r_out) continue;
            const double a = std::isfinite(r_out) ? std::sqrt(r_out * r_out - dy * dy) : 1e300;
            if (std::abs(dy) < r_in) {
                const double b = std::sqrt(r_in * r_in - dy * dy);
                mark(j, q.x - a, q.x - b);
                mark(j, q.x + b, q.x + a);
            } else {
                mark(j, q.x - a, q.x + a);
            }
        }
    }
    for (std::size_t j = 0; j < g.ny; ++j) {
        int run = 0;
        for (std::size_t i = 0; i < g.nx; ++i) {
            run += marks[j * (g.nx + 1) + i];
            const std::size_t k = g.index(i, j);
            out.cells[k] = (run > 0 && rol_cells.cells[k]) ? 1 : 0;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

struct PathTerms {
    PathObservation obs;
    Region sector;
    std::vector<double> xs, ys;
};

namespace {

bool observation_less(const PathObservation& a, const PathObservation& b) {
    return std::make_tuple(a.m.theta(), a.m.tau(), a.var.var_theta, a.var.var_tau) <
           std::make_tuple(b.m.theta(), b.m.tau(), b.var.var_theta, b.var.var_tau);
}

// Sector widening: half a cell diagonal plus k floor deviations.
double sector_lateral(double pitch, double k_sigma, double floor_sigma) {
    return 0.5 * std::numbers::sqrt2 * pitch + k_sigma * floor_sigma;
}

}  // namespace

ScoreContext::ScoreContext(MeasurementSet measurements, SheafMask sheaf, const Point2& bs, Polygon rol,
                           const ScoreOptions& opts)
    : ms_(std::move(measurements)), sheaf_(std::move(sheaf)), bs_(bs), rol_(std::move(rol)), opts_(opts) {
    if (ms_.empty()) throw std::invalid_argument("score context needs at least one measurement");
    if (sheaf_.mask.empty()) throw std::invalid_argument("score context needs a non-empty sheaf");
    if (!(opts_.k_sigma > 0.0)) throw std::invalid_argument("k_sigma must be positive");
    const double pitch = sheaf_.geom().pitch;
    floor_sigma_ = opts_.floor_sigma >= 0.0 ? opts_.floor_sigma : pitch;
    const double rol_pitch = opts_.rol_pitch > 0.0 ? opts_.rol_pitch : pitch;
    rol_cells_ = polygon_mask(GridGeometry::covering(rol_.bounds(), rol_pitch), rol_);

    // Canonical order makes every score independent of how the caller listed
    // the paths.
    std::sort(ms_.entries.begin(), ms_.entries.end(), observation_less);
    ms_.truth.reset();

    const double lateral = sector_lateral(pitch, opts_.k_sigma, floor_sigma_);
    Region all(sheaf_.geom());
    for (const auto& obs : ms_.entries) {
        PathTerms t;
        t.obs = obs;
        const double delta = std::max(opts_.k_sigma * std::sqrt(obs.var.var_theta), 1e-12);
        t.sector = sector_subset(sheaf_, bs_, obs.m.theta(), delta, lateral);
        for (std::size_t k : t.sector.indices()) {
            const Point2 c = t.sector.geom.center(k);
            t.xs.push_back(c.x);
            t.ys.push_back(c.y);
            all.cells[k] = 1;
        }
        paths_.push_back(std::move(t));
    }
    for (std::size_t k : all.indices()) {
        const Point2 c = all.geom.center(k);
        union_x_.push_back(c.x);
        union_y_.push_back(c.y);
    }
}

ScoreContext::~ScoreContext() = default;
ScoreContext::ScoreContext(ScoreContext&&) noexcept = default;
ScoreContext& ScoreContext::operator=(ScoreContext&&) noexcept = default;

const Region& ScoreContext::sector(std::size_t i) const { return paths_.at(i).sector; }

std::size_t ScoreContext::infeasible_count(const Point2& p) const {
    std::size_t n = 0;
    for (const auto& t : paths_) {
        if (try_invert_measurement(t.obs.m, p, bs_).status != InversionStatus::ok) ++n;
    }
    return n;
}

double ScoreContext::log_q(const Point2& p) const {
    const auto& kern = simd::kernels();
    const double log_cell = std::log(sheaf_.geom().cell_area());
    thread_local std::vector<double> q;

    if (opts_.mode == ScoreMode::per_path) {
        // sum of per-path log factors, added in sorted order for determinism
        thread_local std::vector<double> logs;
        logs.clear();
        for (const auto& t : paths_) {
            if (t.xs.empty()) return kNegInf;
            const Inversion inv = try_invert_measurement(t.obs.m, p, bs_);
            const auto cov = try_measurement_covariance(t.obs.m, t.obs.var, p, bs_);
            if (inv.status != InversionStatus::ok || !cov) return kNegInf;
            const Mat2 vi = (*cov + Mat2::identity(floor_sigma_ * floor_sigma_)).inverse();
            q.assign(t.xs.size(), 0.0);
            kern.accumulate_quadratic_form(t.xs.data(), t.ys.data(), t.xs.size(), inv.reflector.x, inv.reflector.y,
                                           vi.xx, 0.5 * (vi.xy + vi.yx), vi.yy, q.data());
            const double qmin = kern.min_value(q.data(), q.size());
            logs.push_back(log_cell - 0.5 * qmin + std::log(kern.sum_exp_neg_half(q.data(), q.size(), qmin)));
        }
        std::sort(logs.begin(), logs.end());
        double s = 0.0;
        for (double v : logs) s += v;
        return s;
    }

    if (union_x_.empty()) return kNegInf;
    q.assign(union_x_.size(), 0.0);
    for (const auto& t : paths_) {
        const Inversion inv = try_invert_measurement(t.obs.m, p, bs_);
        const auto cov = try_measurement_covariance(t.obs.m, t.obs.var, p, bs_);
        if (inv.status != InversionStatus::ok || !cov) return kNegInf;
        const Mat2 vi = (*cov + Mat2::identity(floor_sigma_ * floor_sigma_)).inverse();
        kern.accumulate_quadratic_form(union_x_.data(), union_y_.data(), union_x_.size(), inv.reflector.x,
                                       inv.reflector.y, vi.xx, 0.5 * (vi.xy + vi.yx), vi.yy, q.data());
    }
    const double qmin = kern.min_value(q.data(), q.size());
    return log_cell - 0.5 * qmin + std::log(kern.sum_exp_neg_half(q.data(), q.size(), qmin));
}

double ScoreContext::q(const Point2& p) const { return std::exp(log_q(p)); }

// ---------------------------------------------------------------------------

Prelocalization prelocalize(const ScoreContext& ctx) {
    const ScoreOptions& o = ctx.options();
    const Region& rol = ctx.rol_cells();
    const double widen = 1.5 * std::numbers::sqrt2 * std::max(ctx.sheaf().geom().pitch, rol.geom.pitch);
    Prelocalization out;
    out.region = rol;
    for (std::size_t i = 0; i < ctx.measurements().size(); ++i) {
        const auto& obs = ctx.measurements().entries[i];
        const double margin = std::max(o.tau_sigmas * std::sqrt(obs.var.var_tau), o.tau_floor);
        Region k = annulus_region(rol, ctx.bs(), ctx.sector(i), obs.m.tau() - margin, obs.m.tau() + margin, widen);
        for (std::size_t c = 0; c < k.cells.size(); ++c) out.region.cells[c] &= k.cells[c];
        out.per_path.push_back(std::move(k));
    }
    if (out.region.empty()) {
        out.region = rol;
        out.fallback = true;
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

Point2 central_gradient(const std::function<double(const Point2&)>& f, const Point2& p, double fp, double dx) {
    auto axis = [&](const Point2& e) {
        const double plus = f(p + e * dx);
        const double minus = f(p - e * dx);
        const bool pf = std::isfinite(plus);
        const bool mf = std::isfinite(minus);
        if (pf && mf) return (plus - minus) / (2.0 * dx);
        if (!std::isfinite(fp)) return 0.0;
        if (pf) return (plus - fp) / dx;
        if (mf) return (fp - minus) / dx;
        return 0.0;
    };
    return {axis({1.0, 0.0}), axis({0.0, 1.0})};
}

void check_value(double v, const std::vector<Point2>& trace) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
        throw AscentError("score is not finite during ascent", trace);
    }
}

}  // namespace

AscentResult gradient_ascent(const std::function<double(const Point2&)>& objective, const Polygon& domain,
                             const Point2& start, const AscentOptions& opts) {
    if (!(opts.dx > 0.0) || !(opts.tol > 0.0)) throw std::invalid_argument("ascent dx and tol must be positive");
    AscentResult r;
    Point2 p = domain.clamp(start);
    double f = objective(p);
    r.trace.push_back(p);
    check_value(f, r.trace);
    r.p = p;
    r.objective = f;

    const bool normalized = !(opts.gamma > 0.0);
    double step = 4.0 * opts.dx;
    double gamma = opts.gamma;
    Point2 prev_dir{0.0, 0.0};

    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        r.iterations = it + 1;
        const Point2 g = central_gradient(objective, p, f, opts.dx);
        if (!g.finite()) throw AscentError("gradient is not finite during ascent", r.trace);
        const double gn = g.norm();
        if (gn == 0.0) break;

        if (normalized) {
            const Point2 dir = g / gn;
            if (dir.dot(prev_dir) < 0.0) step *= 0.5;
            const Point2 cand = domain.clamp(p + dir * step);
            const double fc = objective(cand);
            check_value(fc, r.trace);
            if (fc > f) {
                const double moved = distance(cand, p);
                p = cand;
                f = fc;
                prev_dir = dir;
                r.trace.push_back(p);
                if (moved < opts.tol) break;
            } else {
                step *= 0.5;
            }
            if (step < opts.tol) break;
        } else {
            Point2 cand = domain.clamp(p + g * gamma);
            double fc = objective(cand);
            check_value(fc, r.trace);
            if (opts.backtracking) {
                double local = gamma;
                while (fc < f && distance(cand, p) >= opts.tol) {
                    local *= 0.5;
                    cand = domain.clamp(p + g * local);
                    fc = objective(cand);
                    check_value(fc, r.trace);
                }
                if (fc < f) break;
            }
            const double moved = distance(cand, p);
            p = cand;
            f = fc;
            r.trace.push_back(p);
            if (f > r.objective) {
                r.objective = f;
                r.p = p;
            }
            if (moved < opts.tol) break;
        }
        if (f > r.objective) {
            r.objective = f;
            r.p = p;
        }
    }
    return r;
}

AscentResult gradient_ascent(const ScoreContext& ctx, const Point2& start, const AscentOptions& opts) {
    return gradient_ascent([&ctx](const Point2& p) { return ctx.log_q(p); }, ctx.rol(), start, opts);
}

// ---------------------------------------------------------------------------

LocalizationResult localize(const ScoreContext& ctx, const LocalizeOptions& opts) {
    if (ctx.measurements().empty()) throw std::invalid_argument("localize needs measurements");
    if (opts.n_starts == 0) throw std::invalid_argument("localize needs at least one start");
    LocalizationResult out;
    Prelocalization pre = prelocalize(ctx);
    out.region_fallback = pre.fallback;

    const std::vector<std::size_t> cells = pre.region.indices();
    const GridGeometry& g = pre.region.geom;
    if (ctx.rol_cells().count() == 1) {
        out.p_hat = g.center(ctx.rol_cells().indices().front());
        out.log_score = ctx.log_q(out.p_hat);
        out.score = std::exp(out.log_score);
        out.region = std::move(pre.region);
        out.starts = 1;
        out.trace.push_back({out.p_hat});
        return out;
    }

    const std::size_t n_starts = std::min(opts.n_starts, cells.size());
    std::vector<Point2> starts(n_starts);
    std::mt19937_64 rng = make_rng(opts.seed, 0x10ca1);
    for (std::size_t s = 0; s < n_starts; ++s) {
        const std::size_t lo = s * cells.size() / n_starts;
        const std::size_t hi = (s + 1) * cells.size() / n_starts;
        if (opts.start_mode == StartMode::random) {
            std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
            starts[s] = g.center(cells[pick(rng)]);
        } else {
            std::size_t best = lo;
            double best_v = kNegInf;
            for (std::size_t k = lo; k < hi; ++k) {
                const double v = ctx.log_q(g.center(cells[k]));
                if (v > best_v) {
                    best_v = v;
                    best = k;
                }
            }
            starts[s] = g.center(cells[best]);
        }
    }

    std::vector<AscentResult> runs(n_starts);
    parallel_for(n_starts, [&](std::size_t s) { runs[s] = gradient_ascent(ctx, starts[s], opts.ascent); });

    std::size_t best = 0;
    for (std::size_t s = 1; s < n_starts; ++s) {
        if (runs[s].objective > runs[best].objective) best = s;
    }
    out.p_hat = runs[best].p;
    out.log_score = runs[best].objective;
    out.score = std::exp(out.log_score);
    out.starts = n_starts;
    for (auto& r : runs) {
        out.iterations += r.iterations;
        out.trace.push_back(std::move(r.trace));
    }
    out.region = std::move(pre.region);
    return out;
}

GridArgmax grid_argmax(const ScoreContext& ctx, const Region& region, double refine_pitch) {
    const std::vector<std::size_t> cells = region.indices();
    if (cells.empty()) throw std::invalid_argument("grid_argmax needs a non-empty region");
    const GridGeometry& g = region.geom;
    std::vector<double> values(cells.size());
    parallel_for(cells.size(), [&](std::size_t k) { values[k] = ctx.log_q(g.center(cells[k])); });
    std::size_t best = 0;
    for (std::size_t k = 1; k < cells.size(); ++k) {
        if (values[k] > values[best]) best = k;
    }
    GridArgmax out{g.center(cells[best]), values[best]};
    if (refine_pitch > 0.0 && refine_pitch < g.pitch) {
        const auto steps = static_cast<long>(std::floor(g.pitch / refine_pitch + 1e-9));
        const Point2 c = out.p;
        for (long j = -steps; j <= steps; ++j) {
            for (long i = -steps; i <= steps; ++i) {
                const Point2 p = c + Point2{static_cast<double>(i) * refine_pitch, static_cast<double>(j) * refine_pitch};
                if (!ctx.rol().contains(p)) continue;
                const double v = ctx.log_q(p);
                if (v > out.log_score) out = {p, v};
            }
        }
    }
    return out;
}

GridField score_surface(const ScoreContext& ctx) {
    const Region& rol = ctx.rol_cells();
    GridField f(rol.geom, kNegInf);
    parallel_for(rol.geom.size(), [&](std::size_t k) {
        if (rol.cells[k]) f.values[k] = ctx.log_q(rol.geom.center(k));
    });
    return f;
}

}  // namespace refmap
