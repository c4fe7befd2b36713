// One PASS/FAIL line per acceptance criterion. `--only N` runs a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "refmap/bounds.hpp"
#include "refmap/pipeline.hpp"
#include "support.hpp"

using namespace refmap;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1. invert(forward(s)) == s for 10^4 feasible triples, under a second.
Outcome geometry_roundtrip() {
    std::mt19937_64 rng(101);
    std::vector<gen::Triple> triples;
    for (int k = 0; k < 10000; ++k) triples.push_back(gen::feasible_triple(rng));
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t bad = 0;
    for (const auto& t : triples) {
        const Inversion inv = try_invert_measurement(forward_path(t.user, t.bs, t.reflector), t.user, t.bs);
        const double e = inv.status == InversionStatus::ok ? distance(inv.reflector, t.reflector) : INFINITY;
        worst = std::max(worst, e);
        bad += e < 1e-9 ? 0 : 1;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {bad == 0 && secs < 1.0, fmt("worst error %.3g m, %zu/10000 above 1e-9, %.3f s", worst, bad, secs)};
}

// 2. Analytic V against a 10^6-draw covariance. Diagonal entries are compared
// to themselves, the off-diagonal entry to sqrt(Vxx Vyy).
Outcome covariance_validity() {
    std::mt19937_64 rng(202);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double st = 1e-4;
    const double sk = 1e-12;
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        const auto t = gen::feasible_triple(rng);
        const Measurement m = forward_path(t.user, t.bs, t.reflector);
        const Mat2 v = measurement_covariance(m, {st * st, sk * sk}, t.user, t.bs);
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        const int draws = 1000000;
        for (int d = 0; d < draws; ++d) {
            const Inversion inv =
                try_invert_measurement(Measurement(m.theta() + st * n01(rng), m.tau() + sk * n01(rng)), t.user, t.bs);
            const double x = inv.reflector.x - t.reflector.x;
            const double y = inv.reflector.y - t.reflector.y;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        const double nd = draws;
        const double cxx = (sxx - sx * sx / nd) / (nd - 1);
        const double cxy = (sxy - sx * sy / nd) / (nd - 1);
        const double cyy = (syy - sy * sy / nd) / (nd - 1);
        worst = std::max({worst, std::abs(cxx - v.xx) / v.xx, std::abs(cyy - v.yy) / v.yy,
                          std::abs(cxy - v.xy) / std::sqrt(v.xx * v.yy)});
    }
    return {worst < 0.02, fmt("worst relative entry error %.4f over 100 configurations", worst)};
}

// 3. Estimator bias and variance law on a 4 x 2.5 m rectangle.
std::complex<double> rect_transform(double a, double b, double l1, double l2) {
    auto axis = [](double len, double l) -> std::complex<double> {
        if (l == 0.0) return 1.0;
        const double w = 2.0 * std::numbers::pi * l;
        return (1.0 - std::exp(std::complex<double>(0.0, -w * len))) / std::complex<double>(0.0, w * len);
    };
    return axis(a, l1) * axis(b, l2);
}

SampleCloud rect_cloud(std::mt19937_64& rng, std::size_t n, double a, double b) {
    SampleCloud c;
    c.points.reserve(n);
    for (std::size_t k = 0; k < n; ++k) c.points.push_back({gen::uniform(rng, 0, a), gen::uniform(rng, 0, b)});
    return c;
}

Outcome estimator_laws() {
    const double a = 4.0, b = 2.5;
    std::mt19937_64 rng(303);
    const std::vector<std::pair<double, double>> lambdas{{1 / (2 * a), 1 / (2 * b)},
                                                         {0.0, 0.0},
                                                         {0.05, 0.0},
                                                         {0.0, 0.1},
                                                         {0.1, 0.1},
                                                         {0.3, -0.2},
                                                         {-0.4, 0.15},
                                                         {0.25, 0.4},
                                                         {0.6, 0.0},
                                                         {0.8, -0.7}};
    const std::size_t n = 100, reps = 2000;
    double worst_z = 0.0;
    for (const auto& [l1, l2] : lambdas) {
        std::vector<std::complex<double>> est(reps);
        for (auto& e : est) e = fourier_estimate(rect_cloud(rng, n, a, b), l1, l2);
        std::complex<double> mean = 0.0;
        for (auto e : est) mean += e;
        mean /= double(reps);
        const std::complex<double> f = rect_transform(a, b, l1, l2);
        const double var = (1.0 - std::norm(f)) / double(n);
        const double se = std::sqrt(var / double(reps));
        worst_z = std::max(worst_z, se > 0 ? std::abs(mean - f) / se : (std::abs(mean - f) < 1e-12 ? 0.0 : INFINITY));
    }

    const double l1 = 1 / (2 * a), l2 = 1 / (2 * b);
    const std::complex<double> f = rect_transform(a, b, l1, l2);
    std::vector<double> lx, ly;
    for (std::size_t nn : {100u, 1000u, 10000u, 100000u}) {
        const std::size_t r = 1000;
        double v = 0.0;
        for (std::size_t k = 0; k < r; ++k) v += std::norm(fourier_estimate(rect_cloud(rng, nn, a, b), l1, l2) - f);
        lx.push_back(std::log(double(nn)));
        ly.push_back(std::log(v / double(r)));
    }
    const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4;
    const double my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    const double slope = sxy / sxx;
    return {worst_z <= 3.0 && std::abs(slope + 1.0) <= 0.1,
            fmt("largest bias %.2f standard errors over 10 lambdas, variance slope %.3f", worst_z, slope)};
}

// 4. Offline map recovery at the default settings.
Outcome map_recovery() {
    ExperimentConfig cfg;
    cfg.seed = 3;
    const Environment env = generate_environment(cfg.environment, cfg.seed);
    const MapProducts m = survey(env, cfg.offline, cfg.noise_model(0x1000));
    std::size_t covered = 0;
    for (const Point2& r : env.reflectors) covered += m.sheaf.mask.contains(r) ? 1 : 0;
    bool monotone = true;
    const auto& s = m.recovery.step_norms;
    for (std::size_t k = 1; k < s.size(); ++k) monotone = monotone && s[k] <= s[k - 1];
    const double frac = double(covered) / double(env.reflectors.size());
    return {m.cloud.size() >= 2000 && frac >= 0.95 && monotone && s.size() == 10,
            fmt("%zu samples, sheaf covers %zu/%zu reflectors, %zu step norms %s", m.cloud.size(), covered,
                env.reflectors.size(), s.size(), monotone ? "non-increasing" : "NOT monotone")};
}

// 5. Bound radii at the published ratios.
Outcome bound_radii() {
    const double r1 = equivalent_radius(ambiguity_lower_bound({40000, 40000 / 15.9, 3, 0.05}));
    const double r2 = equivalent_radius(ambiguity_lower_bound({40000, 40000 / 31.8, 3, 0.05}));
    return {std::abs(r1 - 1.62) <= 0.05 && std::abs(r2 - 0.60) <= 0.05, fmt("radii %.3f m and %.3f m", r1, r2)};
}

// 6. Empirical ambiguity area against the bound, 100 structures per ratio.
Outcome bound_dominance() {
    ExperimentConfig cfg;
    std::string detail;
    std::size_t violations = 0;
    bool ok = true;
    for (double target : {15.9, 31.8}) {
        AmbiguityConfig a;
        a.spec = cfg.environment;
        a.spec.family = EnvironmentFamily::random_scatter;
        a.spec.target_ratio = target;
        a.n_r = 3;
        a.structures = 100;
        const AmbiguityEstimate est = monte_carlo_ambiguity(a, derive_seed(cfg.seed, 0x6000));
        const double vol_sa = a.spec.width * a.spec.height;
        const double bound = ambiguity_lower_bound({vol_sa, vol_sa / est.mean_ratio, a.n_r, a.epsilon});
        const bool v = !(est.area >= bound);
        violations += v ? 1 : 0;
        if (target == 15.9) ok = !v && est.trials > 0;
        detail += fmt("ratio %.1f: area %.3f m2 vs bound %.3f m2 (%zu trials); ", est.mean_ratio, est.area, bound, est.trials);
    }
    return {ok, detail + fmt("%zu violations", violations)};
}

// 7. CDF trends over the noise grid and n_r.
Outcome localization_trends() {
    ExperimentConfig cfg;
    cfg.cdf.trials = 1000;
    const Environment env = generate_environment(cfg.environment, cfg.seed);
    const auto cells = run_cdf_experiment(cfg, env);
    auto find = [&](std::size_t noise, std::size_t n_r) -> const CdfCell& {
        for (const auto& c : cells) {
            if (c.noise == cfg.cdf.noise_levels[noise] && c.n_r == n_r) return c;
        }
        throw Error("missing CDF cell");
    };
    bool trend = true;
    std::string detail = "medians";
    for (std::size_t n_r : cfg.cdf.n_r_values) {
        detail += fmt(" n_r=%zu:", n_r);
        for (std::size_t i = 0; i < cfg.cdf.noise_levels.size(); ++i) {
            const double med = find(i, n_r).table.median();
            detail += fmt(" %.3f", med);
            if (i > 0) trend = trend && med < find(i - 1, n_r).table.median();
        }
    }
    bool dominance = true;
    const CdfTable& t4 = find(0, 4).table;
    const CdfTable& t8 = find(0, 8).table;
    detail += "; quantiles n_r=8 vs 4:";
    for (double p : {0.25, 0.5, 0.75}) {
        dominance = dominance && t8.quantile(p) <= t4.quantile(p);
        detail += fmt(" %.3f/%.3f", t8.quantile(p), t4.quantile(p));
    }
    return {trend && dominance, detail};
}

// 8. Zero-noise localization with three paths and well-conditioned geometry.
double radial_smin(const MeasurementSet& ms, const Point2& user, const Point2& bs) {
    // Smallest singular value of the stacked d r_i / d p_u rows.
    double a = 0, b = 0, c = 0;
    const double h = 1e-4;
    for (const auto& e : ms.entries) {
        const double r0 = try_invert_measurement(e.m, user, bs).radius;
        const double gx = (try_invert_measurement(e.m, user + Point2{h, 0}, bs).radius - r0) / h;
        const double gy = (try_invert_measurement(e.m, user + Point2{0, h}, bs).radius - r0) / h;
        a += gx * gx;
        b += gx * gy;
        c += gy * gy;
    }
    return std::sqrt(std::max(0.0, 0.5 * ((a + c) - std::sqrt((a - c) * (a - c) + 4 * b * b))));
}

Outcome zero_noise_exactness() {
    ExperimentConfig cfg;
    cfg.noise = {0.0, 0.0};
    const Environment env = generate_environment(cfg.environment, 1);
    const MapProducts m = survey(env, cfg.offline, cfg.noise_model(0x1000));
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x2000));
    const NoiseModel noise = cfg.noise_model(0x3000);
    std::size_t trials = 0, ok = 0, redrawn = 0;
    for (std::uint64_t epoch = 0; trials < 500; ++epoch) {
        const Point2 user = random_point_in(env.rol, rng);
        const MeasurementSet ms = sample_measurements(env, user, 3, noise, epoch);
        if (ms.blind || ms.size() < 3 || radial_smin(ms, user, env.bs) < 0.2) {
            ++redrawn;
            continue;
        }
        const ScoreContext ctx(ms, m.sheaf, env.bs, env.rol, cfg.online.score);
        LocalizeOptions lo = cfg.online.localize;
        lo.seed = derive_seed(lo.seed, epoch);
        ok += distance(localize(ctx, lo).p_hat, user) < 0.25 ? 1 : 0;
        ++trials;
    }
    return {ok * 100 >= 99 * trials,
            fmt("%zu/%zu within 0.25 m (%zu degenerate or blind draws redrawn)", ok, trials, redrawn)};
}

// 9. Convergence of |M~| in shuffled order. N* is where three i.i.d. standard
// errors of the dB value fall below the 0.5 dB envelope; beyond it the
// peak-to-peak spread must stay under 0.5 dB.
Outcome convergence_curve_check() {
    ExperimentConfig cfg;
    cfg.seed = 3;
    const Environment env = generate_environment(cfg.environment, cfg.seed);
    const OfflineCollection off = collect_offline(env, boundary_test_points(env, 0.1, 0.0), cfg.offline.n_r,
                                                  cfg.noise_model(0x1000));
    SampleCloud cloud = SampleCloud::from(off);
    std::mt19937_64 rng(909);
    std::shuffle(cloud.points.begin(), cloud.points.end(), rng);
    const std::vector<std::pair<double, double>> lambdas{{0.0, 0.0}, {0.02, 0.0}, {0.0, 0.03}, {0.05, 0.0}, {0.0, 0.05}};
    const auto sizes = geometric_prefixes(cloud.size(), 200);
    bool ok = true;
    double flat_n = 0.0;
    std::string detail = fmt("N=%zu;", cloud.size());
    for (const auto& l : lambdas) {
        const auto pts = convergence_curve(cloud, {l}, sizes);
        const double f = std::pow(10.0, pts.back().magnitude_db / 10.0);
        const double db_per_unit = 10.0 / std::numbers::ln10;
        const double n_star = std::pow(3.0 * db_per_unit / 0.5, 2) * (1.0 - f * f) / (f * f);
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& p : pts) {
            if (double(p.n) < n_star) continue;
            lo = std::min(lo, p.magnitude_db);
            hi = std::max(hi, p.magnitude_db);
        }
        const bool reached = n_star <= double(cloud.size());
        ok = ok && reached && hi - lo < 0.5;
        flat_n = std::max(flat_n, n_star);
        detail += fmt(" (%.2f,%.2f) N*=%.0f spread %.3f dB;", l.first, l.second, n_star, reached ? hi - lo : NAN);
    }
    return {ok, detail + fmt(" flattening N %.0f (reference ~4000)", flat_n)};
}

// 10. Shape constants and test-point counts.
Outcome lemma_geometry() {
    const double g_circle = shape_gamma(Polygon::circle({0, 0}, 10.0, 4096));
    const double g_square = shape_gamma(Polygon::rectangle(0, 0, 100, 100));
    const Polygon sq = Polygon::rectangle(0, 0, 100, 100);
    const double nb = double(polygon_boundary_points(sq, 0.5, 0.0).size());
    const double na = double(polygon_area_points(sq, 0.5).size());
    const double limit = 2.0 * g_square * std::sqrt(na);
    const bool ok = std::abs(g_circle / (2 * std::sqrt(std::numbers::pi)) - 1) <= 0.01 && std::abs(g_square / 4 - 1) <= 0.01 &&
                    nb <= 1.05 * limit;
    return {ok, fmt("gamma circle %.4f, square %.4f; boundary %g vs area %g points, ratio/sqrt(n) %.3f <= 2 gamma %.3f",
                    g_circle, g_square, nb, na, nb / std::sqrt(na), 2.0 * g_square)};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    }
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double budget_s;
    };
    const std::vector<Criterion> criteria{
        {"geometry roundtrip", geometry_roundtrip, 60},
        {"covariance validity", covariance_validity, 120},
        {"estimator laws", estimator_laws, 120},
        {"map recovery", map_recovery, 300},
        {"bound radii", bound_radii, 60},
        {"bound dominance", bound_dominance, 1200},
        {"localization trends", localization_trends, 1800},
        {"zero-noise exactness", zero_noise_exactness, 600},
        {"estimator convergence curve", convergence_curve_check, 600},
        {"shape constants", lemma_geometry, 60},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && static_cast<std::size_t>(only) != k + 1) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > criteria[k].budget_s) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", criteria[k].budget_s);
        }
        std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].name,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
