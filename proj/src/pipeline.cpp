#include "refmap/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "refmap/parallel.hpp"

namespace refmap {

namespace {

// Stream tags for derive_seed; each experiment stage draws from its own.
constexpr std::uint64_t kOfflineNoiseStream = 0x1000;
constexpr std::uint64_t kUserStream = 0x2000;
constexpr std::uint64_t kOnlineNoiseStream = 0x3000;

}  // namespace

SampleCloud cloud_from_log(const std::vector<Point2>& test_points, const std::map<std::uint64_t, MeasurementSet>& log,
                           const Point2& bs, std::size_t& skipped) {
    SampleCloud cloud;
    skipped = 0;
    for (const auto& [epoch, ms] : log) {
        if (epoch >= test_points.size()) throw Error("measurement epoch " + std::to_string(epoch) + " has no test point");
        const Point2& tx = test_points[epoch];
        for (const auto& obs : ms.entries) {
            const Inversion inv = try_invert_measurement(obs.m, tx, bs);
            const auto cov = try_measurement_covariance(obs.m, obs.var, tx, bs);
            if (inv.status != InversionStatus::ok || !cov) {
                ++skipped;
                continue;
            }
            cloud.points.push_back(inv.reflector);
            cloud.covariances.push_back(*cov);
        }
    }
    return cloud;
}

MapProducts build_map(SampleCloud cloud, const Polygon& rol, const OfflineConfig& cfg) {
    if (cloud.points.empty()) throw Error("no usable offline samples");
    MapProducts out;
    const GridGeometry grid = default_map_grid(rol, cfg.pitch, cfg.padding);
    RecoveryOptions ro;
    ro.alpha = cfg.alpha;
    ro.iterations = cfg.iterations;
    ro.lambda_m = cfg.lambda_m;
    ro.method = cfg.projection;
    ro.equalize_density = cfg.equalize_density;
    out.recovery = recover_map(cloud, grid, ro);
    out.sheaf = covering_sheaf(out.recovery.field, cloud, cfg.epsilon);
    out.cloud = std::move(cloud);
    return out;
}

MapProducts survey(const Environment& env, const OfflineConfig& cfg, const NoiseModel& noise,
                   const SamplingOptions& sampling) {
    const auto tps = boundary_test_points(env, cfg.spacing, cfg.offset);
    const OfflineCollection off = collect_offline(env, tps, cfg.n_r, noise, sampling);
    MapProducts out = build_map(SampleCloud::from(off), env.rol, cfg);
    out.skipped = off.skipped;
    return out;
}

std::vector<std::size_t> geometric_prefixes(std::size_t n, std::size_t count, std::size_t first) {
    std::vector<std::size_t> out;
    if (n == 0) return out;
    first = std::clamp<std::size_t>(first, 1, n);
    if (count <= 1 || first == n) return {n};
    const double ratio = std::pow(static_cast<double>(n) / static_cast<double>(first), 1.0 / static_cast<double>(count - 1));
    double v = static_cast<double>(first);
    for (std::size_t i = 0; i < count; ++i, v *= ratio) {
        const auto k = std::min(n, static_cast<std::size_t>(std::llround(v)));
        if (out.empty() || k > out.back()) out.push_back(k);
    }
    if (out.back() != n) out.push_back(n);
    return out;
}

std::optional<TrialResult> localization_trial(const Environment& env, const SheafMask& sheaf, const Polygon& rol,
                                              const Point2& user, std::size_t n_r, const NoiseModel& noise,
                                              std::uint64_t epoch, const SamplingOptions& sampling,
                                              const OnlineConfig& online) {
    MeasurementSet ms = sample_measurements(env, user, n_r, noise, epoch, sampling);
    if (ms.blind || ms.empty()) return std::nullopt;
    const ScoreContext ctx(std::move(ms), sheaf, env.bs, rol, online.score);
    LocalizeOptions lo = online.localize;
    lo.seed = derive_seed(online.localize.seed, epoch);
    TrialResult t{user, localize(ctx, lo), 0.0};
    t.error = distance(t.result.p_hat, user);
    return t;
}

Polygon restricted_rol(const Polygon& rol, double side) {
    const Box b = rol.bounds();
    const Point2 c{0.5 * (b.lo.x + b.hi.x), 0.5 * (b.lo.y + b.hi.y)};
    const double hx = std::min(0.5 * side, 0.5 * b.width());
    const double hy = std::min(0.5 * side, 0.5 * b.height());
    return Polygon::rectangle(c.x - hx, c.y - hy, c.x + hx, c.y + hy);
}

std::vector<CdfCell> run_cdf_experiment(const ExperimentConfig& cfg, const Environment& env) {
    std::vector<CdfCell> cells;
    std::uint64_t cell_id = 0;
    for (std::size_t li = 0; li < cfg.cdf.noise_levels.size(); ++li) {
        const NoiseLevel& level = cfg.cdf.noise_levels[li];
        const double st = deg_to_rad(level.sigma_theta_deg);
        const double sk = level.sigma_tau_ns * 1e-9;
        const MapProducts map =
            survey(env, cfg.offline, {st, sk, derive_seed(cfg.seed, kOfflineNoiseStream + li)}, cfg.sampling);

        for (std::size_t n_r : cfg.cdf.n_r_values) {
            const std::uint64_t id = cell_id++;
            CdfCell cell;
            cell.noise = level;
            cell.n_r = n_r;
            cell.restricted = n_r <= 2 && cfg.cdf.restricted_rol_side > 0.0;
            const Polygon rol = cell.restricted ? restricted_rol(env.rol, cfg.cdf.restricted_rol_side) : env.rol;
            const NoiseModel online_noise{st, sk, derive_seed(cfg.seed, kOnlineNoiseStream + id)};
            const std::uint64_t user_seed = derive_seed(cfg.seed, kUserStream + id);

            std::vector<std::optional<double>> errs(cfg.cdf.trials);
            parallel_for(cfg.cdf.trials, [&](std::size_t t) {
                std::mt19937_64 rng = make_rng(user_seed, t);
                const Point2 user = random_point_in(rol, rng);
                const auto r = localization_trial(env, map.sheaf, rol, user, n_r, online_noise, t, cfg.sampling,
                                                  cfg.online);
                if (r) errs[t] = r->error;
            });

            std::vector<double> ok;
            for (const auto& e : errs) {
                if (e) {
                    ok.push_back(*e);
                } else {
                    ++cell.blind;
                }
            }
            cell.trials = ok.size();
            cell.table = CdfTable(std::move(ok));
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

}  // namespace refmap
