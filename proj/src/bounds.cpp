#include "refmap/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "refmap/parallel.hpp"

namespace refmap {

void BoundInputs::validate() const {
    if (!(vol_sa > 0.0)) throw std::invalid_argument("vol_sa must be positive");
    if (!(vol_sheaf > 0.0)) throw std::invalid_argument("vol_sheaf must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
}

double ambiguity_lower_bound(const BoundInputs& b) {
    b.validate();
    return b.vol_sa * std::exp2(-static_cast<double>(b.n_r) * std::log2(1.0 + b.ratio()));
}

double equivalent_radius(double area) { return std::sqrt(area / std::numbers::pi); }

double log_accuracy_ratio(double vol_sa, double vol_su) {
    if (!(vol_sa > 0.0) || !(vol_su > 0.0)) throw std::invalid_argument("volumes must be positive");
    return std::log2(vol_sa / vol_su);
}

double ra_upper_bound(const BoundInputs& b) {
    b.validate();
    return static_cast<double>(b.n_r) * std::log2(1.0 + b.ratio());
}

double offset_cloud_area(std::vector<Point2> offsets, double epsilon, const KdeOptions& kde) {
    if (offsets.empty()) throw std::invalid_argument("offset cloud is empty");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    if (!(kde.pitch > 0.0) || !(kde.bandwidth > 0.0)) throw std::invalid_argument("kde pitch and bandwidth must be positive");
    std::sort(offsets.begin(), offsets.end(), [](const Point2& a, const Point2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });

    const double n = static_cast<double>(offsets.size());
    const double cutoff = kde.bandwidth * std::sqrt(2.0 * std::log(2.0 * n + 1.0));
    const auto reach = static_cast<long long>(std::ceil(cutoff / kde.pitch));
    const double inv2h2 = 1.0 / (2.0 * kde.bandwidth * kde.bandwidth);
    auto key = [](long long i, long long j) { return (i << 32) ^ (j & 0xffffffffLL); };
    auto cell_of = [&](const Point2& p) {
        return std::pair{static_cast<long long>(std::floor(p.x / kde.pitch + 0.5)),
                         static_cast<long long>(std::floor(p.y / kde.pitch + 0.5))};
    };

    std::unordered_map<long long, double> density;
    for (const Point2& o : offsets) {
        const auto [ci, cj] = cell_of(o);
        for (long long j = cj - reach; j <= cj + reach; ++j) {
            for (long long i = ci - reach; i <= ci + reach; ++i) {
                const Point2 c{static_cast<double>(i) * kde.pitch, static_cast<double>(j) * kde.pitch};
                const Point2 d = c - o;
                const double r2 = d.dot(d);
                if (r2 > cutoff * cutoff) continue;
                density[key(i, j)] += std::exp(-r2 * inv2h2);
            }
        }
    }

    std::vector<double> at_points;
    at_points.reserve(offsets.size());
    for (const Point2& o : offsets) {
        const auto [ci, cj] = cell_of(o);
        const auto it = density.find(key(ci, cj));
        at_points.push_back(it == density.end() ? 0.0 : it->second);
    }
    const double t = level_for_coverage(std::move(at_points), 1.0 - epsilon);
    std::size_t cells = 0;
    for (const auto& [k, v] : density) {
        if (v >= t) ++cells;
    }
    return static_cast<double>(cells) * kde.pitch * kde.pitch;
}

SheafMask ground_truth_sheaf(const Environment& env, const GridGeometry& g, double epsilon) {
    GridMask mask(g);
    if (!env.disks.empty()) {
        mask = disk_union_mask(env, g);
    } else {
        for (const Point2& r : env.reflectors) {
            if (const auto idx = g.nearest(r)) mask.cells[*idx] = 1;
        }
    }
    return sheaf_from_mask(std::move(mask), epsilon);
}

AmbiguityEstimate monte_carlo_ambiguity(const AmbiguityConfig& cfg, std::uint64_t seed) {
    if (cfg.structures == 0 || cfg.users_per_structure == 0) throw std::invalid_argument("need at least one trial");
    const std::size_t total = cfg.structures * cfg.users_per_structure;
    std::vector<std::optional<Point2>> offsets(total);
    std::vector<double> ratios(cfg.structures, 0.0);

    parallel_for(cfg.structures, [&](std::size_t s) {
        const Environment env = generate_environment(cfg.spec, derive_seed(seed, s));
        const GridGeometry g = GridGeometry::covering(env.rol.bounds(), cfg.pitch);
        const SheafMask sheaf = ground_truth_sheaf(env, g, cfg.epsilon);
        ratios[s] = env.rol.area() / sheaf.area;
        std::mt19937_64 rng = make_rng(seed, 0xa000000 + s);
        for (std::size_t u = 0; u < cfg.users_per_structure; ++u) {
            const Point2 user = random_point_in(env.rol, rng);
            NoiseModel noise{0.0, 0.0, derive_seed(seed, 0xb000000 + s)};
            const MeasurementSet ms = sample_measurements(env, user, cfg.n_r, noise, u);
            if (ms.blind) continue;
            ScoreContext ctx(ms, sheaf, env.bs, env.rol, cfg.score);
            const Prelocalization pre = prelocalize(ctx);
            const GridArgmax best = grid_argmax(ctx, pre.region, cfg.refine_pitch);
            if (!std::isfinite(best.log_score)) continue;
            offsets[s * cfg.users_per_structure + u] = best.p - user;
        }
    });

    AmbiguityEstimate out;
    for (const auto& o : offsets) {
        if (o) {
            out.offsets.push_back(*o);
        } else {
            ++out.skipped;
        }
    }
    out.trials = out.offsets.size();
    double ratio_sum = 0.0;
    for (double r : ratios) ratio_sum += r;
    out.mean_ratio = ratio_sum / static_cast<double>(ratios.size());
    if (!out.offsets.empty()) out.area = offset_cloud_area(out.offsets, cfg.epsilon, cfg.kde);
    return out;
}

}  // namespace refmap
