#include "refmap/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace refmap {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(derive_seed(seed, stream));
}

void Environment::validate() const {
    if (!bs.finite()) throw std::invalid_argument("environment: base station must be finite");
    if (!(rol.size() >= 3 && rol.area() > 0.0)) throw std::invalid_argument("environment: rol area must be positive");
    if (!boundary.is_simple()) throw std::invalid_argument("environment: boundary must be closed and simple");
    if (reflectors.empty()) throw std::invalid_argument("environment: reflector set is empty");
    for (const auto& r : reflectors) {
        if (!r.finite()) throw std::invalid_argument("environment: reflector coordinates must be finite");
    }
    if (reflectivity.size() != reflectors.size()) {
        throw std::invalid_argument("environment: reflectivity length must match reflectors");
    }
}

namespace {

Environment rectangle_room(const EnvironmentSpec& spec) {
    if (spec.per_wall == 0) throw std::invalid_argument("rectangle: per_wall must be positive");
    if (!(2.0 * spec.rol_inset < std::min(spec.width, spec.height)) || spec.rol_inset < 0.0) {
        throw std::invalid_argument("rectangle: rol inset leaves no area");
    }
    const double w = spec.width;
    const double h = spec.height;
    Environment env;
    env.boundary = Polygon::rectangle(0.0, 0.0, w, h);
    env.rol = Polygon::rectangle(spec.rol_inset, spec.rol_inset, w - spec.rol_inset, h - spec.rol_inset);
    env.bs = spec.bs.value_or(Point2{0.5 * w, 0.5 * h});
    const double k = static_cast<double>(spec.per_wall);
    for (std::size_t j = 0; j < spec.per_wall; ++j) {
        const double f = (static_cast<double>(j) + 0.5) / k;
        env.reflectors.push_back({f * w, 0.0});
        env.reflectors.push_back({w, f * h});
        env.reflectors.push_back({(1.0 - f) * w, h});
        env.reflectors.push_back({0.0, (1.0 - f) * h});
    }
    return env;
}

Environment random_scatter(const EnvironmentSpec& spec, std::uint64_t seed) {
    const double w = spec.width;
    const double h = spec.height;
    if (!(spec.target_ratio > 1.0)) throw Error("scatter: target ratio must exceed 1");
    if (!(spec.disk_radius > 0.0) || spec.points_per_disk == 0) {
        throw std::invalid_argument("scatter: disk radius and points per disk must be positive");
    }
    Environment env;
    env.boundary = Polygon::rectangle(0.0, 0.0, w, h);
    env.rol = env.boundary;
    env.bs = spec.bs.value_or(Point2{0.5 * w, 0.5 * h});

    const double target_area = w * h / spec.target_ratio;
    const double n_disks = std::max(1.0, std::round(target_area / (std::numbers::pi * spec.disk_radius * spec.disk_radius)));
    const double radius = std::sqrt(target_area / (n_disks * std::numbers::pi));
    if (!(2.0 * radius < std::min(w, h))) throw Error("scatter: requested ratio needs disks larger than the room");

    std::mt19937_64 rng = make_rng(seed, 0x5ca7);
    std::uniform_real_distribution<double> ux(radius, w - radius);
    std::uniform_real_distribution<double> uy(radius, h - radius);
    const std::size_t want = static_cast<std::size_t>(n_disks);
    const std::size_t max_attempts = 2000 * want + 10000;
    std::size_t attempts = 0;
    while (env.disks.size() < want) {
        if (++attempts > max_attempts) {
            throw Error("scatter: could not place " + std::to_string(want) + " disjoint disks of radius " +
                        std::to_string(radius) + " m; ratio unachievable for this area");
        }
        const Point2 c{ux(rng), uy(rng)};
        if (distance(c, env.bs) < radius + spec.bs_clearance) continue;
        const bool overlaps = std::any_of(env.disks.begin(), env.disks.end(), [&](const Disk& d) {
            return distance(d.center, c) < d.radius + radius + spec.ratio_pitch;
        });
        if (!overlaps) env.disks.push_back({c, radius});
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (const Disk& d : env.disks) {
        for (std::size_t k = 0; k < spec.points_per_disk; ++k) {
            const double rr = d.radius * std::sqrt(unit(rng));
            const double a = 2.0 * std::numbers::pi * unit(rng);
            env.reflectors.push_back(d.center + Point2{rr * std::cos(a), rr * std::sin(a)});
        }
    }
    return env;
}

Environment point_list(const EnvironmentSpec& spec) {
    Environment env;
    env.reflectors = spec.points;
    env.boundary = spec.boundary.value_or(Polygon::rectangle(0.0, 0.0, spec.width, spec.height));
    env.rol = spec.rol.value_or(env.boundary);
    const Box b = env.boundary.bounds();
    env.bs = spec.bs.value_or(b.lo + Point2{0.5 * b.width(), 0.5 * b.height()});
    return env;
}

}  // namespace

Environment generate_environment(const EnvironmentSpec& spec, std::uint64_t seed) {
    if (!(spec.width > 0.0) || !(spec.height > 0.0)) throw std::invalid_argument("environment extent must be positive");
    Environment env;
    switch (spec.family) {
        case EnvironmentFamily::rectangle: env = rectangle_room(spec); break;
        case EnvironmentFamily::random_scatter: env = random_scatter(spec, seed); break;
        case EnvironmentFamily::point_list: env = point_list(spec); break;
    }
    env.reflectivity.assign(env.reflectors.size(), 1.0);
    env.validate();
    if (spec.family == EnvironmentFamily::random_scatter) {
        const double realized = realized_area_ratio(env, spec.ratio_pitch);
        if (std::abs(realized / spec.target_ratio - 1.0) > 0.05) {
            throw Error("scatter: realized ratio " + std::to_string(realized) + " misses target " +
                        std::to_string(spec.target_ratio) + " by more than 5%");
        }
    }
    return env;
}

GridMask disk_union_mask(const Environment& env, const GridGeometry& g) {
    GridMask m(g);
    for (const Disk& d : env.disks) {
        const Point2 lo = g.to_grid(d.center - Point2{d.radius, d.radius});
        const Point2 hi = g.to_grid(d.center + Point2{d.radius, d.radius});
        const auto i0 = static_cast<std::size_t>(std::clamp(std::floor(lo.x), 0.0, static_cast<double>(g.nx - 1)));
        const auto j0 = static_cast<std::size_t>(std::clamp(std::floor(lo.y), 0.0, static_cast<double>(g.ny - 1)));
        const auto i1 = static_cast<std::size_t>(std::clamp(std::ceil(hi.x), 0.0, static_cast<double>(g.nx - 1)));
        const auto j1 = static_cast<std::size_t>(std::clamp(std::ceil(hi.y), 0.0, static_cast<double>(g.ny - 1)));
        for (std::size_t j = j0; j <= j1; ++j) {
            for (std::size_t i = i0; i <= i1; ++i) {
                if (distance(g.center(i, j), d.center) <= d.radius) m.cells[g.index(i, j)] = 1;
            }
        }
    }
    return m;
}

double realized_area_ratio(const Environment& env, double pitch) {
    if (env.disks.empty()) throw std::invalid_argument("realized_area_ratio needs reflector disks");
    const GridGeometry g = GridGeometry::covering(env.rol.bounds(), pitch);
    const double area = disk_union_mask(env, g).area();
    return env.rol.area() / area;
}

namespace {

// Floyd's algorithm: k distinct indices from [0, n), insertion order kept.
std::vector<std::size_t> draw_distinct(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    out.reserve(k);
    std::unordered_set<std::size_t> seen;
    for (std::size_t j = n - k; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, j);
        const std::size_t t = pick(rng);
        const std::size_t v = seen.count(t) ? j : t;
        seen.insert(v);
        out.push_back(v);
    }
    return out;
}

// Weighted draw without replacement via exponential keys.
std::vector<std::size_t> draw_weighted(const std::vector<double>& w, std::size_t k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double u = unit(rng);
        if (w[i] > 0.0) keys.emplace_back(std::log(u) / w[i], i);
    }
    k = std::min(k, keys.size());
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(keys[i].second);
    return out;
}

bool leg_blocked(const Polygon& boundary, const Point2& from, const Point2& to) {
    // Trim the ends so reflectors sitting on a wall do not block themselves.
    const Point2 d = to - from;
    const double len = d.norm();
    if (len < 1e-9) return false;
    const double trim = std::min(1e-6, 0.25 * len);
    const Point2 a = from + d * (trim / len);
    const Point2 b = to - d * (trim / len);
    for (std::size_t i = 0; i < boundary.size(); ++i) {
        if (segments_intersect(a, b, boundary.vertex(i), boundary.vertex(i + 1))) return true;
    }
    return false;
}

}  // namespace

MeasurementSet sample_measurements(const Environment& env, const Point2& user, std::size_t n_r,
                                   const NoiseModel& noise, std::uint64_t epoch, const SamplingOptions& opts) {
    if (!(noise.sigma_theta >= 0.0) || !(noise.sigma_tau >= 0.0)) throw std::invalid_argument("noise sigmas must be >= 0");
    if (!env.rol.contains(user)) throw std::invalid_argument("transmitter position lies outside the rol");
    const std::size_t n_refl = env.reflectors.size();

    std::mt19937_64 rng = make_rng(noise.seed, epoch);
    std::size_t count = n_r;
    if (opts.law == ActivationLaw::poisson) {
        std::poisson_distribution<std::size_t> pd(static_cast<double>(n_r));
        count = n_r == 0 ? 0 : std::min(pd(rng), n_refl);
    } else if (n_r > n_refl) {
        throw std::invalid_argument("n_r exceeds the number of reflectors");
    }

    const std::vector<std::size_t> active =
        opts.reflectivity_weighted ? draw_weighted(env.reflectivity, count, rng) : draw_distinct(n_refl, count, rng);

    std::normal_distribution<double> gauss(0.0, 1.0);
    const MeasurementVariance var = noise.variance();
    MeasurementSet out;
    out.truth.emplace();

    auto emit = [&](double theta, double tau, long truth) {
        // noise draws happen for every candidate path so the stream layout
        // does not depend on which paths survive
        const double dt = noise.sigma_theta * gauss(rng);
        const double dtau = noise.sigma_tau * gauss(rng);
        const double tau_noisy = tau + dtau;
        if (!(tau_noisy > 0.0)) return;
        out.entries.push_back({Measurement(theta + dt, tau_noisy), var});
        out.truth->push_back(truth);
    };

    if (opts.include_los) {
        const double d = distance(user, env.bs);
        if (d > 0.0) emit((user - env.bs).angle(), d / kSpeedOfLight, -1);
    }
    for (std::size_t idx : active) {
        const Point2& s = env.reflectors[idx];
        if (distance(s, env.bs) <= 1e-12) continue;
        if (opts.visibility && (leg_blocked(env.boundary, user, s) || leg_blocked(env.boundary, s, env.bs))) continue;
        const Measurement m = forward_path(user, env.bs, s);
        emit(m.theta(), m.tau(), static_cast<long>(idx));
    }
    out.blind = out.entries.empty();
    return out;
}

std::vector<Point2> boundary_test_points(const Polygon& poly, double spacing, double offset) {
    return polygon_boundary_points(poly, spacing, offset);
}

std::vector<Point2> boundary_test_points(const Environment& env, double spacing, double offset) {
    return polygon_boundary_points(env.rol, spacing, offset);
}

std::vector<Point2> random_boundary_points(const Polygon& poly, std::size_t count, double offset,
                                           std::mt19937_64& rng) {
    const double perim = poly.perimeter();
    const double inward = poly.signed_area() > 0.0 ? 1.0 : -1.0;
    std::uniform_real_distribution<double> unit(0.0, perim);
    std::vector<Point2> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        double s = unit(rng);
        std::size_t e = 0;
        double len = distance(poly.vertex(0), poly.vertex(1));
        while (s > len && e + 1 < poly.size()) {
            s -= len;
            ++e;
            len = distance(poly.vertex(e), poly.vertex(e + 1));
        }
        const Point2 a = poly.vertex(e);
        const Point2 dir = (poly.vertex(e + 1) - a) / len;
        out.push_back(a + dir * std::min(s, len) + Point2{-dir.y * inward, dir.x * inward} * offset);
    }
    return out;
}

Point2 random_point_in(const Polygon& poly, std::mt19937_64& rng) {
    const Box b = poly.bounds();
    std::uniform_real_distribution<double> ux(b.lo.x, b.hi.x);
    std::uniform_real_distribution<double> uy(b.lo.y, b.hi.y);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const Point2 p{ux(rng), uy(rng)};
        if (poly.contains(p)) return p;
    }
    throw Error("random_point_in: polygon has negligible area");
}

OfflineCollection collect_offline(const Environment& env, const std::vector<Point2>& test_points, std::size_t n_r,
                                  const NoiseModel& noise, const SamplingOptions& opts, std::uint64_t epoch_base) {
    OfflineCollection out;
    for (std::size_t k = 0; k < test_points.size(); ++k) {
        const Point2& tx = test_points[k];
        const MeasurementSet ms = sample_measurements(env, tx, n_r, noise, epoch_base + k, opts);
        for (std::size_t p = 0; p < ms.size(); ++p) {
            const auto& obs = ms.entries[p];
            const Inversion inv = try_invert_measurement(obs.m, tx, env.bs);
            const auto cov = try_measurement_covariance(obs.m, obs.var, tx, env.bs);
            if (inv.status != InversionStatus::ok || !cov) {
                ++out.skipped;
                continue;
            }
            out.estimates.push_back(inv.reflector);
            out.covariances.push_back(*cov);
            out.source.push_back(k);
            out.truth.push_back((*ms.truth)[p]);
        }
    }
    return out;
}

}  // namespace refmap
