#include "refmap/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>

#include "refmap/io.hpp"
#include "refmap/parallel.hpp"
#include "refmap/pipeline.hpp"
#include "refmap/simd.hpp"

namespace refmap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr std::uint64_t kUserStream = 0x5000;
constexpr std::uint64_t kOnlineNoiseStream = 0x5001;
constexpr std::uint64_t kOfflineNoiseStream = 0x5002;
constexpr std::uint64_t kBoundsStream = 0x6000;

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string in;
    std::optional<std::size_t> threads;
    std::vector<std::string> overrides;
};

struct Context {
    ExperimentConfig cfg;
    fs::path out;
    fs::path in;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config", a.config, "JSON experiment config");
    sub->add_option("--seed", a.seed, "Master seed (overrides the config)");
    sub->add_option("--out", a.out, "Output directory");
    sub->add_option("--in", a.in, "Input directory (defaults to the output directory)");
    sub->add_option("--threads", a.threads, "Worker threads, 0 for all cores");
    sub->add_option("--override", a.overrides, "Config override key=value (repeatable)");
}

Context make_context(const CommonArgs& a) {
    std::vector<std::string> overrides = a.overrides;
    if (a.seed) overrides.push_back("seed=" + std::to_string(*a.seed));
    if (a.threads) overrides.push_back("threads=" + std::to_string(*a.threads));
    Context ctx{load_config(a.config, overrides), {}, {}};

    if (!a.out.empty()) {
        ctx.out = a.out;
    } else if (!ctx.cfg.output_dir.empty()) {
        ctx.out = ctx.cfg.output_dir;
    } else if (const char* root = std::getenv(kOutputRootVar); root && *root) {
        ctx.out = root;
    } else {
        ctx.out = "refmap-out";
    }
    ctx.in = a.in.empty() ? ctx.out : fs::path(a.in);
    set_thread_count(ctx.cfg.threads);
    return ctx;
}

void write_manifest(const Context& ctx, const std::string& command, const json& extra = json::object()) {
    json m{{"command", command},
           {"version", kVersion},
           {"config_hash", hex64(config_hash(ctx.cfg))},
           {"seed", ctx.cfg.seed},
           {"kernels", simd::kernels().name},
           {"config", to_json(ctx.cfg)}};
    if (!extra.empty()) m["summary"] = extra;
    auto os = io::open_output(ctx.out / ("manifest_" + command + ".json"));
    os << m.dump(2) << '\n';
}

std::vector<Point2> load_points(const fs::path& p) {
    auto is = io::open_input(p);
    return io::read_points(is);
}

std::map<std::uint64_t, MeasurementSet> load_measurements(const fs::path& p) {
    auto is = io::open_input(p);
    return io::read_measurements(is);
}

int cmd_simulate(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Environment env = generate_environment(cfg.environment, cfg.seed);
    io::save_environment(ctx.out / "environment.txt", env);

    const auto tps = boundary_test_points(env, cfg.offline.spacing, cfg.offline.offset);
    const NoiseModel offline_noise = cfg.noise_model(kOfflineNoiseStream);
    std::size_t offline_paths = 0;
    {
        auto pts = io::open_output(ctx.out / "offline_test_points.csv");
        io::write_points(pts, tps);
        auto log = io::open_output(ctx.out / "offline_measurements.csv");
        io::write_measurement_header(log);
        for (std::size_t k = 0; k < tps.size(); ++k) {
            const MeasurementSet ms = sample_measurements(env, tps[k], cfg.offline.n_r, offline_noise, k, cfg.sampling);
            offline_paths += ms.size();
            io::write_measurements(log, k, ms);
        }
    }

    std::mt19937_64 rng = make_rng(cfg.seed, kUserStream);
    std::vector<Point2> users(cfg.online.users);
    for (auto& u : users) u = random_point_in(env.rol, rng);
    const NoiseModel online_noise = cfg.noise_model(kOnlineNoiseStream);
    std::size_t blind = 0;
    {
        auto pts = io::open_output(ctx.out / "online_users.csv");
        io::write_points(pts, users);
        auto log = io::open_output(ctx.out / "online_measurements.csv");
        io::write_measurement_header(log);
        for (std::size_t k = 0; k < users.size(); ++k) {
            const MeasurementSet ms = sample_measurements(env, users[k], cfg.online.n_r, online_noise, k, cfg.sampling);
            blind += ms.blind ? 1 : 0;
            io::write_measurements(log, k, ms);
        }
    }

    json summary{{"reflectors", env.reflectors.size()},
                 {"rol_area_m2", env.rol.area()},
                 {"test_points", tps.size()},
                 {"offline_paths", offline_paths},
                 {"users", users.size()},
                 {"blind_users", blind}};
    if (!env.disks.empty()) summary["realized_ratio"] = realized_area_ratio(env, cfg.environment.ratio_pitch);
    write_manifest(ctx, "simulate", summary);
    std::cout << "simulate: " << env.reflectors.size() << " reflectors, " << tps.size() << " test points, "
              << offline_paths << " offline paths, " << users.size() << " users -> " << ctx.out.string() << '\n';
    return kExitOk;
}

int cmd_build_map(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Environment env = io::load_environment(ctx.in / "environment.txt");
    const auto tps = load_points(ctx.in / "offline_test_points.csv");
    const auto log = load_measurements(ctx.in / "offline_measurements.csv");
    if (log.empty()) throw Error("offline measurement log is empty");

    std::size_t skipped = 0;
    SampleCloud cloud = cloud_from_log(tps, log, env.bs, skipped);
    const MapProducts map = build_map(std::move(cloud), env.rol, cfg.offline);

    {
        auto os = io::open_output(ctx.out / "map_field.rmgrid", true);
        io::write_grid_binary(os, map.recovery.field);
        auto ms = io::open_output(ctx.out / "sheaf_mask.rmgrid", true);
        io::write_grid_binary(ms, map.sheaf.mask);
        auto rs = io::open_output(ctx.out / "recovery.csv");
        rs << "iteration,step_norm,iterate_norm\n";
        for (std::size_t k = 0; k < map.recovery.step_norms.size(); ++k) {
            rs << k + 1 << ',' << io::format_double(map.recovery.step_norms[k]) << ','
               << io::format_double(map.recovery.iterate_norms[k]) << '\n';
        }
    }

    // Prefixes of a seeded shuffle so the curve does not follow boundary order.
    SampleCloud shuffled = map.cloud;
    std::mt19937_64 rng = make_rng(cfg.seed, kUserStream + 1);
    std::shuffle(shuffled.points.begin(), shuffled.points.end(), rng);
    shuffled.covariances.clear();
    const auto curve = convergence_curve(shuffled, cfg.offline.convergence_lambdas,
                                         geometric_prefixes(shuffled.size(), cfg.offline.convergence_points));
    {
        auto os = io::open_output(ctx.out / "convergence.csv");
        io::write_convergence(os, curve);
    }

    std::size_t covered = 0;
    for (const Point2& r : env.reflectors) covered += map.sheaf.mask.contains(r) ? 1 : 0;
    const json sheaf{{"epsilon", map.sheaf.epsilon},
                     {"threshold", map.sheaf.threshold},
                     {"area_m2", map.sheaf.area},
                     {"cells", map.sheaf.mask.count()},
                     {"samples", map.cloud.size()},
                     {"skipped", skipped},
                     {"covered_reflectors", covered},
                     {"reflectors", env.reflectors.size()}};
    {
        auto os = io::open_output(ctx.out / "sheaf.json");
        os << sheaf.dump(2) << '\n';
    }
    write_manifest(ctx, "build-map", sheaf);
    std::cout << "build-map: " << map.cloud.size() << " samples, sheaf " << map.sheaf.area << " m2, covers " << covered
              << '/' << env.reflectors.size() << " reflectors\n";
    return kExitOk;
}

SheafMask load_sheaf(const fs::path& dir) {
    auto is = io::open_input(dir / "sheaf_mask.rmgrid", true);
    const io::GridDump dump = io::read_grid_binary(is);
    if (dump.kind != io::GridKind::mask) throw io::FormatError("sheaf_mask.rmgrid does not hold a mask");
    GridMask mask(dump.field.geom);
    for (std::size_t k = 0; k < mask.cells.size(); ++k) mask.cells[k] = dump.field.values[k] > 0.5 ? 1 : 0;

    auto js = io::open_input(dir / "sheaf.json");
    const json meta = json::parse(js, nullptr, false);
    if (meta.is_discarded() || !meta.contains("epsilon")) throw io::FormatError("sheaf.json is malformed");
    SheafMask s = sheaf_from_mask(std::move(mask), meta.at("epsilon").get<double>());
    s.threshold = meta.value("threshold", 0.0);
    return s;
}

int cmd_localize(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Environment env = io::load_environment(ctx.in / "environment.txt");
    const SheafMask sheaf = load_sheaf(ctx.in);
    const auto log = load_measurements(ctx.in / "online_measurements.csv");
    std::vector<Point2> users;
    if (fs::exists(ctx.in / "online_users.csv")) users = load_points(ctx.in / "online_users.csv");

    std::vector<std::pair<std::uint64_t, const MeasurementSet*>> work;
    for (const auto& [epoch, ms] : log) {
        if (!ms.empty()) work.emplace_back(epoch, &ms);
    }
    if (work.empty()) throw Error("no online measurements to localize");

    std::vector<LocalizationResult> results(work.size());
    const double rol_area = env.rol.area();
    parallel_for(work.size(), [&](std::size_t i) {
        const ScoreContext sc(*work[i].second, sheaf, env.bs, env.rol, cfg.online.score);
        LocalizeOptions lo = cfg.online.localize;
        lo.seed = derive_seed(cfg.online.localize.seed, work[i].first);
        results[i] = localize(sc, lo);
    });

    auto os = io::open_output(ctx.out / "localization.csv");
    io::write_localization_header(os);
    for (std::size_t i = 0; i < work.size(); ++i) io::write_localization(os, work[i].first, results[i]);

    std::vector<double> errors;
    if (!users.empty()) {
        auto es = io::open_output(ctx.out / "localization_errors.csv");
        es << "epoch,error_m,region_fraction\n";
        for (std::size_t i = 0; i < work.size(); ++i) {
            const auto epoch = work[i].first;
            if (epoch >= users.size()) continue;
            const double e = distance(results[i].p_hat, users[epoch]);
            errors.push_back(e);
            es << epoch << ',' << io::format_double(e) << ','
               << io::format_double(results[i].region.area() / rol_area) << '\n';
        }
    }

    if (cfg.online.surface) {
        const ScoreContext sc(*work.front().second, sheaf, env.bs, env.rol, cfg.online.score);
        auto ss = io::open_output(ctx.out / "surface.rmgrid", true);
        io::write_grid_binary(ss, score_surface(sc));
    }

    json summary{{"localized", work.size()}, {"skipped_epochs", log.size() - work.size()}};
    if (!errors.empty()) {
        const CdfTable t(errors);
        summary["median_error_m"] = t.median();
        summary["q75_error_m"] = t.quantile(0.75);
    }
    write_manifest(ctx, "localize", summary);
    std::cout << "localize: " << work.size() << " epochs";
    if (!errors.empty()) std::cout << ", median error " << CdfTable(errors).median() << " m";
    std::cout << '\n';
    return kExitOk;
}

int cmd_experiment_cdf(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Environment env = generate_environment(cfg.environment, cfg.seed);
    const auto cells = run_cdf_experiment(cfg, env);

    auto summary = io::open_output(ctx.out / "cdf_summary.csv");
    summary << "cell,sigma_theta_deg,sigma_tau_ns,n_r,restricted_rol,trials,blind,all_blind,q25_m,median_m,q75_m,file\n";
    json flagged = json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const std::string file = "cdf_" + std::to_string(i) + ".csv";
        {
            auto os = io::open_output(ctx.out / file);
            c.table.write(os);
        }
        const bool all_blind = c.table.empty();
        if (all_blind) flagged.push_back(i);
        auto q = [&](double p) { return all_blind ? std::string("nan") : io::format_double(c.table.quantile(p)); };
        summary << i << ',' << io::format_double(c.noise.sigma_theta_deg) << ',' << io::format_double(c.noise.sigma_tau_ns)
                << ',' << c.n_r << ',' << (c.restricted ? 1 : 0) << ',' << c.trials << ',' << c.blind << ','
                << (all_blind ? 1 : 0) << ',' << q(0.25) << ',' << q(0.5) << ',' << q(0.75) << ',' << file << '\n';
        std::cout << "cell " << i << ": sigma " << c.noise.sigma_theta_deg << " deg / " << c.noise.sigma_tau_ns
                  << " ns, n_r " << c.n_r << ", " << c.trials << " trials";
        if (!all_blind) std::cout << ", median " << c.table.median() << " m";
        std::cout << '\n';
    }
    write_manifest(ctx, "experiment-cdf", json{{"cells", cells.size()}, {"all_blind_cells", flagged}});
    return kExitOk;
}

int cmd_bounds(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& b = cfg.bounds;

    std::vector<io::BoundRow> sweep;
    for (std::size_t n_r : b.sweep_n_r) {
        for (std::size_t k = 0; k < b.sweep_ratio_count; ++k) {
            const double t = b.sweep_ratio_count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(b.sweep_ratio_count - 1);
            const double ratio = b.sweep_ratio_min * std::pow(b.sweep_ratio_max / b.sweep_ratio_min, t);
            const BoundInputs in{b.vol_sa, b.vol_sa / ratio, n_r, cfg.offline.epsilon};
            const double bound = ambiguity_lower_bound(in);
            sweep.push_back({n_r, ratio, b.vol_sa, bound, equivalent_radius(bound), std::nan(""), 0, 0});
        }
    }
    {
        auto os = io::open_output(ctx.out / "bound_sweep.csv");
        io::write_bound_rows(os, sweep);
    }

    std::vector<io::BoundRow> ensembles;
    std::size_t total_violations = 0;
    for (std::size_t i = 0; i < b.ensemble_ratios.size(); ++i) {
        const double target = b.ensemble_ratios[i];
        // Analytic row at the configured vol_sa.
        const BoundInputs paper{b.vol_sa, b.vol_sa / target, b.mc_n_r, cfg.offline.epsilon};
        const double paper_bound = ambiguity_lower_bound(paper);
        io::BoundRow row{b.mc_n_r, target, b.vol_sa, paper_bound, equivalent_radius(paper_bound), std::nan(""), 0, 0};

        if (b.monte_carlo) {
            AmbiguityConfig ac;
            ac.spec = cfg.environment;
            ac.spec.family = EnvironmentFamily::random_scatter;
            ac.spec.target_ratio = target;
            ac.n_r = b.mc_n_r;
            ac.structures = b.structures;
            ac.users_per_structure = b.users_per_structure;
            ac.epsilon = cfg.offline.epsilon;
            ac.pitch = b.pitch;
            ac.refine_pitch = b.refine_pitch;
            ac.kde = b.kde;
            ac.score = cfg.online.score;
            const AmbiguityEstimate est = monte_carlo_ambiguity(ac, derive_seed(cfg.seed, kBoundsStream + i));

            const Environment probe = generate_environment(ac.spec, derive_seed(derive_seed(cfg.seed, kBoundsStream + i), 0));
            const double vol_sa = probe.rol.area();
            const BoundInputs in{vol_sa, vol_sa / est.mean_ratio, b.mc_n_r, cfg.offline.epsilon};
            const double bound = ambiguity_lower_bound(in);
            row = {b.mc_n_r, est.mean_ratio, vol_sa, bound, equivalent_radius(bound), est.area, est.trials,
                   est.area < bound ? std::size_t{1} : std::size_t{0}};
            total_violations += row.violations;

            auto os = io::open_output(ctx.out / ("offsets_" + std::to_string(i) + ".csv"));
            os << "dx,dy\n";
            for (const Point2& o : est.offsets) os << io::format_double(o.x) << ',' << io::format_double(o.y) << '\n';
            std::cout << "ratio " << target << ": empirical " << est.area << " m2 vs bound " << bound << " m2 ("
                      << est.trials << " trials, " << est.skipped << " skipped)\n";
        }
        ensembles.push_back(row);
    }
    {
        auto os = io::open_output(ctx.out / "bound_ensembles.csv");
        io::write_bound_rows(os, ensembles);
    }
    write_manifest(ctx, "bounds", json{{"sweep_rows", sweep.size()}, {"violations", total_violations}});
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Reflection-map localization experiments", "refmap"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonArgs common;
    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const Context&);
    };
    const Sub subs[] = {
        {"simulate", "Generate an environment and offline/online measurement logs", cmd_simulate},
        {"build-map", "Recover the reflection map and covering sheaf from the offline log", cmd_build_map},
        {"localize", "Localize every online epoch against the stored sheaf", cmd_localize},
        {"experiment-cdf", "Localization error CDFs over a noise and n_r grid", cmd_experiment_cdf},
        {"bounds", "Ambiguity bound sweep and Monte Carlo dominance check", cmd_bounds},
    };
    std::vector<std::pair<CLI::App*, int (*)(const Context&)>> handlers;
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        add_common(sub, common);
        handlers.emplace_back(sub, s.fn);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        for (const auto& [sub, fn] : handlers) {
            if (sub->parsed()) return fn(make_context(common));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace refmap::cli
