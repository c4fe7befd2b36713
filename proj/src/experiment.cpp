#include "refmap/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "refmap/io.hpp"

namespace refmap {

using nlohmann::json;

namespace {

template <class E>
struct EnumName {
    E value;
    const char* name;
};

constexpr EnumName<EnvironmentFamily> kFamilies[] = {
    {EnvironmentFamily::rectangle, "rectangle"},
    {EnvironmentFamily::random_scatter, "random_scatter"},
    {EnvironmentFamily::point_list, "point_list"},
};
constexpr EnumName<ActivationLaw> kLaws[] = {{ActivationLaw::exact, "exact"}, {ActivationLaw::poisson, "poisson"}};
constexpr EnumName<ProjectionMethod> kProjections[] = {{ProjectionMethod::fft, "fft"},
                                                       {ProjectionMethod::direct, "direct"}};
constexpr EnumName<ScoreMode> kModes[] = {{ScoreMode::per_path, "per_path"},
                                          {ScoreMode::shared_reflector, "shared_reflector"}};
constexpr EnumName<StartMode> kStarts[] = {{StartMode::random, "random"},
                                           {StartMode::best_in_stratum, "best_in_stratum"}};

template <class E, std::size_t N>
const char* name_of(const EnumName<E> (&table)[N], E v) {
    for (const auto& e : table) {
        if (e.value == v) return e.name;
    }
    return "?";
}

json point_json(const Point2& p) { return json::array({p.x, p.y}); }

json polygon_json(const Polygon& poly) {
    json a = json::array();
    for (const Point2& v : poly.vertices) a.push_back(point_json(v));
    return a;
}

// Reads one JSON object, remembering which keys were used so leftovers can
// be reported.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where("") + "must be an object");
    }

    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError("unknown config key '" + where(k) + "'");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    Reader sub(const std::string& key) {
        seen_.insert(key);
        static const json empty = json::object();
        return Reader(j_.contains(key) ? j_.at(key) : empty, where(key));
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        out = convert<T>(j_.at(key), where(key));
    }

    template <class E, std::size_t N>
    void get_enum(const std::string& key, E& out, const EnumName<E> (&table)[N]) {
        if (!has(key)) return;
        const std::string s = convert<std::string>(j_.at(key), where(key));
        for (const auto& e : table) {
            if (s == e.name) {
                out = e.value;
                return;
            }
        }
        throw ConfigError("bad value '" + s + "' for " + where(key));
    }

    void get_point(const std::string& key, Point2& out) {
        if (!has(key)) return;
        out = to_point(j_.at(key), where(key));
    }

    void get_points(const std::string& key, std::vector<Point2>& out) {
        if (!has(key)) return;
        const json& a = j_.at(key);
        if (!a.is_array()) throw ConfigError(where(key) + " must be an array of [x, y]");
        out.clear();
        for (const json& p : a) out.push_back(to_point(p, where(key)));
    }

    std::string where(const std::string& key) const {
        if (path_.empty()) return key;
        return key.empty() ? path_ : path_ + "." + key;
    }

    template <class T>
    static T convert(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where + " must be a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where + " must be a string");
            return v.get<std::string>();
        } else if constexpr (std::is_integral_v<T>) {
            if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
            if (v.is_number_integer()) {
                const auto i = v.get<std::int64_t>();
                if (std::is_unsigned_v<T> && i < 0) throw ConfigError(where + " must be non-negative");
                return static_cast<T>(i);
            }
            throw ConfigError(where + " must be an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(where + " must be a number");
            return v.get<T>();
        } else {
            if (!v.is_array()) throw ConfigError(where + " must be an array");
            T out;
            for (const json& e : v) out.push_back(convert<typename T::value_type>(e, where));
            return out;
        }
    }

private:
    static Point2 to_point(const json& p, const std::string& where) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw ConfigError(where + " expects [x, y]");
        }
        return {p[0].get<double>(), p[1].get<double>()};
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace

NoiseModel ExperimentConfig::noise_model(std::uint64_t stream) const {
    return {deg_to_rad(noise.sigma_theta_deg), noise.sigma_tau_ns * 1e-9, derive_seed(seed, stream)};
}

RecoveryOptions ExperimentConfig::recovery() const {
    RecoveryOptions r;
    r.alpha = offline.alpha;
    r.iterations = offline.iterations;
    r.lambda_m = offline.lambda_m;
    r.method = offline.projection;
    r.equalize_density = offline.equalize_density;
    return r;
}

void ExperimentConfig::validate() const {
    require(schema_version == kSchemaVersion, "schema_version must be " + std::to_string(kSchemaVersion));
    const auto& e = environment;
    require(e.width > 0.0 && e.height > 0.0, "environment.width and height must be positive");
    require(e.rol_inset >= 0.0 && 2.0 * e.rol_inset < std::min(e.width, e.height),
            "environment.rol_inset leaves no rol");
    require(e.target_ratio > 1.0, "environment.target_ratio must exceed 1");
    require(e.disk_radius > 0.0 && e.ratio_pitch > 0.0, "environment disk_radius and ratio_pitch must be positive");
    require(e.family != EnvironmentFamily::point_list || !e.points.empty(),
            "environment.points is required for the point_list family");
    require(noise.sigma_theta_deg >= 0.0 && noise.sigma_tau_ns >= 0.0, "noise sigmas must be non-negative");

    const auto& o = offline;
    require(o.spacing > 0.0, "offline.spacing must be positive");
    require(o.n_r >= 1, "offline.n_r must be at least 1");
    require(o.alpha > 0.0 && o.alpha < 2.0, "offline.alpha must lie in (0, 2)");
    require(o.iterations >= 1, "offline.iterations must be at least 1");
    require(o.pitch > 0.0 && o.padding >= 0.0, "offline.pitch must be positive");
    require(o.lambda_m > 0.0 && o.lambda_m <= 0.5 / o.pitch + 1e-12,
            "offline.lambda_m must lie in (0, 1/(2*pitch)]");
    require(o.epsilon > 0.0 && o.epsilon < 1.0, "offline.epsilon must lie in (0, 1)");
    require(o.convergence_points >= 1, "offline.convergence_points must be at least 1");

    const auto& n = online;
    require(n.n_r >= 1, "online.n_r must be at least 1");
    require(n.score.k_sigma > 0.0 && n.score.tau_sigmas > 0.0, "online.k_sigma and tau_sigmas must be positive");
    require(n.localize.n_starts >= 1, "online.starts must be at least 1");
    require(n.localize.ascent.dx > 0.0 && n.localize.ascent.tol > 0.0, "online.dx and tol must be positive");
    require(n.localize.ascent.max_iter >= 1, "online.max_iter must be at least 1");

    require(cdf.trials >= 1, "cdf.trials must be at least 1");
    require(!cdf.noise_levels.empty() && !cdf.n_r_values.empty(), "cdf needs noise levels and n_r values");
    for (const auto& l : cdf.noise_levels) {
        require(l.sigma_theta_deg >= 0.0 && l.sigma_tau_ns >= 0.0, "cdf noise levels must be non-negative");
    }
    for (auto v : cdf.n_r_values) require(v >= 1, "cdf.n_r_values must be at least 1");

    const auto& b = bounds;
    require(b.vol_sa > 0.0, "bounds.vol_sa must be positive");
    require(b.sweep_ratio_min > 0.0 && b.sweep_ratio_max >= b.sweep_ratio_min && b.sweep_ratio_count >= 1,
            "bounds sweep range is invalid");
    for (double r : b.ensemble_ratios) require(r > 1.0, "bounds.ensemble_ratios must exceed 1");
    require(b.mc_n_r >= 1 && b.structures >= 1 && b.users_per_structure >= 1, "bounds trial counts must be positive");
    require(b.pitch > 0.0 && b.refine_pitch > 0.0 && b.kde.pitch > 0.0 && b.kde.bandwidth > 0.0,
            "bounds pitches and kde settings must be positive");
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir;

    const auto& e = c.environment;
    json env{{"family", name_of(kFamilies, e.family)},
             {"width", e.width},
             {"height", e.height},
             {"per_wall", e.per_wall},
             {"rol_inset", e.rol_inset},
             {"target_ratio", e.target_ratio},
             {"disk_radius", e.disk_radius},
             {"points_per_disk", e.points_per_disk},
             {"ratio_pitch", e.ratio_pitch},
             {"bs_clearance", e.bs_clearance}};
    if (e.bs) env["bs"] = point_json(*e.bs);
    if (!e.points.empty()) {
        env["points"] = json::array();
        for (const Point2& p : e.points) env["points"].push_back(point_json(p));
    }
    if (e.boundary) env["boundary"] = polygon_json(*e.boundary);
    if (e.rol) env["rol"] = polygon_json(*e.rol);
    j["environment"] = env;

    j["noise"] = {{"sigma_theta_deg", c.noise.sigma_theta_deg}, {"sigma_tau_ns", c.noise.sigma_tau_ns}};
    j["sampling"] = {{"law", name_of(kLaws, c.sampling.law)},
                     {"visibility", c.sampling.visibility},
                     {"include_los", c.sampling.include_los},
                     {"reflectivity_weighted", c.sampling.reflectivity_weighted}};

    const auto& o = c.offline;
    json lambdas = json::array();
    for (const auto& [a, b] : o.convergence_lambdas) lambdas.push_back({a, b});
    j["offline"] = {{"spacing", o.spacing},
                    {"offset", o.offset},
                    {"n_r", o.n_r},
                    {"alpha", o.alpha},
                    {"iterations", o.iterations},
                    {"lambda_m", o.lambda_m},
                    {"epsilon", o.epsilon},
                    {"pitch", o.pitch},
                    {"padding", o.padding},
                    {"projection", name_of(kProjections, o.projection)},
                    {"equalize_density", o.equalize_density},
                    {"convergence_lambdas", lambdas},
                    {"convergence_points", o.convergence_points}};

    const auto& n = c.online;
    j["online"] = {{"n_r", n.n_r},
                   {"users", n.users},
                   {"mode", name_of(kModes, n.score.mode)},
                   {"k_sigma", n.score.k_sigma},
                   {"tau_sigmas", n.score.tau_sigmas},
                   {"tau_floor_ns", n.score.tau_floor * 1e9},
                   {"floor_sigma", n.score.floor_sigma},
                   {"starts", n.localize.n_starts},
                   {"start_mode", name_of(kStarts, n.localize.start_mode)},
                   {"gamma", n.localize.ascent.gamma},
                   {"dx", n.localize.ascent.dx},
                   {"tol", n.localize.ascent.tol},
                   {"max_iter", n.localize.ascent.max_iter},
                   {"backtracking", n.localize.ascent.backtracking},
                   {"surface", n.surface}};

    json levels = json::array();
    for (const auto& l : c.cdf.noise_levels) levels.push_back({l.sigma_theta_deg, l.sigma_tau_ns});
    j["cdf"] = {{"trials", c.cdf.trials},
                {"noise_levels", levels},
                {"n_r_values", c.cdf.n_r_values},
                {"restricted_rol_side", c.cdf.restricted_rol_side}};

    const auto& b = c.bounds;
    j["bounds"] = {{"vol_sa", b.vol_sa},
                   {"sweep_n_r", b.sweep_n_r},
                   {"sweep_ratio_min", b.sweep_ratio_min},
                   {"sweep_ratio_max", b.sweep_ratio_max},
                   {"sweep_ratio_count", b.sweep_ratio_count},
                   {"ensemble_ratios", b.ensemble_ratios},
                   {"monte_carlo", b.monte_carlo},
                   {"mc_n_r", b.mc_n_r},
                   {"structures", b.structures},
                   {"users_per_structure", b.users_per_structure},
                   {"pitch", b.pitch},
                   {"refine_pitch", b.refine_pitch},
                   {"kde_pitch", b.kde.pitch},
                   {"kde_bandwidth", b.kde.bandwidth}};
    return j;
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    Reader r(j, "");
    r.get("schema_version", c.schema_version);
    if (c.schema_version != kSchemaVersion) {
        throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
    }
    r.get("seed", c.seed);
    r.get("threads", c.threads);
    r.get("output_dir", c.output_dir);
    {
        Reader e = r.sub("environment");
        auto& s = c.environment;
        e.get_enum("family", s.family, kFamilies);
        e.get("width", s.width);
        e.get("height", s.height);
        e.get("per_wall", s.per_wall);
        e.get("rol_inset", s.rol_inset);
        e.get("target_ratio", s.target_ratio);
        e.get("disk_radius", s.disk_radius);
        e.get("points_per_disk", s.points_per_disk);
        e.get("ratio_pitch", s.ratio_pitch);
        e.get("bs_clearance", s.bs_clearance);
        if (e.has("bs")) {
            Point2 p;
            e.get_point("bs", p);
            s.bs = p;
        }
        e.get_points("points", s.points);
        if (e.has("boundary")) {
            Polygon poly;
            e.get_points("boundary", poly.vertices);
            s.boundary = poly;
        }
        if (e.has("rol")) {
            Polygon poly;
            e.get_points("rol", poly.vertices);
            s.rol = poly;
        }
    }
    {
        Reader n = r.sub("noise");
        n.get("sigma_theta_deg", c.noise.sigma_theta_deg);
        n.get("sigma_tau_ns", c.noise.sigma_tau_ns);
    }
    {
        Reader s = r.sub("sampling");
        s.get_enum("law", c.sampling.law, kLaws);
        s.get("visibility", c.sampling.visibility);
        s.get("include_los", c.sampling.include_los);
        s.get("reflectivity_weighted", c.sampling.reflectivity_weighted);
    }
    {
        Reader o = r.sub("offline");
        auto& f = c.offline;
        o.get("spacing", f.spacing);
        o.get("offset", f.offset);
        o.get("n_r", f.n_r);
        o.get("alpha", f.alpha);
        o.get("iterations", f.iterations);
        o.get("lambda_m", f.lambda_m);
        o.get("epsilon", f.epsilon);
        o.get("pitch", f.pitch);
        o.get("padding", f.padding);
        o.get_enum("projection", f.projection, kProjections);
        o.get("equalize_density", f.equalize_density);
        if (o.has("convergence_lambdas")) {
            std::vector<Point2> pts;
            o.get_points("convergence_lambdas", pts);
            f.convergence_lambdas.clear();
            for (const Point2& p : pts) f.convergence_lambdas.emplace_back(p.x, p.y);
        }
        o.get("convergence_points", f.convergence_points);
    }
    {
        Reader o = r.sub("online");
        auto& n = c.online;
        o.get("n_r", n.n_r);
        o.get("users", n.users);
        o.get_enum("mode", n.score.mode, kModes);
        o.get("k_sigma", n.score.k_sigma);
        o.get("tau_sigmas", n.score.tau_sigmas);
        double tau_floor_ns = n.score.tau_floor * 1e9;
        o.get("tau_floor_ns", tau_floor_ns);
        n.score.tau_floor = tau_floor_ns * 1e-9;
        o.get("floor_sigma", n.score.floor_sigma);
        o.get("starts", n.localize.n_starts);
        o.get_enum("start_mode", n.localize.start_mode, kStarts);
        o.get("gamma", n.localize.ascent.gamma);
        o.get("dx", n.localize.ascent.dx);
        o.get("tol", n.localize.ascent.tol);
        o.get("max_iter", n.localize.ascent.max_iter);
        o.get("backtracking", n.localize.ascent.backtracking);
        o.get("surface", n.surface);
    }
    {
        Reader d = r.sub("cdf");
        d.get("trials", c.cdf.trials);
        if (d.has("noise_levels")) {
            std::vector<Point2> pts;
            d.get_points("noise_levels", pts);
            c.cdf.noise_levels.clear();
            for (const Point2& p : pts) c.cdf.noise_levels.push_back({p.x, p.y});
        }
        d.get("n_r_values", c.cdf.n_r_values);
        d.get("restricted_rol_side", c.cdf.restricted_rol_side);
    }
    {
        Reader b = r.sub("bounds");
        auto& s = c.bounds;
        b.get("vol_sa", s.vol_sa);
        b.get("sweep_n_r", s.sweep_n_r);
        b.get("sweep_ratio_min", s.sweep_ratio_min);
        b.get("sweep_ratio_max", s.sweep_ratio_max);
        b.get("sweep_ratio_count", s.sweep_ratio_count);
        b.get("ensemble_ratios", s.ensemble_ratios);
        b.get("monte_carlo", s.monte_carlo);
        b.get("mc_n_r", s.mc_n_r);
        b.get("structures", s.structures);
        b.get("users_per_structure", s.users_per_structure);
        b.get("pitch", s.pitch);
        b.get("refine_pitch", s.refine_pitch);
        b.get("kde_pitch", s.kde.pitch);
        b.get("kde_bandwidth", s.kde.bandwidth);
    }
    return c;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    json j = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path.string());
        j = json::parse(in, nullptr, false, true);
        if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
    }
    for (const auto& o : overrides) apply_override(j, o);
    ExperimentConfig c = from_json(j);
    c.validate();
    return c;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    const std::string s = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

CdfTable::CdfTable(std::vector<double> errors) : errors_(std::move(errors)) {
    for (double e : errors_) {
        if (!std::isfinite(e) || e < 0.0) throw std::invalid_argument("CDF errors must be finite and non-negative");
    }
    std::sort(errors_.begin(), errors_.end());
    const double n = static_cast<double>(errors_.size());
    probs_.resize(errors_.size());
    for (std::size_t i = 0; i < errors_.size(); ++i) probs_[i] = static_cast<double>(i + 1) / n;
}

double CdfTable::at(double x) const {
    if (errors_.empty()) return 0.0;
    const auto it = std::upper_bound(errors_.begin(), errors_.end(), x);
    return static_cast<double>(it - errors_.begin()) / static_cast<double>(errors_.size());
}

double CdfTable::quantile(double p) const {
    if (errors_.empty()) throw std::logic_error("quantile of an empty CDF");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1]");
    const auto n = static_cast<double>(errors_.size());
    auto k = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    k = std::clamp<std::size_t>(k, 1, errors_.size());
    return errors_[k - 1];
}

void CdfTable::write(std::ostream& os) const {
    os << "error_m,cdf\n";
    for (std::size_t i = 0; i < errors_.size(); ++i) {
        os << io::format_double(errors_[i]) << ',' << io::format_double(probs_[i]) << '\n';
    }
}

}  // namespace refmap
