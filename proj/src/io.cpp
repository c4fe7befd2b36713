#include "refmap/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace refmap::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& tok, const char* what) {
    if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw FormatError(std::string("bad number for ") + what + ": '" + tok + "'");
    }
    return v;
}

long long parse_int(const std::string& tok, const char* what) {
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw FormatError(std::string("bad integer for ") + what + ": '" + tok + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> words(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

std::vector<std::string> next_words(std::istream& is, const char* what) {
    std::string line;
    while (std::getline(is, line)) {
        auto w = words(line);
        if (!w.empty() && w.front()[0] != '#') return w;
    }
    throw FormatError(std::string("unexpected end of file while reading ") + what);
}

std::vector<Point2> read_point_block(std::istream& is, std::size_t n, const char* what) {
    std::vector<Point2> pts;
    pts.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto w = next_words(is, what);
        if (w.size() != 2) throw FormatError(std::string("expected 2 values in ") + what);
        pts.push_back({parse_double(w[0], what), parse_double(w[1], what)});
    }
    return pts;
}

std::size_t section(std::istream& is, const char* name) {
    const auto w = next_words(is, name);
    if (w.size() != 2 || w[0] != name) throw FormatError(std::string("expected section '") + name + "'");
    const long long n = parse_int(w[1], name);
    if (n < 0) throw FormatError(std::string("negative count in ") + name);
    return static_cast<std::size_t>(n);
}

}  // namespace

void write_environment(std::ostream& os, const Environment& env) {
    auto pt = [&](const Point2& p) { os << format_double(p.x) << ' ' << format_double(p.y); };
    os << "refmap-environment 1\n";
    os << "bs ";
    pt(env.bs);
    os << '\n';
    os << "rol " << env.rol.size() << '\n';
    for (const auto& v : env.rol.vertices) { pt(v); os << '\n'; }
    os << "boundary " << env.boundary.size() << '\n';
    for (const auto& v : env.boundary.vertices) { pt(v); os << '\n'; }
    os << "reflectors " << env.reflectors.size() << '\n';
    for (std::size_t k = 0; k < env.reflectors.size(); ++k) {
        pt(env.reflectors[k]);
        os << ' ' << format_double(k < env.reflectivity.size() ? env.reflectivity[k] : 1.0) << '\n';
    }
    os << "disks " << env.disks.size() << '\n';
    for (const auto& d : env.disks) {
        pt(d.center);
        os << ' ' << format_double(d.radius) << '\n';
    }
    os << "end\n";
}

Environment read_environment(std::istream& is) {
    auto head = next_words(is, "header");
    if (head.size() != 2 || head[0] != "refmap-environment") throw FormatError("not an environment file");
    if (head[1] != "1") throw FormatError("unsupported environment version " + head[1]);
    Environment env;
    const auto bs = next_words(is, "bs");
    if (bs.size() != 3 || bs[0] != "bs") throw FormatError("expected 'bs <x> <y>'");
    env.bs = {parse_double(bs[1], "bs"), parse_double(bs[2], "bs")};
    env.rol.vertices = read_point_block(is, section(is, "rol"), "rol");
    env.boundary.vertices = read_point_block(is, section(is, "boundary"), "boundary");
    const std::size_t nr = section(is, "reflectors");
    for (std::size_t k = 0; k < nr; ++k) {
        const auto w = next_words(is, "reflectors");
        if (w.size() != 3) throw FormatError("expected 3 values per reflector");
        env.reflectors.push_back({parse_double(w[0], "reflector"), parse_double(w[1], "reflector")});
        env.reflectivity.push_back(parse_double(w[2], "reflectivity"));
    }
    const std::size_t nd = section(is, "disks");
    for (std::size_t k = 0; k < nd; ++k) {
        const auto w = next_words(is, "disks");
        if (w.size() != 3) throw FormatError("expected 3 values per disk");
        env.disks.push_back({{parse_double(w[0], "disk"), parse_double(w[1], "disk")}, parse_double(w[2], "disk")});
    }
    const auto end = next_words(is, "end");
    if (end.size() != 1 || end[0] != "end") throw FormatError("expected 'end'");
    try {
        env.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    return env;
}

std::ofstream open_output(const std::filesystem::path& p, bool binary) {
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw Error("cannot create directory " + p.parent_path().string() + ": " + ec.message());
    }
    std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
    if (!os) throw Error("cannot open " + p.string() + " for writing");
    return os;
}

std::ifstream open_input(const std::filesystem::path& p, bool binary) {
    std::ifstream is(p, binary ? std::ios::binary : std::ios::in);
    if (!is) throw Error("cannot open " + p.string());
    return is;
}

void save_environment(const std::filesystem::path& p, const Environment& env) {
    auto os = open_output(p);
    write_environment(os, env);
    if (!os) throw Error("write failed: " + p.string());
}

Environment load_environment(const std::filesystem::path& p) {
    auto is = open_input(p);
    return read_environment(is);
}

void write_measurement_header(std::ostream& os) {
    os << "epoch,path_index,theta_rad,tau_s,var_theta,var_tau,truth_index\n";
}

void write_measurements(std::ostream& os, std::uint64_t epoch, const MeasurementSet& ms) {
    for (std::size_t k = 0; k < ms.size(); ++k) {
        const auto& e = ms.entries[k];
        os << epoch << ',' << k << ',' << format_double(e.m.theta()) << ',' << format_double(e.m.tau()) << ','
           << format_double(e.var.var_theta) << ',' << format_double(e.var.var_tau) << ',';
        if (ms.truth) os << (*ms.truth)[k];
        os << '\n';
    }
}

std::map<std::uint64_t, MeasurementSet> read_measurements(std::istream& is) {
    std::map<std::uint64_t, MeasurementSet> out;
    std::string line;
    if (!std::getline(is, line)) throw FormatError("measurement log is empty");
    if (split(line, ',').size() != 7 || line.rfind("epoch,", 0) != 0) throw FormatError("bad measurement header");
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line, ',');
        if (f.size() != 7) throw FormatError("measurement row " + std::to_string(row) + " needs 7 fields");
        const auto epoch = static_cast<std::uint64_t>(parse_int(f[0], "epoch"));
        auto& ms = out[epoch];
        if (!ms.truth) ms.truth.emplace();
        try {
            ms.entries.push_back({Measurement(parse_double(f[2], "theta"), parse_double(f[3], "tau")),
                                  {parse_double(f[4], "var_theta"), parse_double(f[5], "var_tau")}});
        } catch (const std::invalid_argument& e) {
            throw FormatError("measurement row " + std::to_string(row) + ": " + e.what());
        }
        ms.truth->push_back(f[6].empty() ? -2 : parse_int(f[6], "truth_index"));
    }
    return out;
}

void write_points(std::ostream& os, const std::vector<Point2>& pts) {
    os << "epoch,x,y\n";
    for (std::size_t k = 0; k < pts.size(); ++k) {
        os << k << ',' << format_double(pts[k].x) << ',' << format_double(pts[k].y) << '\n';
    }
}

std::vector<Point2> read_points(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("point file is empty");
    std::vector<Point2> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 3) throw FormatError("point rows need 3 fields");
        out.push_back({parse_double(f[1], "x"), parse_double(f[2], "y")});
    }
    return out;
}

namespace {

template <class T>
void put_le(std::ostream& os, T v) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U u;
    std::memcpy(&u, &v, sizeof u);
    char b[sizeof u];
    for (std::size_t i = 0; i < sizeof u; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    os.write(b, sizeof b);
}

template <class T>
T get_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    unsigned char b[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof b)) throw FormatError("truncated grid dump");
    U u = 0;
    for (std::size_t i = 0; i < sizeof u; ++i) u |= static_cast<U>(b[i]) << (8 * i);
    T v;
    std::memcpy(&v, &u, sizeof v);
    return v;
}

constexpr char kGridMagic[8] = {'R', 'M', 'G', 'R', 'I', 'D', '\0', '\0'};

}  // namespace

void write_grid_binary(std::ostream& os, const GridGeometry& g, const std::vector<double>& values, GridKind kind) {
    if (values.size() != g.size()) throw std::invalid_argument("grid values do not match geometry");
    os.write(kGridMagic, sizeof kGridMagic);
    put_le<std::uint32_t>(os, 1);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(kind));
    put_le<double>(os, g.origin.x);
    put_le<double>(os, g.origin.y);
    put_le<double>(os, g.pitch);
    put_le<std::uint64_t>(os, g.nx);
    put_le<std::uint64_t>(os, g.ny);
    for (double v : values) put_le<double>(os, v);
}

void write_grid_binary(std::ostream& os, const GridField& f) { write_grid_binary(os, f.geom, f.values, GridKind::field); }

void write_grid_binary(std::ostream& os, const GridMask& m) {
    std::vector<double> v(m.cells.begin(), m.cells.end());
    write_grid_binary(os, m.geom, v, GridKind::mask);
}

GridDump read_grid_binary(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kGridMagic, sizeof magic) != 0) {
        throw FormatError("not a grid dump");
    }
    const auto version = get_le<std::uint32_t>(is);
    if (version != 1) throw FormatError("unsupported grid dump version " + std::to_string(version));
    const auto kind = get_le<std::uint32_t>(is);
    if (kind > 1) throw FormatError("unknown grid kind");
    GridGeometry g;
    g.origin.x = get_le<double>(is);
    g.origin.y = get_le<double>(is);
    g.pitch = get_le<double>(is);
    g.nx = get_le<std::uint64_t>(is);
    g.ny = get_le<std::uint64_t>(is);
    if (!(g.pitch > 0.0) || g.nx == 0 || g.ny == 0 || g.nx > (1u << 20) || g.ny > (1u << 20)) {
        throw FormatError("implausible grid header");
    }
    GridDump d{static_cast<GridKind>(kind), GridField(g)};
    for (auto& v : d.field.values) v = get_le<double>(is);
    return d;
}

void write_grid_csv(std::ostream& os, const GridField& f) {
    os << "x,y,value\n";
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        const Point2 c = f.geom.center(k);
        os << format_double(c.x) << ',' << format_double(c.y) << ',' << format_double(f.values[k]) << '\n';
    }
}

void write_grid_csv(std::ostream& os, const GridMask& m) {
    os << "x,y,value\n";
    for (std::size_t k = 0; k < m.cells.size(); ++k) {
        const Point2 c = m.geom.center(k);
        os << format_double(c.x) << ',' << format_double(c.y) << ',' << int(m.cells[k]) << '\n';
    }
}

void write_localization_header(std::ostream& os) {
    os << "epoch,x,y,score,region_area,starts,iterations,log_score,region_fallback\n";
}

void write_localization(std::ostream& os, std::uint64_t epoch, const LocalizationResult& r) {
    os << epoch << ',' << format_double(r.p_hat.x) << ',' << format_double(r.p_hat.y) << ',' << format_double(r.score)
       << ',' << format_double(r.region.area()) << ',' << r.starts << ',' << r.iterations << ','
       << format_double(r.log_score) << ',' << (r.region_fallback ? 1 : 0) << '\n';
}

void write_bound_rows(std::ostream& os, const std::vector<BoundRow>& rows) {
    os << "n_r,ratio,vol_sa,bound_m2,bound_radius_m,empirical_area_m2,trials,violations\n";
    for (const auto& r : rows) {
        os << r.n_r << ',' << format_double(r.ratio) << ',' << format_double(r.vol_sa) << ','
           << format_double(r.bound_m2) << ',' << format_double(r.bound_radius_m) << ','
           << format_double(r.empirical_area_m2) << ',' << r.trials << ',' << r.violations << '\n';
    }
}

void write_convergence(std::ostream& os, const std::vector<ConvergencePoint>& pts) {
    os << "lambda1,lambda2,n,magnitude_db\n";
    for (const auto& p : pts) {
        os << format_double(p.lambda1) << ',' << format_double(p.lambda2) << ',' << p.n << ','
           << format_double(p.magnitude_db) << '\n';
    }
}

}  // namespace refmap::io
