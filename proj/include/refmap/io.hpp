#pragma once
// File formats.
//
// Environment (text, line oriented, doubles in shortest round-trip form):
//   refmap-environment 1
//   bs <x> <y>
//   rol <n>          followed by n lines "<x> <y>"
//   boundary <n>     followed by n lines "<x> <y>"
//   reflectors <n>   followed by n lines "<x> <y> <reflectivity>"
//   disks <n>        followed by n lines "<cx> <cy> <radius>"
//   end
//
// Grid dump (binary, little-endian):
//   char[8] "RMGRID\0\0", u32 version (1), u32 kind (0 field, 1 mask),
//   f64 origin_x, f64 origin_y, f64 pitch, u64 nx, u64 ny,
//   nx*ny f64 values, row-major with x fastest.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "refmap/bounds.hpp"
#include "refmap/envsim.hpp"
#include "refmap/grid.hpp"
#include "refmap/localizer.hpp"
#include "refmap/mapbuilder.hpp"

namespace refmap::io {

/// Malformed input file.
class FormatError : public Error {
public:
    using Error::Error;
};

std::string format_double(double v);

void write_environment(std::ostream& os, const Environment& env);
Environment read_environment(std::istream& is);
void save_environment(const std::filesystem::path& p, const Environment& env);
Environment load_environment(const std::filesystem::path& p);

/// epoch,path_index,theta_rad,tau_s,var_theta,var_tau,truth_index
void write_measurement_header(std::ostream& os);
void write_measurements(std::ostream& os, std::uint64_t epoch, const MeasurementSet& ms);
/// Measurement sets keyed by epoch; truth_index -2 (or empty) means unknown.
std::map<std::uint64_t, MeasurementSet> read_measurements(std::istream& is);

/// epoch,x,y
void write_points(std::ostream& os, const std::vector<Point2>& pts);
std::vector<Point2> read_points(std::istream& is);

enum class GridKind : std::uint32_t { field = 0, mask = 1 };

void write_grid_binary(std::ostream& os, const GridGeometry& g, const std::vector<double>& values, GridKind kind);
void write_grid_binary(std::ostream& os, const GridField& f);
void write_grid_binary(std::ostream& os, const GridMask& m);
struct GridDump {
    GridKind kind;
    GridField field;
};
GridDump read_grid_binary(std::istream& is);

/// x,y,value (one row per node)
void write_grid_csv(std::ostream& os, const GridField& f);
void write_grid_csv(std::ostream& os, const GridMask& m);

/// epoch,x,y,score,region_area,starts,iterations,log_score,region_fallback
void write_localization_header(std::ostream& os);
void write_localization(std::ostream& os, std::uint64_t epoch, const LocalizationResult& r);

struct BoundRow {
    std::size_t n_r;
    double ratio;
    double vol_sa;
    double bound_m2;
    double bound_radius_m;
    double empirical_area_m2;  // NaN when no Monte Carlo run
    std::size_t trials;
    std::size_t violations;
};
/// n_r,ratio,vol_sa,bound_m2,bound_radius_m,empirical_area_m2,trials,violations
void write_bound_rows(std::ostream& os, const std::vector<BoundRow>& rows);

/// lambda1,lambda2,n,magnitude_db
void write_convergence(std::ostream& os, const std::vector<ConvergencePoint>& pts);

/// Open for writing, creating parent directories; throws refmap::Error.
std::ofstream open_output(const std::filesystem::path& p, bool binary = false);
std::ifstream open_input(const std::filesystem::path& p, bool binary = false);

}  // namespace refmap::io
