#pragma once
// Experiment configuration (JSON, schema-versioned) and CDF tables.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "refmap/bounds.hpp"
#include "refmap/envsim.hpp"
#include "refmap/localizer.hpp"
#include "refmap/mapbuilder.hpp"

namespace refmap {

/// Bad or unknown configuration key, bad value, unreadable config file.
class ConfigError : public Error {
public:
    using Error::Error;
};

inline constexpr int kSchemaVersion = 1;

struct NoiseLevel {
    double sigma_theta_deg{0.0};
    double sigma_tau_ns{0.0};
    bool operator==(const NoiseLevel&) const = default;
};

struct OfflineConfig {
    double spacing{0.5};
    double offset{0.0};
    std::size_t n_r{5};
    double alpha{0.2};
    std::size_t iterations{10};
    double lambda_m{1.0};
    double epsilon{0.05};
    double pitch{0.25};
    double padding{5.0};
    ProjectionMethod projection{ProjectionMethod::fft};
    bool equalize_density{true};
    std::vector<std::pair<double, double>> convergence_lambdas{{0.0, 0.0}, {0.05, 0.0}, {0.0, 0.1}, {0.1, 0.1}, {0.2, 0.05}};
    std::size_t convergence_points{24};
};

struct OnlineConfig {
    std::size_t n_r{3};
    std::size_t users{100};
    ScoreOptions score;
    LocalizeOptions localize;
    /// Dump the score surface of the first epoch.
    bool surface{false};
};

struct CdfConfig {
    std::size_t trials{1000};
    std::vector<NoiseLevel> noise_levels{{0.345, 3.0}, {0.1725, 1.5}, {0.08625, 0.75}};
    std::vector<std::size_t> n_r_values{2, 4, 8};
    /// Side of the square rol used for cells with n_r <= 2; <= 0 disables.
    double restricted_rol_side{12.0};
};

struct BoundsConfig {
    double vol_sa{40000.0};
    std::vector<std::size_t> sweep_n_r{1, 2, 3, 4};
    double sweep_ratio_min{1.0};
    double sweep_ratio_max{64.0};
    std::size_t sweep_ratio_count{64};
    std::vector<double> ensemble_ratios{15.9, 31.8};
    bool monte_carlo{true};
    std::size_t mc_n_r{3};
    std::size_t structures{100};
    std::size_t users_per_structure{1};
    double pitch{0.25};
    double refine_pitch{0.1};
    KdeOptions kde;
};

struct ExperimentConfig {
    int schema_version{kSchemaVersion};
    std::uint64_t seed{1};
    std::size_t threads{0};
    std::string output_dir;
    EnvironmentSpec environment;
    NoiseLevel noise{0.345, 3.0};
    SamplingOptions sampling;
    OfflineConfig offline;
    OnlineConfig online;
    CdfConfig cdf;
    BoundsConfig bounds;

    NoiseModel noise_model(std::uint64_t stream) const;
    RecoveryOptions recovery() const;
    /// Throws ConfigError when a module precondition cannot hold.
    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Strict: unknown keys and type mismatches raise ConfigError.
ExperimentConfig from_json(const nlohmann::json& j);

/// Applies `a.b.c=value`; value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Loads the file (or defaults when path is empty), applies overrides, validates.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// FNV-1a 64 over the canonical JSON dump.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string hex64(std::uint64_t v);

class CdfTable {
public:
    CdfTable() = default;
    /// Throws std::invalid_argument on negative or non-finite errors.
    explicit CdfTable(std::vector<double> errors);

    const std::vector<double>& errors() const { return errors_; }
    const std::vector<double>& probabilities() const { return probs_; }
    std::size_t size() const { return errors_.size(); }
    bool empty() const { return errors_.empty(); }

    /// Fraction of errors <= x.
    double at(double x) const;
    /// Smallest error e with at(e) >= p, p in (0, 1].
    double quantile(double p) const;
    double median() const { return quantile(0.5); }

    /// error_m,cdf
    void write(std::ostream& os) const;

private:
    std::vector<double> errors_;
    std::vector<double> probs_;
};

}  // namespace refmap
