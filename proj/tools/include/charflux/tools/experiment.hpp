#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "charflux/charflux.hpp"

namespace charflux::tools {

enum class ExperimentKind {
    rw_covariance,
    rw_scaling,
    rw_independence,
    rw_hydro,
    brownian_current,
    fbm_sample,
    hammersley_tightness,
    hopf_lax_map,
};

ExperimentKind parse_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

/// Invalid configuration; `field` names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message);
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::rw_covariance;
    JumpKernel kernel = JumpKernel::nearest_neighbour(0.7);
    Profile profile = Profile::linear(1.0);
    IcKind ic = IcKind::random;
    OccupationLaw law = OccupationLaw::poisson;
    std::vector<std::int64_t> ns{1600};
    std::int64_t replicates = 1000;
    std::vector<double> times{1.0};
    std::vector<double> base_points{0.0};
    std::vector<double> height_points;
    std::optional<std::int64_t> window_radius;
    double lambda = 100.0;          // brownian-current
    std::string cov_variant = "general";  // fbm-sample
    double x = 1.0;                 // hammersley-tightness / hopf-lax-map
    double t = 1.0;
    std::vector<double> xs;         // hopf-lax-map evaluation points
    double delta = 0.25;            // quadratic-growth neighbourhood
    std::int64_t bootstrap = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::filesystem::path out = "charflux_out";
    bool raw = false;
    std::int64_t checkpoint_every = 1000;

    /// The fields that determine results (no worker count, output path or checkpoint cadence).
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Parses a JSON document into a config; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
/// Reads `.toml` or `.json` by extension.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Converts a TOML document to the equivalent JSON value.
nlohmann::json toml_to_json(const std::string& text);
/// Checks every module precondition the run will hit; throws ConfigError.
void validate(const ExperimentConfig& config);

struct RunOptions {
    bool resume = false;
    std::optional<std::int64_t> stop_after;  // stop once this many replicates of an ensemble are done (interruption drill)
};

struct RunResult {
    nlohmann::json summary;
    bool all_pass = true;
    bool interrupted = false;
};

/// Runs the experiment and writes summary.json, verdict.txt and data files under config.out.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

/// Column documentation for the emitted CSV files.
std::string csv_columns_help();

}  // namespace charflux::tools
