#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fbsde/model.hpp"

namespace fbsde {

/**
 * Flat JSON experiment description. Every key is validated before any
 * computation starts and unknown keys are rejected.
 */
struct ExperimentConfig {
    std::string experiment;
    ModelSpec model;
    double t0 = 0.0;
    double x0 = 0.0;
    int n_steps = 200;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    double eps_sigma = 1e-8;
    std::optional<double> lambda_floor;
    std::optional<double> weight_cap;
    int n_ode_steps = 200;
    std::string output_path;

    // blowup-rate
    std::vector<double> t_values;
    std::string weight_kind = "degenerate";
    // lambda-moment
    std::vector<double> p_values{1.0, 2.0};
    std::vector<std::size_t> sample_sizes;
    // tau-locate
    int n_hist_bins = 20;
    // girsanov-equiv, pde-vs-mc, z-path
    std::vector<double> probe_t;
    std::vector<double> probe_x;
    double pde_x_min = -5.0;
    double pde_x_max = 5.0;
    double pde_dx = 0.01;
    int gamma_grid_n = 20;
    std::string provider = "fd";
};

const std::vector<std::string>& experiment_names();

/// Parses and validates a config document; errors name the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::string detail;
};

struct ExperimentResult {
    std::vector<std::filesystem::path> files;
    std::vector<CheckResult> checks;

    [[nodiscard]] bool all_passed() const;
};

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    unsigned workers = 1;
};

/// Runs one experiment and writes its CSV files. Throws ValidationError or
/// NumericalError; threshold checks are always evaluated and returned.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace fbsde
