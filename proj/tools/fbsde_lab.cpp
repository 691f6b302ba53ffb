#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/experiments.hpp"
#include "fbsde/model.hpp"
#include "fbsde/parallel.hpp"

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kNumerical = 2, kBreach = 3 };

int run(const std::string& config_path, bool check, const std::string& out_dir, unsigned workers) {
    try {
        const fbsde::ExperimentConfig cfg = fbsde::load_config(config_path);
        fbsde::RunOptions opts;
        if (!out_dir.empty()) opts.out_dir = out_dir;
        opts.workers = workers;
        const fbsde::ExperimentResult result = fbsde::run_experiment(cfg, opts);
        for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
        if (!check) return kOk;
        for (const auto& c : result.checks) {
            std::printf("%s %s measured=%.10g threshold=%.10g%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                        c.measured, c.threshold, c.detail.empty() ? "" : " ", c.detail.c_str());
        }
        return result.all_passed() ? kOk : kBreach;
    } catch (const fbsde::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    } catch (const fbsde::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo and finite-difference experiments for decoupled FBSDEs with degenerate volatility"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool check = false;
    unsigned workers = fbsde::default_workers();
    auto* run_cmd = app.add_subcommand("run", "Run one experiment described by a JSON config");
    run_cmd->add_option("--config", config_path, "Path to the JSON config")->required();
    run_cmd->add_flag("--check", check, "Evaluate acceptance thresholds; exit 3 on any breach");
    run_cmd->add_option("--out-dir", out_dir, "Write CSV files into this directory instead");
    run_cmd->add_option("--workers", workers, "Worker threads (results do not depend on this)")
        ->check(CLI::PositiveNumber);

    auto* models_cmd = app.add_subcommand("list-models", "Print the built-in model names");
    auto* exps_cmd = app.add_subcommand("list-experiments", "Print the experiment names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    if (*models_cmd) {
        for (const auto& name : fbsde::builtin_model_names()) std::cout << name << '\n';
        return kOk;
    }
    if (*exps_cmd) {
        for (const auto& name : fbsde::experiment_names()) std::cout << name << '\n';
        return kOk;
    }
    return run(config_path, check, out_dir, workers);
}
