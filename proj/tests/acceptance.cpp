// Acceptance suite: one PASS/FAIL line per criterion, at full sample sizes.
// Exits nonzero when any criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fbsde/degeneracy.hpp"
#include "fbsde/estimators.hpp"
#include "fbsde/experiments.hpp"
#include "fbsde/oracles.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/pde_fd.hpp"
#include "fbsde/weights.hpp"

using namespace fbsde;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("fbsde_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

ExperimentResult run(const std::string& json, const std::string& sub, unsigned workers = 1) {
    return run_experiment(parse_config(json), RunOptions{work_dir() / sub, workers});
}

/// Collapses experiment checks into one outcome: worst measured/threshold ratio.
Outcome from_checks(const std::vector<CheckResult>& checks, const std::function<bool(const CheckResult&)>& keep) {
    Outcome o{true, 0.0, 1.0, {}};
    double worst = -1.0;
    for (const auto& c : checks) {
        if (!keep(c)) continue;
        o.passed = o.passed && c.passed;
        const double ratio = c.threshold > 0.0 ? c.measured / c.threshold : (c.measured == 0.0 ? 0.0 : INFINITY);
        if (ratio > worst) {
            worst = ratio;
            o.measured = c.measured;
            o.threshold = c.threshold;
            o.detail = "worst=" + c.name + (c.detail.empty() ? "" : " " + c.detail);
        }
        if (!c.passed) o.detail += " failed=" + c.name;
    }
    if (worst < 0.0) return Outcome{false, 0.0, 0.0, "no checks produced"};
    return o;
}

const std::string kExample1 = R"("model":"example1","model_params":{"alpha":0.8,"beta":0.5})";
const std::string kDigital = R"("model":"bachelier_digital","model_params":{"sigma_bar":1.0,"strike":0.0})";

// ---------------------------------------------------------------------------

Outcome trivial_degenerate() {
    const auto m = builtin_model("indicator_zero_vol");
    McOptions mc;
    mc.n_paths = 1000;
    const TimeGrid grid(0.0, 1.0, 100);
    const Estimate u = estimate_u(m, {0.0, 1.0}, grid, mc);
    const ValueProvider spike{[](double, double) { return 1.0; }, [](double, double) { return 1.0; }};
    double worst_z = 0.0;
    double worst_tau = 0.0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const auto p = simulate_path(m, {0.0, 1.0}, grid, 0, i);
        for (const auto& s : reconstruct_Z(m, p, spike).samples) worst_z = std::max(worst_z, std::abs(s.z));
        worst_tau = std::max(worst_tau, std::abs(locate_tau(m, p, 200) - 0.0));
    }
    const double measured = std::abs(u.mean - 1.0) + u.std_err + worst_z + worst_tau;
    return {measured == 0.0, measured, 0.0,
            "u=" + num(u.mean) + " stderr=" + num(u.std_err) + " max|Z|=" + num(worst_z) + " max|tau-t0|=" + num(worst_tau)};
}

Outcome example1_level() {
    const auto r = run(R"({"experiment":"blowup-rate",)" + kExample1 +
                           R"(,"t_values":[0.5,0.7,0.9],"n_steps":2000,"n_paths":100000,"seed":11,"output_path":"level.csv"})",
                       "c2");
    return from_checks(r.checks, [](const CheckResult& c) { return c.name.starts_with("ux_level"); });
}

Outcome example1_exponents() {
    const auto r = run(R"({"experiment":"blowup-rate",)" + kExample1 +
                           R"(,"t_lo":0.5,"t_hi":0.95,"n_t_points":8,"n_steps":2000,"n_paths":100000,"seed":12,"output_path":"slope.csv"})",
                       "c3");
    return from_checks(r.checks, [](const CheckResult& c) { return c.name == "ux_slope" || c.name == "z_slope"; });
}

Outcome estimator_triangle() {
    const auto r = run(R"({"experiment":"weight-crossval","model":"tanh_smooth","model_params":{"sigma_bar":1.0},
        "t0":0.0,"x0":0.0,"n_steps":200,"n_paths":100000,"seed":13,"output_path":"triangle.csv"})",
                       "c4");
    Outcome o = from_checks(r.checks, [](const CheckResult& c) { return c.name.starts_with("z_"); });
    bool identical = false;
    for (const auto& c : r.checks)
        if (c.name == "constant_sigma_bit_identity") identical = c.passed;
    o.passed = o.passed && identical;
    o.detail += identical ? " bit_identical=yes" : " bit_identical=no";
    return o;
}

Outcome digital_delta() {
    const auto m = builtin_model("bachelier_digital", {{"sigma_bar", 1.0}, {"strike", 0.0}});
    const double exact = 1.0 / std::sqrt(2.0 * M_PI);
    McOptions mc;
    mc.n_paths = 100000;
    mc.seed = 14;
    const Estimate est = estimate_ux_weighted(m, {0.0, 0.0}, TimeGrid(0.0, 1.0, 200), mc, WeightKind::degenerate);
    const double mc_err = std::abs(est.mean - exact);
    const double mc_tol = 3.0 * est.std_err + 0.02 * exact;
    const auto sol = solve_fd(m, make_pde_grid(m, -6.0, 6.0, 0.005));
    const double fd_err = std::abs(sol.u_x(0.0, 0.0) - exact);
    const bool ok = mc_err <= mc_tol && fd_err <= 1e-2;
    return {ok, mc_err / mc_tol, 1.0,
            "mc=" + num(est.mean) + " stderr=" + num(est.std_err) + " mc_err=" + num(mc_err) + " mc_tol=" + num(mc_tol) +
                " fd_err=" + num(fd_err) + " fd_tol=0.01"};
}

Outcome gradient_shadow() {
    const auto m = builtin_model("bachelier_digital", {{"sigma_bar", 1.0}, {"strike", 0.0}});
    const double exact = 1.0 / std::sqrt(2.0 * M_PI);
    McOptions mc;
    mc.n_paths = 100000;
    double lo = INFINITY, hi = -INFINITY, worst_dev = 0.0;
    std::string detail;
    for (double t : {0.0, 0.25, 0.5, 0.75}) {
        // Fresh streams per time; a shared seed would make the scaled values coincide exactly.
        mc.seed = 150 + static_cast<std::uint64_t>(4.0 * t);
        const Estimate est = estimate_ux_weighted(m, {t, 0.0}, TimeGrid(t, 1.0, 200), mc, WeightKind::degenerate);
        const double scaled = est.mean * std::sqrt(1.0 - t);
        lo = std::min(lo, scaled);
        hi = std::max(hi, scaled);
        worst_dev = std::max(worst_dev, std::abs(scaled / exact - 1.0));
        detail += " t=" + num(t) + ":" + num(scaled);
    }
    const double spread = (hi - lo) / exact;
    return {spread <= 0.05 && worst_dev <= 0.05, spread, 0.05, "max_dev_from_exact=" + num(worst_dev) + detail};
}

Outcome lambda_moments() {
    const auto r = run(R"({"experiment":"lambda-moment",)" + kExample1 +
                           R"(,"t0":0.0,"x0":0.0,"n_steps":200,"p_values":[1,2],"sample_sizes":[10000,100000],"seed":16,"output_path":"lambda.csv"})",
                       "c7");
    return from_checks(r.checks, [](const CheckResult&) { return true; });
}

Outcome weight_second_moment() {
    const auto m = builtin_model("bachelier_digital", {{"sigma_bar", 1.0}, {"strike", 0.0}});
    const std::size_t n = 100000;
    std::vector<double> log_gap, log_m2;
    std::string detail;
    std::uint64_t seed = 170;
    for (double t0 : {0.0, 0.5, 0.75, 0.875}) {
        const TimeGrid g(t0, 1.0, 200);
        ++seed;
        std::vector<double> sq(n);
        parallel_for(n, default_workers(), [&](std::size_t i) {
            const auto p = simulate_path(m, {t0, 0.0}, g, seed, i);
            const double w = *degenerate_weight(p, g.n_steps, default_lambda_floor(g.dt(), kDefaultEpsSigma)).value;
            sq[i] = w * w;
        });
        const double m2 = sample_moments(sq).mean;
        log_gap.push_back(std::log(1.0 - t0));
        log_m2.push_back(std::log(m2));
        detail += " t0=" + num(t0) + ":" + num(m2);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < log_gap.size(); ++i) {
        mx += log_gap[i] / log_gap.size();
        my += log_m2[i] / log_m2.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < log_gap.size(); ++i) {
        sxy += (log_gap[i] - mx) * (log_m2[i] - my);
        sxx += (log_gap[i] - mx) * (log_gap[i] - mx);
    }
    const double slope = sxy / sxx;
    return {std::abs(slope + 1.0) <= 0.1, std::abs(slope + 1.0), 0.1, "slope=" + num(slope) + detail};
}

Outcome girsanov_equivalence() {
    const auto r = run(R"({"experiment":"girsanov-equiv","model":"girsanov_const","model_base":"step_vol",
        "model_params":{"f2":0.5,"sigma_bar":1.0,"t_cut":0.5},"probe_t":[0.0],"probe_x":[-1.0,-0.5,0.0,0.5,1.0],
        "n_steps":200,"n_paths":100000,"seed":18,"pde_x_min":-6,"pde_x_max":6,"pde_dx":0.01,"gamma_grid_n":20,
        "output_path":"girsanov.csv"})",
                       "c9");
    int probes = 0;
    for (const auto& c : r.checks) probes += c.name.starts_with("u_mc_vs_fd");
    Outcome o = from_checks(r.checks, [](const CheckResult&) { return true; });
    o.detail += " probes=" + std::to_string(probes);
    o.passed = o.passed && probes == 5;
    return o;
}

Outcome tau_localization() {
    const auto a = run(R"({"experiment":"tau-locate",)" + kExample1 +
                           R"(,"t0":0.0,"x0":0.0,"n_steps":200,"n_paths":1000,"seed":19,"output_path":"tau_e1.csv"})",
                       "c10");
    const auto b = run(R"({"experiment":"tau-locate","model":"step_vol","model_params":{"sigma_bar":1.0,"t_cut":0.5},
        "t0":0.0,"x0":0.0,"n_steps":200,"n_paths":1000,"seed":20,"output_path":"tau_sv.csv"})",
                       "c10");
    std::vector<CheckResult> all = a.checks;
    for (auto c : b.checks) {
        c.name = "step_vol_" + c.name;
        all.push_back(c);
    }
    return from_checks(all, [](const CheckResult&) { return true; });
}

double digital_fd_error(double dx) {
    const auto m = builtin_model("bachelier_digital", {{"sigma_bar", 1.0}, {"strike", 0.0}});
    const auto sol = solve_fd(m, make_pde_grid(m, -6.0, 6.0, dx));
    const auto& g = sol.grid();
    double err = 0.0;
    for (int i = 0; i < g.n_x; ++i) {
        const double x = g.node(i);
        if (std::abs(x) <= 2.0) err = std::max(err, std::abs(sol.level_values(0)[i] - oracles::normal_cdf(x)));
    }
    return err;
}

Outcome fd_validation() {
    const std::vector<ModelSpec> specs = {
        {"indicator_zero_vol", {}, ""},
        {"example1", {{"alpha", 0.8}, {"beta", 0.5}}, ""},
        {"bachelier_digital", {{"sigma_bar", 1.0}}, ""},
        {"tanh_smooth", {{"sigma_bar", 1.0}}, ""},
        {"step_vol", {{"sigma_bar", 1.0}, {"t_cut", 0.5}}, ""},
        {"girsanov_const", {{"f2", 0.5}, {"sigma_bar", 1.0}}, "tanh_smooth"},
    };
    double worst_excess = 0.0;
    for (const auto& s : specs) {
        const auto m = builtin_model(s);
        const auto sol = solve_fd(m, make_pde_grid(m, -4.0, 4.0, 0.02));
        const auto& last = sol.level_values(sol.stored_level_count() - 1);
        const double lo = *std::min_element(last.begin(), last.end());
        const double hi = *std::max_element(last.begin(), last.end());
        for (std::size_t l = 0; l < sol.stored_level_count(); ++l)
            for (double v : sol.level_values(l)) worst_excess = std::max({worst_excess, v - hi, lo - v});
    }
    const double e1 = digital_fd_error(0.04), e2 = digital_fd_error(0.02), e3 = digital_fd_error(0.01);
    const double factor = std::min(e1 / e2, e2 / e3);
    return {worst_excess == 0.0 && factor >= 1.5, factor, 1.5,
            "max_principle_excess=" + num(worst_excess) + " errors=" + num(e1) + "," + num(e2) + "," + num(e3)};
}

Outcome determinism() {
    const std::vector<std::string> configs = {
        R"({"experiment":"weight-crossval","model":"tanh_smooth","model_params":{"sigma_bar":1.0},"x0":0.4,
            "n_steps":100,"n_paths":20000,"seed":21,"output_path":"d1.csv"})",
        R"({"experiment":"tau-locate",)" + kExample1 + R"(,"n_steps":100,"n_paths":2000,"seed":22,"output_path":"d2.csv"})",
        R"({"experiment":"lambda-moment",)" + kExample1 + R"(,"n_steps":100,"sample_sizes":[2000,8000],"seed":23,"output_path":"d3.csv"})",
        R"({"experiment":"blowup-rate",)" + kExample1 + R"(,"t_values":[0.5,0.8],"n_steps":100,"n_paths":5000,"seed":24,"output_path":"d4.csv"})",
        R"({"experiment":"pde-vs-mc",)" + kDigital + R"(,"probe_t":[0.0,0.5],"probe_x":[0.0,0.5],"n_steps":50,"n_paths":5000,
            "pde_dx":0.02,"seed":25,"output_path":"d5.csv"})",
        R"({"experiment":"z-path",)" + kExample1 + R"(,"n_steps":100,"n_paths":50,"pde_dx":0.02,"seed":26,"output_path":"d6.csv"})",
        R"({"experiment":"girsanov-equiv","model":"girsanov_const","model_base":"tanh_smooth","model_params":{"f2":0.5,"sigma_bar":1.0},
            "probe_x":[0.0,1.0],"n_steps":50,"n_paths":5000,"pde_dx":0.05,"gamma_grid_n":8,"seed":27,"output_path":"d7.csv"})",
    };
    std::size_t compared = 0, differing = 0;
    std::string detail;
    for (const auto& cfg : configs) {
        for (unsigned workers : {2u, 4u, 7u}) {
            const auto a = run(cfg, "c12_w1", 1);
            const auto b = run(cfg, "c12_w" + std::to_string(workers), workers);
            for (std::size_t i = 0; i < a.files.size(); ++i) {
                ++compared;
                if (i >= b.files.size() || slurp(a.files[i]) != slurp(b.files[i]) || slurp(a.files[i]).empty()) {
                    ++differing;
                    detail += " differs=" + a.files[i].filename().string();
                }
            }
        }
    }
    return {differing == 0, static_cast<double>(differing), 0.0,
            "files_compared=" + std::to_string(compared) + detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"trivial_degenerate_case", trivial_degenerate},
        {"example1_ux_level", example1_level},
        {"example1_blowup_exponents", example1_exponents},
        {"estimator_triangle", estimator_triangle},
        {"digital_delta_oracle", digital_delta},
        {"gradient_bound_shadow", gradient_shadow},
        {"lambda_negative_moments", lambda_moments},
        {"weight_second_moment_rate", weight_second_moment},
        {"girsanov_equivalence", girsanov_equivalence},
        {"tau_localization", tau_localization},
        {"fd_solver_validation", fd_validation},
        {"determinism_across_workers", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = Outcome{false, NAN, NAN, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.passed;
        std::printf("%s %02zu %s measured=%.6g threshold=%.6g time=%.1fs %s\n", o.passed ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), o.measured, o.threshold, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(work_dir());
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
