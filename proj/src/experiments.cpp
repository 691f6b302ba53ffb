#include "fbsde/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include "json.hpp"
#include <set>
#include <sstream>

#include "fbsde/csv.hpp"
#include "fbsde/degeneracy.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/estimators.hpp"
#include "fbsde/oracles.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/pde_fd.hpp"

namespace fbsde {

namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kKnownKeys = {
    "experiment", "model",      "model_params", "model_base", "t0",          "x0",          "n_steps",
    "n_paths",    "seed",       "eps_sigma",    "lambda_floor", "weight_cap", "n_ode_steps", "output_path",
    "t_values",   "t_lo",       "t_hi",         "n_t_points", "weight_kind", "p_values",    "sample_sizes",
    "n_hist_bins", "probe_t",   "probe_x",      "pde_x_min",  "pde_x_max",   "pde_dx",      "gamma_grid_n",
    "provider"};

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw ValidationError("config key '" + key + "': " + why);
}

double get_real(const json& doc, const std::string& key) {
    const json& v = doc.at(key);
    if (!v.is_number()) bad_key(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad_key(key, "must be finite");
    return d;
}

long long get_int(const json& doc, const std::string& key) {
    const json& v = doc.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) bad_key(key, "expected an integer");
    return v.get<long long>();
}

std::string get_string(const json& doc, const std::string& key) {
    const json& v = doc.at(key);
    if (!v.is_string()) bad_key(key, "expected a string");
    return v.get<std::string>();
}

std::vector<double> get_reals(const json& doc, const std::string& key) {
    const json& v = doc.at(key);
    if (!v.is_array()) bad_key(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) bad_key(key, "expected an array of numbers");
        out.push_back(e.get<double>());
        if (!std::isfinite(out.back())) bad_key(key, "entries must be finite");
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

std::filesystem::path resolve_output(const ExperimentConfig& cfg, const RunOptions& opts) {
    std::filesystem::path p(cfg.output_path);
    if (opts.out_dir) p = *opts.out_dir / p.filename();
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return p;
}

std::filesystem::path sibling(const std::filesystem::path& main, const std::string& suffix) {
    std::filesystem::path p = main;
    p.replace_filename(main.stem().string() + suffix);
    return p;
}

std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("config key 'output_path': cannot open '" + p.string() + "' for writing");
    return os;
}

McOptions mc_options(const ExperimentConfig& cfg, const RunOptions& opts) {
    McOptions mc;
    mc.seed = cfg.seed;
    mc.n_paths = cfg.n_paths;
    mc.workers = opts.workers;
    mc.eps_sigma = cfg.eps_sigma;
    mc.n_ode_steps = cfg.n_ode_steps;
    mc.lambda_floor = cfg.lambda_floor;
    mc.weight_cap = cfg.weight_cap;
    return mc;
}

WeightKind parse_kind(const std::string& s) {
    if (s == "degenerate") return WeightKind::degenerate;
    if (s == "nondegenerate") return WeightKind::nondegenerate;
    bad_key("weight_kind", "must be 'degenerate' or 'nondegenerate'");
}

CheckResult check_le(std::string name, double measured, double threshold, std::string detail = {}) {
    return CheckResult{std::move(name), measured, threshold, measured <= threshold, std::move(detail)};
}

std::string fmt(double v) { return csv::format_real(v); }

/// Least-squares slope of ys against xs.
double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

/// FD solution on the configured grid and on the grid with half the spacing.
struct FdPair {
    PdeSolution coarse;
    PdeSolution fine;

    [[nodiscard]] double u_error(double t, double x) const { return std::abs(fine.u(t, x) - coarse.u(t, x)); }
    [[nodiscard]] double ux_error(double t, double x) const { return std::abs(fine.u_x(t, x) - coarse.u_x(t, x)); }
};

FdPair solve_fd_pair(const CoefficientModel& model, const ExperimentConfig& cfg, double t_start) {
    const PdeGrid g1 = make_pde_grid(model, cfg.pde_x_min, cfg.pde_x_max, cfg.pde_dx, t_start);
    const PdeGrid g2 = make_pde_grid(model, cfg.pde_x_min, cfg.pde_x_max, 0.5 * cfg.pde_dx, t_start);
    return FdPair{solve_fd(model, g1), solve_fd(model, g2)};
}

std::vector<ProblemPoint> probe_points(const ExperimentConfig& cfg) {
    std::vector<double> ts = cfg.probe_t.empty() ? std::vector<double>{cfg.t0} : cfg.probe_t;
    std::vector<ProblemPoint> pts;
    for (double t : ts)
        for (double x : cfg.probe_x) pts.push_back({t, x});
    return pts;
}

// ---------------------------------------------------------------------------

ExperimentResult run_blowup_rate(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (cfg.model.name != "example1") bad_key("model", "blowup-rate runs on example1");
    if (cfg.x0 != 0.0) bad_key("x0", "blowup-rate evaluates u_x at x = 0");
    if (cfg.t_values.size() < 2) bad_key("t_values", "need at least two times (or t_lo, t_hi, n_t_points)");
    const CoefficientModel model = builtin_model(cfg.model);
    const oracles::Example1Params params{cfg.model.params.at("alpha"), cfg.model.params.at("beta")};
    for (double t : cfg.t_values) {
        if (!(t >= 0.0 && t < 1.0)) bad_key("t_values", "times must lie in [0, 1)");
    }
    const WeightKind kind = parse_kind(cfg.weight_kind);
    const McOptions mc = mc_options(cfg, opts);

    const auto out_path = resolve_output(cfg, opts);
    auto os = open_csv(out_path);
    csv::write_row(os, {"t", "ux_mc", "ux_stderr", "ux_oracle"});

    ExperimentResult result;
    std::vector<double> log_gap, log_ux, log_z;
    for (double t : cfg.t_values) {
        const TimeGrid grid(t, model.horizon_T, cfg.n_steps);
        const Estimate est = estimate_ux_weighted(model, {t, 0.0}, grid, mc, kind);
        const double oracle = oracles::example1_ux_at_zero(t, params);
        csv::write_row(os, {t, est.mean, est.std_err, oracle});
        const double tol = 3.0 * est.std_err + 0.02 * std::abs(oracle);
        result.checks.push_back(check_le("ux_level t=" + fmt(t), std::abs(est.mean - oracle), tol,
                                         "mc=" + fmt(est.mean) + " oracle=" + fmt(oracle)));
        log_gap.push_back(std::log(1.0 - t));
        log_ux.push_back(std::log(std::abs(est.mean)));
        log_z.push_back(std::log(std::abs(est.mean) * model.sigma(t, 0.0)));
    }
    const double slope = fit_slope(log_gap, log_ux);
    const double z_slope = fit_slope(log_gap, log_z);
    const double target = oracles::example1_ux_exponent(params);
    const double z_target = oracles::example1_z_exponent(params);
    csv::write_row(os, {"slope", slope, z_slope, target});
    result.files.push_back(out_path);
    result.checks.push_back(check_le("ux_slope", std::abs(slope - target), 0.05,
                                     "fitted=" + fmt(slope) + " target=" + fmt(target)));
    result.checks.push_back(check_le("z_slope", std::abs(z_slope - z_target), 0.05,
                                     "fitted=" + fmt(z_slope) + " target=" + fmt(z_target)));
    return result;
}

ExperimentResult run_weight_crossval(const ExperimentConfig& cfg, const RunOptions& opts) {
    const CoefficientModel model = builtin_model(cfg.model);
    const ProblemPoint point{cfg.t0, cfg.x0};
    const TimeGrid grid(point.t0, model.horizon_T, cfg.n_steps);
    const McOptions mc = mc_options(cfg, opts);
    const Estimate pw = estimate_ux_pathwise(model, point, grid, mc);
    const Estimate nd = estimate_ux_weighted(model, point, grid, mc, WeightKind::nondegenerate);
    const Estimate dg = estimate_ux_weighted(model, point, grid, mc, WeightKind::degenerate);

    const auto out_path = resolve_output(cfg, opts);
    auto os = open_csv(out_path);
    csv::write_row(os, {"quantity", "value", "stderr"});
    csv::write_row(os, {"pathwise", pw.mean, pw.std_err});
    csv::write_row(os, {"nondegenerate", nd.mean, nd.std_err});
    csv::write_row(os, {"degenerate", dg.mean, dg.std_err});
    const double z_pn = z_score(pw, nd);
    const double z_pd = z_score(pw, dg);
    const double z_nd = z_score(nd, dg);
    csv::write_row(os, {"z_pathwise_nondegenerate", z_pn, 0.0});
    csv::write_row(os, {"z_pathwise_degenerate", z_pd, 0.0});
    csv::write_row(os, {"z_nondegenerate_degenerate", z_nd, 0.0});

    ExperimentResult result;
    result.files.push_back(out_path);
    result.checks.push_back(check_le("z_pathwise_nondegenerate", z_pn, 3.0));
    result.checks.push_back(check_le("z_pathwise_degenerate", z_pd, 3.0));
    result.checks.push_back(check_le("z_nondegenerate_degenerate", z_nd, 3.0));
    if (cfg.model.name == "tanh_smooth" || cfg.model.name == "bachelier_digital") {
        const bool same = nd.mean == dg.mean && nd.std_err == dg.std_err;
        result.checks.push_back(CheckResult{"constant_sigma_bit_identity", std::abs(nd.mean - dg.mean), 0.0, same,
                                            "nondegenerate=" + fmt(nd.mean) + " degenerate=" + fmt(dg.mean)});
    }
    return result;
}

ExperimentResult run_tau_locate(const ExperimentConfig& cfg, const RunOptions& opts) {
    const CoefficientModel model = builtin_model(cfg.model);
    const ProblemPoint point{cfg.t0, cfg.x0};
    validate_point(model, point);
    const TimeGrid grid(point.t0, model.horizon_T, cfg.n_steps);
    std::vector<double> taus(cfg.n_paths);
    GammaZeroCache cache;
    parallel_for(cfg.n_paths, opts.workers, [&](std::size_t i) {
        const PathBundle path = simulate_path(model, point, grid, cfg.seed, i);
        taus[i] = path.valid ? locate_tau(model, path, cfg.n_ode_steps, cfg.eps_sigma, &cache)
                             : std::numeric_limits<double>::quiet_NaN();
    });

    const auto out_path = resolve_output(cfg, opts);
    {
        auto os = open_csv(out_path);
        csv::write_row(os, {"path_id", "tau"});
        for (std::size_t i = 0; i < taus.size(); ++i) csv::write_row(os, {static_cast<long long>(i), taus[i]});
    }
    const auto hist_path = sibling(out_path, ".hist.csv");
    {
        auto os = open_csv(hist_path);
        csv::write_row(os, {"bin_lo", "bin_hi", "count"});
        const int nb = cfg.n_hist_bins;
        std::vector<long long> counts(static_cast<std::size_t>(nb), 0);
        const double lo = grid.t0;
        const double width = (grid.T - grid.t0) / nb;
        for (double tau : taus) {
            if (!std::isfinite(tau)) continue;
            const int b = std::clamp(static_cast<int>((tau - lo) / width), 0, nb - 1);
            ++counts[b];
        }
        for (int b = 0; b < nb; ++b) csv::write_row(os, {lo + b * width, b + 1 == nb ? grid.T : lo + (b + 1) * width, counts[b]});
    }

    ExperimentResult result;
    result.files = {out_path, hist_path};
    const double dt = grid.dt();
    std::optional<double> expected;
    if (cfg.model.name == "example1") expected = 1.0;
    if (cfg.model.name == "step_vol") expected = cfg.model.params.at("t_cut");
    if (cfg.model.name == "indicator_zero_vol") {
        double worst = 0.0;
        for (double tau : taus) worst = std::max(worst, std::isfinite(tau) ? std::abs(tau - point.t0) : INFINITY);
        result.checks.push_back(check_le("tau_equals_t0", worst, 0.0));
    } else if (expected) {
        double worst = 0.0;
        for (double tau : taus) worst = std::max(worst, std::isfinite(tau) ? std::abs(tau - *expected) : INFINITY);
        result.checks.push_back(check_le("tau_within_one_step", worst, dt * (1.0 + 1e-9),
                                         "expected tau=" + fmt(*expected) + " dt=" + fmt(dt)));
    }
    return result;
}

ExperimentResult run_lambda_moment(const ExperimentConfig& cfg, const RunOptions& opts) {
    const CoefficientModel model = builtin_model(cfg.model);
    const ProblemPoint point{cfg.t0, cfg.x0};
    validate_point(model, point);
    if (cfg.sample_sizes.size() < 2) bad_key("sample_sizes", "need at least two sample sizes");
    if (cfg.p_values.empty()) bad_key("p_values", "need at least one exponent");
    const TimeGrid grid(point.t0, model.horizon_T, cfg.n_steps);

    const auto out_path = resolve_output(cfg, opts);
    auto os = open_csv(out_path);
    csv::write_row(os, {"p", "n_paths", "mean", "stderr", "n_used", "n_floored"});
    ExperimentResult result;
    for (double p : cfg.p_values) {
        std::optional<double> previous;
        for (std::size_t n : cfg.sample_sizes) {
            McOptions mc = mc_options(cfg, opts);
            mc.n_paths = n;
            const Estimate est = empirical_lambda_moment(model, point, grid, mc, p);
            csv::write_row(os, {p, static_cast<long long>(n), est.mean, est.std_err,
                                static_cast<long long>(est.n_used), static_cast<long long>(est.n_floored)});
            if (previous) {
                const double rel = std::abs(est.mean - *previous) / std::abs(*previous);
                result.checks.push_back(check_le("lambda_moment_stable p=" + fmt(p) + " n=" + std::to_string(n), rel,
                                                 0.05, "mean=" + fmt(est.mean) + " previous=" + fmt(*previous)));
            }
            previous = est.mean;
        }
    }
    result.files.push_back(out_path);
    return result;
}

ExperimentResult run_girsanov_equiv(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (cfg.model.name != "girsanov_const") bad_key("model", "girsanov-equiv runs on girsanov_const");
    if (cfg.probe_x.empty()) bad_key("probe_x", "need at least one probe point");
    const CoefficientModel model = builtin_model(cfg.model);
    const auto probes = probe_points(cfg);
    double t_start = model.horizon_T;
    for (const auto& p : probes) {
        validate_point(model, p);
        t_start = std::min(t_start, p.t0);
    }
    const FdPair fd = solve_fd_pair(model, cfg, std::min(t_start, cfg.t0));
    const McOptions mc = mc_options(cfg, opts);

    const auto out_path = resolve_output(cfg, opts);
    ExperimentResult result;
    {
        auto os = open_csv(out_path);
        csv::write_row(os, {"t", "x", "u_mc", "u_stderr", "u_fd", "fd_error"});
        for (const auto& p : probes) {
            const TimeGrid grid(p.t0, model.horizon_T, cfg.n_steps);
            const Estimate est = estimate_u(model, p, grid, mc);
            const double u_fd = fd.fine.u(p.t0, p.x0);
            const double err = fd.u_error(p.t0, p.x0);
            csv::write_row(os, {p.t0, p.x0, est.mean, est.std_err, u_fd, err});
            result.checks.push_back(check_le("u_mc_vs_fd t=" + fmt(p.t0) + " x=" + fmt(p.x0), std::abs(est.mean - u_fd),
                                             3.0 * est.std_err + 2.0 * err,
                                             "mc=" + fmt(est.mean) + " fd=" + fmt(u_fd)));
        }
    }
    std::vector<ProblemPoint> gamma_pts;
    for (double t : linspace(0.0, model.horizon_T, cfg.gamma_grid_n))
        for (double x : linspace(cfg.pde_x_min, cfg.pde_x_max, cfg.gamma_grid_n)) gamma_pts.push_back({t, x});
    const auto eq = check_gamma_equivalence(model, gamma_pts, cfg.n_ode_steps, cfg.eps_sigma);
    const auto gamma_path = sibling(out_path, ".gamma.csv");
    {
        auto os = open_csv(gamma_path);
        csv::write_row(os, {"t", "x", "in_gamma0", "in_gamma0_transformed", "n_index", "n_index_transformed"});
        for (std::size_t i = 0; i < gamma_pts.size(); ++i) {
            const auto& a = eq.original[i];
            const auto& b = eq.transformed[i];
            csv::write_row(os, {gamma_pts[i].t0, gamma_pts[i].x0, static_cast<long long>(a.in_Gamma0),
                                static_cast<long long>(b.in_Gamma0), static_cast<long long>(a.n_index.value_or(0)),
                                static_cast<long long>(b.n_index.value_or(0))});
        }
    }
    result.files = {out_path, gamma_path};
    result.checks.push_back(CheckResult{"gamma0_agreement", eq.agreement_fraction, 1.0, eq.agreement_fraction == 1.0,
                                        "max n-index ratio=" + fmt(eq.max_n_ratio)});
    return result;
}

ExperimentResult run_pde_vs_mc(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (cfg.probe_x.empty()) bad_key("probe_x", "need at least one probe point");
    const CoefficientModel model = builtin_model(cfg.model);
    const auto probes = probe_points(cfg);
    double t_start = cfg.t0;
    for (const auto& p : probes) {
        validate_point(model, p);
        if (!(p.t0 < model.horizon_T)) bad_key("probe_t", "probe times must precede the horizon");
        t_start = std::min(t_start, p.t0);
    }
    const FdPair fd = solve_fd_pair(model, cfg, t_start);
    const McOptions mc = mc_options(cfg, opts);
    const WeightKind kind = parse_kind(cfg.weight_kind);
    const bool digital = cfg.model.name == "bachelier_digital";

    const auto out_path = resolve_output(cfg, opts);
    auto os = open_csv(out_path);
    csv::write_row(os, {"t", "x", "u_fd", "ux_fd", "u_mc", "u_stderr", "ux_mc", "ux_stderr", "u_tol", "ux_tol"});
    ExperimentResult result;
    for (const auto& p : probes) {
        const TimeGrid grid(p.t0, model.horizon_T, cfg.n_steps);
        const Estimate u_est = estimate_u(model, p, grid, mc);
        const double u_fd = fd.fine.u(p.t0, p.x0);
        const double ux_fd = fd.fine.u_x(p.t0, p.x0);
        const double u_tol = 3.0 * u_est.std_err + 2.0 * fd.u_error(p.t0, p.x0);
        double ux_mc = std::numeric_limits<double>::quiet_NaN();
        double ux_se = std::numeric_limits<double>::quiet_NaN();
        double ux_tol = std::numeric_limits<double>::quiet_NaN();
        const std::string where = " t=" + fmt(p.t0) + " x=" + fmt(p.x0);
        if (in_gamma0(model, p, cfg.n_ode_steps, cfg.eps_sigma)) {
            const Estimate ux_est = estimate_ux_weighted(model, p, grid, mc, kind);
            ux_mc = ux_est.mean;
            ux_se = ux_est.std_err;
            ux_tol = 3.0 * ux_se + 2.0 * fd.ux_error(p.t0, p.x0) + 0.02 * std::abs(ux_fd);
            result.checks.push_back(check_le("ux_mc_vs_fd" + where, std::abs(ux_mc - ux_fd), ux_tol));
            if (digital) {
                const auto& prm = cfg.model.params;
                const auto exact = oracles::bachelier_digital(p.t0, p.x0, prm.at("sigma_bar"),
                                                              prm.contains("strike") ? prm.at("strike") : 0.0,
                                                              model.horizon_T);
                result.checks.push_back(check_le("ux_mc_vs_exact" + where, std::abs(ux_mc - exact.ux),
                                                 3.0 * ux_se + 0.02 * exact.ux, "exact=" + fmt(exact.ux)));
                result.checks.push_back(check_le("ux_fd_vs_exact" + where, std::abs(ux_fd - exact.ux), 1e-2,
                                                 "fd=" + fmt(ux_fd) + " exact=" + fmt(exact.ux)));
            }
        }
        csv::write_row(os, {p.t0, p.x0, u_fd, ux_fd, u_est.mean, u_est.std_err, ux_mc, ux_se, u_tol, ux_tol});
        result.checks.push_back(check_le("u_mc_vs_fd" + where, std::abs(u_est.mean - u_fd), u_tol));
    }
    result.files.push_back(out_path);
    return result;
}

ExperimentResult run_z_path(const ExperimentConfig& cfg, const RunOptions& opts) {
    const CoefficientModel model = builtin_model(cfg.model);
    const ProblemPoint point{cfg.t0, cfg.x0};
    validate_point(model, point);
    const TimeGrid grid(point.t0, model.horizon_T, cfg.n_steps);

    ValueProvider provider;
    if (cfg.provider == "fd") {
        provider = solve_fd(model, make_pde_grid(model, cfg.pde_x_min, cfg.pde_x_max, cfg.pde_dx, point.t0)).as_provider();
    } else if (cfg.provider == "exact") {
        if (cfg.model.name != "bachelier_digital") bad_key("provider", "'exact' is available for bachelier_digital only");
        const double sb = cfg.model.params.at("sigma_bar");
        const double k = cfg.model.params.contains("strike") ? cfg.model.params.at("strike") : 0.0;
        const double T = model.horizon_T;
        // At the horizon the digital delta is a point mass; Z is reported as 0 there.
        provider.u_eval = [=](double t, double x) { return t < T ? oracles::bachelier_digital(t, x, sb, k, T).u : (x > k ? 1.0 : 0.0); };
        provider.ux_eval = [=](double t, double x) { return t < T ? oracles::bachelier_digital(t, x, sb, k, T).ux : 0.0; };
    } else {
        bad_key("provider", "must be 'fd' or 'exact'");
    }

    std::vector<ZPath> zs(cfg.n_paths);
    std::vector<PathBundle> paths(cfg.n_paths);
    GammaZeroCache cache;
    parallel_for(cfg.n_paths, opts.workers, [&](std::size_t i) {
        paths[i] = simulate_path(model, point, grid, cfg.seed, i);
        if (paths[i].valid) zs[i] = reconstruct_Z(model, paths[i], provider, cfg.eps_sigma, cfg.n_ode_steps, &cache);
    });

    const auto out_path = resolve_output(cfg, opts);
    auto os = open_csv(out_path);
    csv::write_row(os, {"path_id", "t", "X", "Z", "tau"});
    double worst_after_tau = 0.0;
    double worst_any = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if (!paths[i].valid) continue;
        for (std::size_t k = 0; k < zs[i].samples.size(); ++k) {
            const auto& s = zs[i].samples[k];
            csv::write_row(os, {static_cast<long long>(i), s.t, paths[i].X[k], s.z, zs[i].tau});
            worst_any = std::max(worst_any, std::abs(s.z));
            if (zs[i].exited && s.t >= zs[i].tau) worst_after_tau = std::max(worst_after_tau, std::abs(s.z));
        }
    }
    ExperimentResult result;
    result.files.push_back(out_path);
    result.checks.push_back(check_le("z_zero_from_tau", worst_after_tau, 0.0));
    if (cfg.model.name == "indicator_zero_vol") result.checks.push_back(check_le("z_identically_zero", worst_any, 0.0));
    return result;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"blowup-rate",    "weight-crossval", "tau-locate", "lambda-moment",
                                                   "girsanov-equiv", "pde-vs-mc",       "z-path"};
    return names;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!kKnownKeys.contains(key)) bad_key(key, "unknown key");
    }
    for (const char* key : {"experiment", "model", "output_path"}) {
        if (!doc.contains(key)) bad_key(key, "required");
    }

    ExperimentConfig cfg;
    cfg.experiment = get_string(doc, "experiment");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) bad_key("experiment", "unknown experiment '" + cfg.experiment + "'");
    cfg.model.name = get_string(doc, "model");
    if (doc.contains("model_params")) {
        const json& mp = doc.at("model_params");
        if (!mp.is_object()) bad_key("model_params", "expected an object of numbers");
        for (const auto& [k, v] : mp.items()) {
            if (!v.is_number()) bad_key("model_params." + k, "expected a number");
            cfg.model.params[k] = v.get<double>();
        }
    }
    if (doc.contains("model_base")) cfg.model.base = get_string(doc, "model_base");
    cfg.output_path = get_string(doc, "output_path");
    if (cfg.output_path.empty()) bad_key("output_path", "must not be empty");

    if (doc.contains("t0")) cfg.t0 = get_real(doc, "t0");
    if (doc.contains("x0")) cfg.x0 = get_real(doc, "x0");
    if (doc.contains("n_steps")) cfg.n_steps = static_cast<int>(get_int(doc, "n_steps"));
    if (cfg.n_steps < 1) bad_key("n_steps", "must be >= 1");
    if (doc.contains("n_paths")) {
        const long long n = get_int(doc, "n_paths");
        if (n < 1) bad_key("n_paths", "must be >= 1");
        cfg.n_paths = static_cast<std::size_t>(n);
    }
    if (doc.contains("seed")) {
        const json& s = doc.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) bad_key("seed", "expected a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    if (doc.contains("eps_sigma")) cfg.eps_sigma = get_real(doc, "eps_sigma");
    if (!(cfg.eps_sigma > 0.0)) bad_key("eps_sigma", "must be positive");
    if (doc.contains("lambda_floor")) {
        cfg.lambda_floor = get_real(doc, "lambda_floor");
        if (!(*cfg.lambda_floor > 0.0)) bad_key("lambda_floor", "must be positive");
    }
    if (doc.contains("weight_cap")) {
        cfg.weight_cap = get_real(doc, "weight_cap");
        if (!(*cfg.weight_cap > 0.0)) bad_key("weight_cap", "must be positive");
    }
    if (doc.contains("n_ode_steps")) cfg.n_ode_steps = static_cast<int>(get_int(doc, "n_ode_steps"));
    if (cfg.n_ode_steps < 1) bad_key("n_ode_steps", "must be >= 1");

    if (doc.contains("t_values")) {
        if (doc.contains("t_lo") || doc.contains("t_hi") || doc.contains("n_t_points")) bad_key("t_values", "give either t_values or t_lo/t_hi/n_t_points");
        cfg.t_values = get_reals(doc, "t_values");
    } else if (doc.contains("t_lo") || doc.contains("t_hi") || doc.contains("n_t_points")) {
        for (const char* key : {"t_lo", "t_hi", "n_t_points"}) {
            if (!doc.contains(key)) bad_key(key, "required together with t_lo/t_hi/n_t_points");
        }
        const double lo = get_real(doc, "t_lo");
        const double hi = get_real(doc, "t_hi");
        const auto n = get_int(doc, "n_t_points");
        if (!(lo < hi)) bad_key("t_hi", "must exceed t_lo");
        if (n < 2) bad_key("n_t_points", "must be >= 2");
        cfg.t_values = linspace(lo, hi, static_cast<int>(n));
    }
    if (doc.contains("weight_kind")) {
        cfg.weight_kind = get_string(doc, "weight_kind");
        parse_kind(cfg.weight_kind);
    }
    if (doc.contains("p_values")) cfg.p_values = get_reals(doc, "p_values");
    for (double p : cfg.p_values) {
        if (!(p > 0.0)) bad_key("p_values", "exponents must be positive");
    }
    if (doc.contains("sample_sizes")) {
        const json& v = doc.at("sample_sizes");
        if (!v.is_array()) bad_key("sample_sizes", "expected an array of integers");
        for (const auto& e : v) {
            if (!e.is_number_integer() || e.get<long long>() < 1) bad_key("sample_sizes", "entries must be positive integers");
            cfg.sample_sizes.push_back(e.get<std::size_t>());
        }
    }
    if (doc.contains("n_hist_bins")) cfg.n_hist_bins = static_cast<int>(get_int(doc, "n_hist_bins"));
    if (cfg.n_hist_bins < 1) bad_key("n_hist_bins", "must be >= 1");
    if (doc.contains("probe_t")) cfg.probe_t = get_reals(doc, "probe_t");
    if (doc.contains("probe_x")) cfg.probe_x = get_reals(doc, "probe_x");
    if (doc.contains("pde_x_min")) cfg.pde_x_min = get_real(doc, "pde_x_min");
    if (doc.contains("pde_x_max")) cfg.pde_x_max = get_real(doc, "pde_x_max");
    if (!(cfg.pde_x_min < cfg.pde_x_max)) bad_key("pde_x_max", "must exceed pde_x_min");
    if (doc.contains("pde_dx")) cfg.pde_dx = get_real(doc, "pde_dx");
    if (!(cfg.pde_dx > 0.0)) bad_key("pde_dx", "must be positive");
    if (doc.contains("gamma_grid_n")) cfg.gamma_grid_n = static_cast<int>(get_int(doc, "gamma_grid_n"));
    if (cfg.gamma_grid_n < 1) bad_key("gamma_grid_n", "must be >= 1");
    if (doc.contains("provider")) cfg.provider = get_string(doc, "provider");

    // Model parameters are validated up front as well.
    try {
        const CoefficientModel model = builtin_model(cfg.model);
        if (!(cfg.t0 >= 0.0 && cfg.t0 <= model.horizon_T)) bad_key("t0", "must lie in [0, T]");
    } catch (const ValidationError& e) {
        if (std::string(e.what()).starts_with("config key")) throw;
        throw ValidationError(std::string("config key 'model': ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

bool ExperimentResult::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    if (cfg.experiment == "blowup-rate") return run_blowup_rate(cfg, opts);
    if (cfg.experiment == "weight-crossval") return run_weight_crossval(cfg, opts);
    if (cfg.experiment == "tau-locate") return run_tau_locate(cfg, opts);
    if (cfg.experiment == "lambda-moment") return run_lambda_moment(cfg, opts);
    if (cfg.experiment == "girsanov-equiv") return run_girsanov_equiv(cfg, opts);
    if (cfg.experiment == "pde-vs-mc") return run_pde_vs_mc(cfg, opts);
    if (cfg.experiment == "z-path") return run_z_path(cfg, opts);
    throw ValidationError("config key 'experiment': unknown experiment '" + cfg.experiment + "'");
}

}  // namespace fbsde
