#include "fbsde/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"

namespace fbsde {

namespace {

constexpr std::size_t kPathBlock = 256;

enum class PathStatus : unsigned char { used, floored, invalid };

struct PathOutcome {
    double value = 0.0;
    PathStatus status = PathStatus::used;
    bool capped = false;
};

void check_options(const McOptions& options) {
    if (options.n_paths < 1) throw ValidationError("n_paths must be >= 1");
    if (!(options.eps_sigma > 0.0)) throw ValidationError("eps_sigma must be positive");
    if (options.lambda_floor && !(*options.lambda_floor > 0.0)) throw ValidationError("lambda_floor must be positive");
    if (options.sigma_floor && !(*options.sigma_floor > 0.0)) throw ValidationError("sigma_floor must be positive");
    if (options.weight_cap && !(*options.weight_cap > 0.0)) throw ValidationError("weight_cap must be positive");
}

void check_grid(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid) {
    validate_point(model, point);
    if (grid.t0 != point.t0 || grid.T != model.horizon_T) {
        std::ostringstream os;
        os << "time grid [" << grid.t0 << ", " << grid.T << "] must start at t0=" << point.t0
           << " and end at the horizon T=" << model.horizon_T;
        throw ValidationError(os.str());
    }
}

/// Simulates every path under `model` and reduces the per-path outcomes in index order.
template <class PathFn>
Estimate run_paths(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                   const McOptions& options, PathFn&& on_path) {
    const std::size_t n = options.n_paths;
    std::vector<PathOutcome> outcomes(n);
    const std::size_t n_blocks = (n + kPathBlock - 1) / kPathBlock;
    parallel_for(n_blocks, options.workers, [&](std::size_t block) {
        PathBundle path;
        const std::size_t lo = block * kPathBlock;
        const std::size_t hi = std::min(n, lo + kPathBlock);
        for (std::size_t i = lo; i < hi; ++i) {
            simulate_path_into(path, model, point, grid, options.seed, i);
            if (!path.valid) {
                outcomes[i].status = PathStatus::invalid;
                continue;
            }
            outcomes[i] = on_path(path);
            if (outcomes[i].status == PathStatus::used && !std::isfinite(outcomes[i].value)) {
                outcomes[i].status = PathStatus::invalid;
            }
        }
    });

    Estimate est;
    std::vector<double> used;
    used.reserve(n);
    for (const auto& o : outcomes) {
        switch (o.status) {
            case PathStatus::used:
                used.push_back(o.value);
                est.n_capped += o.capped ? 1 : 0;
                break;
            case PathStatus::floored: ++est.n_floored; break;
            case PathStatus::invalid: ++est.n_invalid; break;
        }
    }
    if (static_cast<double>(est.n_invalid) > kMaxInvalidFraction * static_cast<double>(n)) {
        throw NumericalError(std::to_string(est.n_invalid) + " of " + std::to_string(n) +
                             " paths produced non-finite values");
    }
    if (used.empty()) {
        throw NumericalError("all " + std::to_string(n) + " paths were floored or invalid");
    }
    const SampleMoments mom = sample_moments(used);
    est.mean = mom.mean;
    est.std_err = mom.n > 1 ? mom.stddev / std::sqrt(static_cast<double>(mom.n)) : 0.0;
    est.n_used = mom.n;
    est.reliable = static_cast<double>(est.n_floored) <= kMaxFlooredFraction * static_cast<double>(est.n_used + est.n_floored);
    return est;
}

double clip(double w, const std::optional<double>& cap, bool& capped) {
    if (cap && std::abs(w) > *cap) {
        capped = true;
        return std::copysign(*cap, w);
    }
    return w;
}

void require_provider_for_driver(const CoefficientModel& model, const ValueProvider* provider, const char* who) {
    if (model.has_f1() && model.f1_depends_on_y && (provider == nullptr || !provider->u_eval)) {
        throw ValidationError(std::string(who) + ": driver depends on y; a value provider is required");
    }
}

double driver_at(const CoefficientModel& model, const ValueProvider* provider, double t, double x) {
    const double y = model.f1_depends_on_y ? provider->u_eval(t, x) : 0.0;
    return model.f1(t, x, y);
}

void require_gamma0(const CoefficientModel& model, const ProblemPoint& point, const McOptions& options,
                    const char* who) {
    if (!in_gamma0(model, point, options.n_ode_steps, options.eps_sigma)) {
        std::ostringstream os;
        os << who << ": point (t=" << point.t0 << ", x=" << point.x0
           << ") is outside Gamma^0 (volatility vanishes along the characteristic); Z = 0 there";
        throw OutsideGammaZeroError(os.str());
    }
}

}  // namespace

double z_score(const Estimate& a, const Estimate& b) {
    const double diff = std::abs(a.mean - b.mean);
    const double se = std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
    if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / se;
}

Estimate estimate_u(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                    const McOptions& options, const ValueProvider* provider) {
    check_options(options);
    check_grid(model, point, grid);
    require_provider_for_driver(model, provider, "estimate_u");
    const CoefficientModel m = transformed_drift(model);
    const double dt = grid.dt();
    return run_paths(m, point, grid, options, [&](const PathBundle& path) {
        const int n = grid.n_steps;
        double value = m.g(path.X[n]);
        if (m.has_f1()) {
            double integral = 0.0;
            for (int k = 0; k < n; ++k) integral += driver_at(m, provider, grid.time(k), path.X[k]);
            value += integral * dt;
        }
        return PathOutcome{value};
    });
}

Estimate estimate_ux_pathwise(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                              const McOptions& options, const ValueProvider* provider) {
    check_options(options);
    check_grid(model, point, grid);
    if (!model.g_prime) {
        throw ValidationError("estimate_ux_pathwise: model '" + model.name + "' has no payoff derivative");
    }
    const bool needs_ux = model.has_f1() && model.f1_depends_on_y;
    if (needs_ux && (provider == nullptr || !provider->has_ux() || !provider->u_eval)) {
        throw ValidationError("estimate_ux_pathwise: driver depends on y; provider with u and u_x is required");
    }
    if (model.has_f1() && (!model.f1_x || (needs_ux && !model.f1_y))) {
        throw ValidationError("estimate_ux_pathwise: driver partials missing; finalize the model first");
    }
    const CoefficientModel m = transformed_drift(model);
    const double dt = grid.dt();
    return run_paths(m, point, grid, options, [&](const PathBundle& path) {
        const int n = grid.n_steps;
        double value = m.g_prime(path.X[n]) * path.gradX[n];
        if (m.has_f1()) {
            double integral = 0.0;
            for (int k = 0; k < n; ++k) {
                const double t = grid.time(k);
                const double x = path.X[k];
                const double y = needs_ux ? provider->u_eval(t, x) : 0.0;
                double term = m.f1_x(t, x, y) * path.gradX[k];
                if (needs_ux) term += m.f1_y(t, x, y) * provider->ux_eval(t, x) * path.gradX[k];
                integral += term;
            }
            value += integral * dt;
        }
        return PathOutcome{value};
    });
}

Estimate estimate_ux_weighted(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                              const McOptions& options, WeightKind kind, const ValueProvider* provider) {
    check_options(options);
    check_grid(model, point, grid);
    require_provider_for_driver(model, provider, "estimate_ux_weighted");
    require_gamma0(model, point, options, "estimate_ux_weighted");
    const CoefficientModel m = transformed_drift(model);
    const double dt = grid.dt();
    const double floor = kind == WeightKind::degenerate
                             ? options.lambda_floor.value_or(default_lambda_floor(dt, options.eps_sigma))
                             : options.sigma_floor.value_or(options.eps_sigma);
    return run_paths(m, point, grid, options, [&](const PathBundle& path) {
        const int n = grid.n_steps;
        PathOutcome out;
        if (!m.has_f1()) {
            const WeightSample w = kind == WeightKind::degenerate ? degenerate_weight(path, n, floor)
                                                                  : nondegenerate_weight(path, n, floor);
            if (w.floored) {
                out.status = PathStatus::floored;
                return out;
            }
            out.value = m.g(path.X[n]) * clip(*w.value, options.weight_cap, out.capped);
            return out;
        }
        const auto series = weight_series(path, kind, floor);
        if (series[n].floored) {
            out.status = PathStatus::floored;
            return out;
        }
        double integral = 0.0;
        for (int k = 1; k < n; ++k) {
            if (series[k].floored) continue;
            const double t = grid.time(k);
            integral += driver_at(m, provider, t, path.X[k]) * clip(*series[k].value, options.weight_cap, out.capped);
        }
        out.value = m.g(path.X[n]) * clip(*series[n].value, options.weight_cap, out.capped) + integral * dt;
        return out;
    });
}

Estimate empirical_lambda_moment(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                                 const McOptions& options, double p) {
    check_options(options);
    check_grid(model, point, grid);
    if (!(p > 0.0)) throw ValidationError("empirical_lambda_moment: p must be positive");
    require_gamma0(model, point, options, "empirical_lambda_moment");
    const CoefficientModel m = transformed_drift(model);
    const double floor = options.lambda_floor.value_or(default_lambda_floor(grid.dt(), options.eps_sigma));
    return run_paths(m, point, grid, options, [&](const PathBundle& path) {
        const double lambda = path.Lambda[grid.n_steps];
        if (!(lambda >= floor) || lambda <= 0.0) return PathOutcome{0.0, PathStatus::floored};
        return PathOutcome{std::pow(lambda, -p)};
    });
}

ZPath reconstruct_Z(const CoefficientModel& model, const PathBundle& path, const ValueProvider& provider,
                    double eps_sigma, int n_ode_steps, GammaZeroCache* cache) {
    if (!provider.has_ux()) {
        throw ValidationError("reconstruct_Z: provider must supply u_x");
    }
    const int tau_index = locate_tau_index(model, path, n_ode_steps, eps_sigma, cache);
    const int n = path.grid.n_steps;
    ZPath out;
    out.exited = tau_index <= n;
    out.tau = out.exited ? path.grid.time(tau_index) : path.grid.T;
    out.samples.resize(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        const double t = path.grid.time(k);
        out.samples[k].t = t;
        out.samples[k].z = k < tau_index ? provider.ux_eval(t, path.X[k]) * model.sigma(t, path.X[k]) : 0.0;
    }
    return out;
}

ValueProvider make_grid_provider(std::vector<double> times, std::vector<double> xs,
                                 std::vector<std::vector<double>> values) {
    if (times.empty() || xs.size() < 2 || values.size() != times.size()) {
        throw ValidationError("make_grid_provider: need at least one time, two nodes and matching values");
    }
    for (const auto& row : values) {
        if (row.size() != xs.size()) throw ValidationError("make_grid_provider: ragged values");
    }
    if (!std::is_sorted(times.begin(), times.end()) || !std::is_sorted(xs.begin(), xs.end())) {
        throw ValidationError("make_grid_provider: grids must be increasing");
    }
    struct Table {
        std::vector<double> times, xs;
        std::vector<std::vector<double>> values;

        [[nodiscard]] std::size_t level(double t) const {
            auto it = std::lower_bound(times.begin(), times.end(), t);
            if (it == times.begin()) return 0;
            if (it == times.end()) return times.size() - 1;
            const auto hi = static_cast<std::size_t>(it - times.begin());
            return (t - times[hi - 1] <= times[hi] - t) ? hi - 1 : hi;
        }
        [[nodiscard]] std::size_t cell(double x) const {
            auto it = std::upper_bound(xs.begin(), xs.end(), x);
            const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin(), 1));
            return std::min(idx, xs.size() - 1) - 1;
        }
        [[nodiscard]] double u(double t, double x) const {
            const auto& v = values[level(t)];
            if (x <= xs.front()) return v.front();
            if (x >= xs.back()) return v.back();
            const std::size_t j = cell(x);
            const double w = (x - xs[j]) / (xs[j + 1] - xs[j]);
            return (1.0 - w) * v[j] + w * v[j + 1];
        }
        [[nodiscard]] double nodal(const std::vector<double>& v, std::size_t j) const {
            const std::size_t last = xs.size() - 1;
            if (j == 0) return (v[1] - v[0]) / (xs[1] - xs[0]);
            if (j == last) return (v[last] - v[last - 1]) / (xs[last] - xs[last - 1]);
            return (v[j + 1] - v[j - 1]) / (xs[j + 1] - xs[j - 1]);
        }
        [[nodiscard]] double ux(double t, double x) const {
            const auto& v = values[level(t)];
            if (x <= xs.front()) return nodal(v, 0);
            if (x >= xs.back()) return nodal(v, xs.size() - 1);
            const std::size_t j = cell(x);
            const double w = (x - xs[j]) / (xs[j + 1] - xs[j]);
            return (1.0 - w) * nodal(v, j) + w * nodal(v, j + 1);
        }
    };
    auto table = std::make_shared<const Table>(Table{std::move(times), std::move(xs), std::move(values)});
    return ValueProvider{[table](double t, double x) { return table->u(t, x); },
                         [table](double t, double x) { return table->ux(t, x); }};
}

PicardResult picard_value_iteration(const CoefficientModel& model, const std::vector<double>& space_grid,
                                    const TimeGrid& time_grid, const McOptions& options, int k_max, double tol) {
    if (k_max < 1) throw ValidationError("picard_value_iteration: k_max must be >= 1");
    if (!(tol > 0.0)) throw ValidationError("picard_value_iteration: tol must be positive");
    if (space_grid.size() < 2) throw ValidationError("picard_value_iteration: need at least two space nodes");
    if (time_grid.T != model.horizon_T) {
        throw ValidationError("picard_value_iteration: time grid must end at the horizon");
    }
    const CoefficientModel m = transformed_drift(model);
    const int n_t = time_grid.n_steps;
    PicardResult result;
    result.xs = space_grid;
    for (int i = 0; i <= n_t; ++i) result.times.push_back(time_grid.time(i));
    std::vector<std::vector<double>> current(result.times.size(), std::vector<double>(space_grid.size(), 0.0));
    ValueProvider provider = make_grid_provider(result.times, result.xs, current);

    const bool coupled = m.has_f1() && m.f1_depends_on_y;
    double prev_change = 0.0;
    for (int iter = 1; iter <= k_max; ++iter) {
        std::vector<std::vector<double>> next(current.size(), std::vector<double>(space_grid.size(), 0.0));
        for (int i = 0; i <= n_t; ++i) {
            for (std::size_t j = 0; j < space_grid.size(); ++j) {
                if (i == n_t) {
                    next[i][j] = m.g(space_grid[j]);
                    continue;
                }
                const TimeGrid sub(result.times[i], m.horizon_T, n_t - i);
                next[i][j] = estimate_u(m, {result.times[i], space_grid[j]}, sub, options, &provider).mean;
            }
        }
        double change = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            for (std::size_t j = 0; j < next[i].size(); ++j) change = std::max(change, std::abs(next[i][j] - current[i][j]));
        }
        current = std::move(next);
        provider = make_grid_provider(result.times, result.xs, current);
        result.iterations = iter;
        result.final_change = change;
        result.contraction_ratio = (iter > 1 && prev_change > 0.0) ? change / prev_change : 0.0;
        prev_change = change;
        if (!coupled || change < tol) {
            result.converged = true;
            break;
        }
    }
    result.values = std::move(current);
    result.provider = std::move(provider);
    return result;
}

}  // namespace fbsde
