#include "fbsde/degeneracy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fbsde/errors.hpp"

namespace fbsde {

namespace {

constexpr double kCacheResolution = 1e-10;

double rk4_step(const CoefficientModel& model, double s, double eta, double h) {
    const double k1 = model.b(s, eta);
    const double k2 = model.b(s + 0.5 * h, eta + 0.5 * h * k1);
    const double k3 = model.b(s + 0.5 * h, eta + 0.5 * h * k2);
    const double k4 = model.b(s + h, eta + h * k3);
    return eta + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_steps(int n_ode_steps) {
    if (n_ode_steps < 1) {
        throw ValidationError("characteristic: n_ode_steps must be >= 1");
    }
}

}  // namespace

CharacteristicPath characteristic(const CoefficientModel& model, const ProblemPoint& point, int n_ode_steps) {
    check_steps(n_ode_steps);
    validate_point(model, point);
    CharacteristicPath path;
    if (point.t0 >= model.horizon_T) {
        path.grid.t0 = model.horizon_T;
        path.grid.T = model.horizon_T;
        path.grid.n_steps = 0;
        path.eta = {point.x0};
        return path;
    }
    path.grid = TimeGrid(point.t0, model.horizon_T, n_ode_steps);
    path.eta.resize(static_cast<std::size_t>(n_ode_steps) + 1);
    path.eta[0] = point.x0;
    const double h = path.grid.dt();
    for (int k = 0; k < n_ode_steps; ++k) {
        const double next = rk4_step(model, path.grid.time(k), path.eta[k], h);
        if (!std::isfinite(next)) {
            throw NumericalError("characteristic: non-finite value at step " + std::to_string(k));
        }
        path.eta[k + 1] = next;
    }
    return path;
}

int smallest_gamma_index(double value) {
    if (!(value > 0.0)) {
        throw ValidationError("smallest_gamma_index: value must be positive");
    }
    if (value >= 1.0) return 1;
    const double inv = 1.0 / value;
    if (inv > 2.0e9) {
        throw NumericalError("smallest_gamma_index: value too small");
    }
    auto n = static_cast<int>(std::ceil(inv));
    while (n > 1 && 1.0 / (n - 1) <= value) --n;
    while (1.0 / n > value) ++n;
    return n;
}

DegeneracyReport gamma_report(const CoefficientModel& model, const ProblemPoint& point, int n_ode_steps,
                              double eps_sigma) {
    if (!(eps_sigma > 0.0)) {
        throw ValidationError("gamma_report: eps_sigma must be positive");
    }
    const CharacteristicPath path = characteristic(model, point, n_ode_steps);
    DegeneracyReport report;
    report.point = point;
    double mx = 0.0;
    for (std::size_t k = 0; k < path.eta.size(); ++k) {
        const double s = path.grid.n_steps == 0 ? path.grid.T : path.grid.time(static_cast<int>(k));
        mx = std::max(mx, std::abs(model.sigma(s, path.eta[k])));
    }
    report.max_sigma_on_characteristic = mx;
    report.in_Gamma = std::abs(model.sigma(point.t0, point.x0)) > eps_sigma;
    report.in_Gamma0 = mx > eps_sigma;
    if (report.in_Gamma0) report.n_index = smallest_gamma_index(mx);
    return report;
}

std::optional<GammaZeroCache::Key> GammaZeroCache::make_key(double t, double x) {
    const double ticks = std::round(x / kCacheResolution);
    if (!(std::abs(ticks) < 9.0e18)) return std::nullopt;
    return Key{std::bit_cast<std::uint64_t>(t), static_cast<long long>(ticks)};
}

std::optional<bool> GammaZeroCache::find(double t, double x) const {
    const auto key = make_key(t, x);
    if (!key) return std::nullopt;
    std::lock_guard lock(mutex_);
    auto it = map_.find(*key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

void GammaZeroCache::insert(double t, double x, bool inside) {
    const auto key = make_key(t, x);
    if (!key) return;
    std::lock_guard lock(mutex_);
    map_.emplace(*key, inside);
}

std::size_t GammaZeroCache::size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
}

bool in_gamma0(const CoefficientModel& model, const ProblemPoint& point, int n_ode_steps, double eps_sigma,
               GammaZeroCache* cache) {
    check_steps(n_ode_steps);
    if (cache) {
        if (auto hit = cache->find(point.t0, point.x0)) return *hit;
    }
    bool inside = false;
    if (std::abs(model.sigma(point.t0, point.x0)) > eps_sigma) {
        inside = true;
    } else if (point.t0 < model.horizon_T) {
        const TimeGrid grid(point.t0, model.horizon_T, n_ode_steps);
        const double h = grid.dt();
        double eta = point.x0;
        for (int k = 0; k < n_ode_steps && !inside; ++k) {
            eta = rk4_step(model, grid.time(k), eta, h);
            if (!std::isfinite(eta)) {
                throw NumericalError("in_gamma0: non-finite characteristic");
            }
            inside = std::abs(model.sigma(grid.time(k + 1), eta)) > eps_sigma;
        }
    }
    if (cache) cache->insert(point.t0, point.x0, inside);
    return inside;
}

int locate_tau_index(const CoefficientModel& model, const PathBundle& path, int n_ode_steps, double eps_sigma,
                     GammaZeroCache* cache) {
    if (!path.valid) {
        throw ValidationError("locate_tau: path is invalid");
    }
    const int n = path.grid.n_steps;
    for (int k = 0; k <= n; ++k) {
        if (!in_gamma0(model, {path.grid.time(k), path.X[k]}, n_ode_steps, eps_sigma, cache)) return k;
    }
    return n + 1;
}

double locate_tau(const CoefficientModel& model, const PathBundle& path, int n_ode_steps, double eps_sigma,
                  GammaZeroCache* cache) {
    const int k = locate_tau_index(model, path, n_ode_steps, eps_sigma, cache);
    return k > path.grid.n_steps ? path.grid.T : path.grid.time(k);
}

GammaEquivalenceReport check_gamma_equivalence(const CoefficientModel& model,
                                               const std::vector<ProblemPoint>& sample_points, int n_ode_steps,
                                               double eps_sigma) {
    const CoefficientModel tilde = transformed_drift(model);
    GammaEquivalenceReport report;
    report.n_points = sample_points.size();
    bool first_ratio = true;
    for (const auto& p : sample_points) {
        auto a = gamma_report(model, p, n_ode_steps, eps_sigma);
        auto b = gamma_report(tilde, p, n_ode_steps, eps_sigma);
        if (a.in_Gamma0 == b.in_Gamma0) ++report.n_agree;
        if (a.n_index && b.n_index) {
            ++report.n_both;
            const double ratio = static_cast<double>(*b.n_index) / static_cast<double>(*a.n_index);
            if (first_ratio) {
                report.max_n_ratio = report.min_n_ratio = ratio;
                first_ratio = false;
            } else {
                report.max_n_ratio = std::max(report.max_n_ratio, ratio);
                report.min_n_ratio = std::min(report.min_n_ratio, ratio);
            }
        }
        report.original.push_back(std::move(a));
        report.transformed.push_back(std::move(b));
    }
    report.agreement_fraction =
        report.n_points == 0 ? 1.0 : static_cast<double>(report.n_agree) / static_cast<double>(report.n_points);
    return report;
}

}  // namespace fbsde
