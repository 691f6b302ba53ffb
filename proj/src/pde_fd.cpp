#include "fbsde/pde_fd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "fbsde/csv.hpp"
#include "fbsde/errors.hpp"

namespace fbsde {

namespace {

constexpr double kCflSafety = 0.9;
constexpr int kCflTimeSamples = 257;

void validate_grid(const PdeGrid& grid) {
    if (!(grid.x_min < grid.x_max) || grid.n_x < 3) {
        throw ValidationError("PdeGrid: need x_min < x_max and n_x >= 3");
    }
    if (!(grid.t0 < grid.T)) {
        throw ValidationError("PdeGrid: need t0 < T");
    }
}

}  // namespace

CflReport cfl_check(const CoefficientModel& model, const PdeGrid& grid) {
    validate_grid(grid);
    CflReport report;
    const CoefficientModel m = transformed_drift(model);
    const double dx = grid.dx();
    const int n_levels = std::max(1, std::min(grid.n_t, kCflTimeSamples - 1));
    for (int k = 0; k <= n_levels; ++k) {
        const double t = grid.t0 + (grid.T - grid.t0) * k / n_levels;
        for (int i = 0; i < grid.n_x; ++i) {
            const double x = grid.node(i);
            const double s = m.sigma(t, x);
            report.max_sigma_sq = std::max(report.max_sigma_sq, s * s);
            report.max_abs_drift = std::max(report.max_abs_drift, std::abs(m.b(t, x)));
        }
    }
    const double denom = report.max_sigma_sq + dx * report.max_abs_drift;
    report.dt_max = denom > 0.0 ? kCflSafety * dx * dx / denom : std::numeric_limits<double>::infinity();
    report.dt = grid.n_t >= 1 ? grid.dt() : 0.0;
    report.ok = grid.n_t >= 1 && report.dt > 0.0 && report.dt <= report.dt_max;
    return report;
}

PdeGrid make_pde_grid(const CoefficientModel& model, double x_lo, double x_hi, double dx, double t0) {
    if (!(x_lo < x_hi) || !(dx > 0.0)) {
        throw ValidationError("make_pde_grid: need x_lo < x_hi and dx > 0");
    }
    if (!(t0 >= 0.0 && t0 < model.horizon_T)) {
        throw ValidationError("make_pde_grid: t0 must lie in [0, T)");
    }
    // Anchor the lattice at (jump + dx/2) so no node lands on the jump.
    const double anchor = model.payoff_jumps.empty() ? x_lo : model.payoff_jumps.front() + 0.5 * dx;
    const double i_lo = std::floor((x_lo - anchor) / dx);
    const double i_hi = std::ceil((x_hi - anchor) / dx);
    PdeGrid grid;
    grid.x_min = anchor + i_lo * dx;
    grid.n_x = static_cast<int>(i_hi - i_lo) + 1;
    grid.x_max = anchor + i_hi * dx;
    grid.t0 = t0;
    grid.T = model.horizon_T;
    grid.n_t = 1;
    const CflReport probe = cfl_check(model, grid);
    if (std::isfinite(probe.dt_max)) {
        const double steps = std::ceil((grid.T - t0) / probe.dt_max);
        if (steps > 1.0e9) throw ValidationError("make_pde_grid: CFL bound needs too many time steps");
        grid.n_t = std::max(1, static_cast<int>(steps));
    }
    // Sampled maxima may move when n_t changes the sample times; tighten until the check passes.
    for (int guard = 0; guard < 8 && !cfl_check(model, grid).ok; ++guard) {
        grid.n_t = static_cast<int>(std::ceil(grid.n_t * 1.05)) + 1;
    }
    return grid;
}

PdeSolution::PdeSolution(PdeGrid grid, std::vector<int> levels, std::vector<std::vector<double>> values)
    : grid_(grid), levels_(std::move(levels)), values_(std::move(values)) {
    if (levels_.empty() || levels_.size() != values_.size()) {
        throw ValidationError("PdeSolution: levels and values disagree");
    }
    times_.reserve(levels_.size());
    for (int m : levels_) times_.push_back(grid_.level_time(m));
}

std::size_t PdeSolution::nearest_level(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 0;
    if (it == times_.end()) return times_.size() - 1;
    const auto hi = static_cast<std::size_t>(it - times_.begin());
    return (t - times_[hi - 1] <= times_[hi] - t) ? hi - 1 : hi;
}

double PdeSolution::u(double t, double x) const {
    const auto& v = values_[nearest_level(t)];
    if (x <= grid_.x_min) return v.front();
    if (x >= grid_.x_max) return v.back();
    const double pos = (x - grid_.x_min) / grid_.dx();
    const int i = std::min(static_cast<int>(pos), grid_.n_x - 2);
    const double w = pos - i;
    return (1.0 - w) * v[i] + w * v[i + 1];
}

double PdeSolution::nodal_ux(std::size_t stored_index, int i) const {
    const auto& v = values_.at(stored_index);
    const double dx = grid_.dx();
    const int n = grid_.n_x;
    if (i <= 0) return (v[1] - v[0]) / dx;
    if (i >= n - 1) return (v[n - 1] - v[n - 2]) / dx;
    return (v[i + 1] - v[i - 1]) / (2.0 * dx);
}

double PdeSolution::u_x(double t, double x) const {
    const std::size_t level = nearest_level(t);
    if (x <= grid_.x_min) return nodal_ux(level, 0);
    if (x >= grid_.x_max) return nodal_ux(level, grid_.n_x - 1);
    const double pos = (x - grid_.x_min) / grid_.dx();
    const int i = std::min(static_cast<int>(pos), grid_.n_x - 2);
    const double w = pos - i;
    return (1.0 - w) * nodal_ux(level, i) + w * nodal_ux(level, i + 1);
}

ValueProvider PdeSolution::as_provider() const {
    auto self = std::make_shared<const PdeSolution>(*this);
    return ValueProvider{[self](double t, double x) { return self->u(t, x); },
                         [self](double t, double x) { return self->u_x(t, x); }};
}

void PdeSolution::write_csv(std::ostream& os) const {
    csv::write_row(os, {"t", "x", "u", "ux"});
    for (std::size_t l = 0; l < levels_.size(); ++l) {
        for (int i = 0; i < grid_.n_x; ++i) {
            csv::write_row(os, {times_[l], grid_.node(i), values_[l][i], nodal_ux(l, i)});
        }
    }
}

PdeSolution solve_fd(const CoefficientModel& model, const PdeGrid& grid, const FdOptions& options) {
    validate_grid(grid);
    const CflReport cfl = cfl_check(model, grid);
    if (!cfl.ok) {
        std::ostringstream os;
        os << "solve_fd: CFL violated, dt=" << cfl.dt << " exceeds admissible " << cfl.dt_max;
        throw NumericalError(os.str());
    }
    if (options.max_stored_levels < 2) {
        throw ValidationError("solve_fd: max_stored_levels must be >= 2");
    }
    const CoefficientModel m = transformed_drift(model);
    const int n = grid.n_x;
    const int n_t = grid.n_t;
    const double dx = grid.dx();
    const double dt = grid.dt();
    const double inv_dx = 1.0 / dx;
    const double inv_dx2 = 1.0 / (dx * dx);

    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[i] = grid.node(i);

    const int stride = (n_t + options.max_stored_levels - 2) / (options.max_stored_levels - 1);
    std::vector<int> levels;
    std::vector<std::vector<double>> stored;

    std::vector<double> cur(static_cast<std::size_t>(n));
    std::vector<double> next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cur[i] = m.g(xs[i]);
    auto keep = [&](int level) {
        if (level == n_t || level % stride == 0) {
            levels.push_back(level);
            stored.push_back(cur);
        }
    };
    keep(n_t);

    for (int level = n_t - 1; level >= 0; --level) {
        const double t = grid.level_time(level + 1);
        for (int i = 0; i < n; ++i) {
            const double s = m.sigma(t, xs[i]);
            const double drift = m.b(t, xs[i]);
            double rhs = 0.0;
            if (i > 0 && i < n - 1) {
                rhs += 0.5 * s * s * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) * inv_dx2;
            }
            if (drift > 0.0 && i < n - 1) {
                rhs += drift * (cur[i + 1] - cur[i]) * inv_dx;
            } else if (drift < 0.0 && i > 0) {
                rhs += drift * (cur[i] - cur[i - 1]) * inv_dx;
            }
            if (m.has_f1()) rhs += m.f1(t, xs[i], cur[i]);
            next[i] = cur[i] + dt * rhs;
            if (!std::isfinite(next[i])) {
                throw NumericalError("solve_fd: non-finite value at level " + std::to_string(level));
            }
        }
        std::swap(cur, next);
        keep(level);
    }
    std::reverse(levels.begin(), levels.end());
    std::reverse(stored.begin(), stored.end());
    return PdeSolution(grid, std::move(levels), std::move(stored));
}

}  // namespace fbsde
