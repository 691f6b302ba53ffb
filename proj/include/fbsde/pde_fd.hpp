#pragma once

#include <iosfwd>
#include <vector>

#include "fbsde/model.hpp"
#include "fbsde/value_provider.hpp"

namespace fbsde {

/// Uniform space-time grid for the explicit scheme. Nodes are x_min + i dx.
struct PdeGrid {
    double x_min = -1.0;
    double x_max = 1.0;
    int n_x = 3;
    double t0 = 0.0;
    double T = 1.0;
    int n_t = 1;

    [[nodiscard]] double dx() const noexcept { return (x_max - x_min) / (n_x - 1); }
    [[nodiscard]] double dt() const noexcept { return (T - t0) / n_t; }
    [[nodiscard]] double node(int i) const noexcept { return i == n_x - 1 ? x_max : x_min + i * dx(); }
    [[nodiscard]] double level_time(int m) const noexcept { return m >= n_t ? T : t0 + (T - t0) * m / n_t; }
};

struct CflReport {
    bool ok = false;
    double dt = 0.0;
    double dt_max = 0.0;  ///< largest admissible step (infinite for a zero operator)
    double max_sigma_sq = 0.0;
    double max_abs_drift = 0.0;
};

/// Stability and monotonicity bound dt <= 0.9 dx^2 / (max sigma^2 + dx max|b~|),
/// maxima over nodes and (up to 257) sampled time levels.
CflReport cfl_check(const CoefficientModel& model, const PdeGrid& grid);

/**
 * Grid covering [x_lo, x_hi] with spacing about dx, shifted so the first
 * registered payoff jump sits half-way between two nodes, and with n_t the
 * smallest step count passing cfl_check.
 */
PdeGrid make_pde_grid(const CoefficientModel& model, double x_lo, double x_hi, double dx, double t0 = 0.0);

/// Backward-in-time values on a subset of levels (always the first and last).
class PdeSolution {
public:
    PdeSolution(PdeGrid grid, std::vector<int> levels, std::vector<std::vector<double>> values);

    [[nodiscard]] const PdeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<int>& stored_levels() const noexcept { return levels_; }
    [[nodiscard]] const std::vector<double>& level_values(std::size_t stored_index) const { return values_.at(stored_index); }
    [[nodiscard]] std::size_t stored_level_count() const noexcept { return levels_.size(); }

    /// Index into stored_levels() nearest to t.
    [[nodiscard]] std::size_t nearest_level(double t) const;

    /// Linear in x (flat outside the grid), nearest stored level in t.
    [[nodiscard]] double u(double t, double x) const;
    /// Nodal centred differences (one-sided at the ends) interpolated linearly in x.
    [[nodiscard]] double u_x(double t, double x) const;
    /// Nodal derivative at stored level `stored_index`, node i.
    [[nodiscard]] double nodal_ux(std::size_t stored_index, int i) const;

    /// Provider that shares ownership of a copy of this solution.
    [[nodiscard]] ValueProvider as_provider() const;

    /// CSV `t,x,u,ux`: stored levels in increasing t, nodes in increasing x.
    void write_csv(std::ostream& os) const;

private:
    PdeGrid grid_;
    std::vector<int> levels_;
    std::vector<double> times_;
    std::vector<std::vector<double>> values_;
};

struct FdOptions {
    int max_stored_levels = 513;
};

/// Explicit upwind scheme for u_t + 1/2 sigma^2 u_xx + b~ u_x + f1(t, x, u) = 0,
/// u(T) = g. Applies transformed_drift when f2 is present. Throws NumericalError
/// on a CFL violation or a non-finite value.
PdeSolution solve_fd(const CoefficientModel& model, const PdeGrid& grid, const FdOptions& options = {});

}  // namespace fbsde
