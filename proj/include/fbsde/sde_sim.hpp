#pragma once

#include <cstdint>
#include <vector>

#include "fbsde/model.hpp"

namespace fbsde {

/// Uniform grid t_k = t0 + k (T - t0) / n_steps with t_{n_steps} == T exactly.
struct TimeGrid {
    double t0 = 0.0;
    double T = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double t0_, double T_, int n_steps_);

    [[nodiscard]] double dt() const noexcept { return (T - t0) / n_steps; }
    [[nodiscard]] double time(int k) const noexcept {
        return k >= n_steps ? T : t0 + (T - t0) * static_cast<double>(k) / n_steps;
    }
};

/**
 * One simulated trajectory and the running sums the Malliavin weights need.
 * All state arrays have n_steps + 1 entries; dW has n_steps.
 *
 *   Lambda_k = sum_{j<k} gamma_j^2 dt
 *   S1_k     = sum_{j<k} gamma_j gradX_j dW_j
 *   B_k      = sum_{j<k} Lambda_j sigma_x(t_j, X_j) gamma_j gradX_j dt
 */
struct PathBundle {
    TimeGrid grid;
    std::vector<double> dW;
    std::vector<double> X;
    std::vector<double> gradX;
    std::vector<double> gamma;
    std::vector<double> Lambda;
    std::vector<double> S1;
    std::vector<double> B;
    bool valid = true;
};

/// Euler-Maruyama for X and the exponential scheme for the tangent flow.
/// Requires grid.t0 == point.t0 and grid.T == model.horizon_T.
PathBundle simulate_path(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                         std::uint64_t seed, std::uint64_t path_index);

/// Same as simulate_path, reusing the storage of `out`.
void simulate_path_into(PathBundle& out, const CoefficientModel& model, const ProblemPoint& point,
                        const TimeGrid& grid, std::uint64_t seed, std::uint64_t path_index);

/// Paths 0..n_paths-1. Throws NumericalError if more than 1% are invalid.
std::vector<PathBundle> simulate_batch(const CoefficientModel& model, const ProblemPoint& point,
                                       const TimeGrid& grid, std::uint64_t seed, std::size_t n_paths,
                                       unsigned workers = 1);

/// Fraction of invalid paths above which a batch is rejected.
inline constexpr double kMaxInvalidFraction = 0.01;

}  // namespace fbsde
