#pragma once

#include <optional>
#include <vector>

#include "fbsde/sde_sim.hpp"

namespace fbsde {

enum class WeightKind { degenerate, nondegenerate };

/// Weight N_r evaluated at grid time r. `value` is empty exactly when floored.
struct WeightSample {
    double r = 0.0;
    int r_index = 0;
    std::optional<double> value;
    double lambda_at_r = 0.0;
    bool floored = false;
};

/// Default floor on Lambda_r: one step of volatility at the Gamma-threshold.
inline double default_lambda_floor(double dt, double eps_sigma) { return dt * eps_sigma * eps_sigma; }

/**
 * Degenerate weight
 *
 *   N_r = (1/Lambda_r) [ S1_r + (2/Lambda_r) B_r ],
 *
 * defined whenever Lambda_r >= lambda_floor, even where sigma vanishes.
 * On paths whose volatility samples are all equal up to r and B_r == 0 the
 * gamma factors cancel and the weight is evaluated as
 * sum_j gradX_j/gamma_j dW_j / (r - t0), the same sum the nondegenerate weight uses.
 */
WeightSample degenerate_weight(const PathBundle& path, int r_index, double lambda_floor);

/// Nondegenerate weight (1/(r - t0)) sum_{j<r} gradX_j / gamma_j dW_j; floored
/// if some |gamma_j| < sigma_floor.
WeightSample nondegenerate_weight(const PathBundle& path, int r_index, double sigma_floor);

/// Weights at every grid index 1..n_steps (entry 0 is floored by convention).
std::vector<WeightSample> weight_series(const PathBundle& path, WeightKind kind, double floor);

}  // namespace fbsde
