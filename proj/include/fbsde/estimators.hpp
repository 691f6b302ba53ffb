#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fbsde/degeneracy.hpp"
#include "fbsde/model.hpp"
#include "fbsde/sde_sim.hpp"
#include "fbsde/value_provider.hpp"
#include "fbsde/weights.hpp"

namespace fbsde {

/// Fraction of floored paths above which an estimate is flagged unreliable.
inline constexpr double kMaxFlooredFraction = 0.05;

struct McOptions {
    std::uint64_t seed = 0;
    std::size_t n_paths = 10000;
    unsigned workers = 1;
    double eps_sigma = kDefaultEpsSigma;
    int n_ode_steps = 200;
    std::optional<double> lambda_floor;  ///< default dt * eps_sigma^2
    std::optional<double> sigma_floor;   ///< nondegenerate weight; default eps_sigma
    std::optional<double> weight_cap;    ///< |N| clipped to this when set
};

struct Estimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n_used = 0;
    std::size_t n_floored = 0;
    std::size_t n_invalid = 0;
    std::size_t n_capped = 0;
    bool reliable = true;
};

/// |a - b| / sqrt(se_a^2 + se_b^2); zero when both are exact and equal.
double z_score(const Estimate& a, const Estimate& b);

/// Y at the point: mean of g(X_T) + sum_k f1(t_k, X_k, y_k) dt under the drift b + f2 sigma.
Estimate estimate_u(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                    const McOptions& options, const ValueProvider* provider = nullptr);

/// u_x through the tangent flow: g'(X_T) gradX_T + sum_k [f1_x gradX_k + f1_y u_x gradX_k] dt.
Estimate estimate_ux_pathwise(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                              const McOptions& options, const ValueProvider* provider = nullptr);

/// u_x through a Malliavin weight: g(X_T) N_T + sum_k f1(t_k, X_k, y_k) N_{t_k} dt.
/// Throws OutsideGammaZeroError when the point is not in Gamma^0.
Estimate estimate_ux_weighted(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                              const McOptions& options, WeightKind kind, const ValueProvider* provider = nullptr);

/// Mean of Lambda_T^{-p}. Throws OutsideGammaZeroError outside Gamma^0.
Estimate empirical_lambda_moment(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                                 const McOptions& options, double p);

struct ZSample {
    double t = 0.0;
    double z = 0.0;
};

struct ZPath {
    double tau = 0.0;    ///< T when the path never leaves Gamma^0
    bool exited = false; ///< whether a grid time outside Gamma^0 was found
    std::vector<ZSample> samples;
};

/// Z_k = u_x(t_k, X_k) sigma(t_k, X_k) before tau and 0 from tau on.
ZPath reconstruct_Z(const CoefficientModel& model, const PathBundle& path, const ValueProvider& provider,
                    double eps_sigma = kDefaultEpsSigma, int n_ode_steps = 200, GammaZeroCache* cache = nullptr);

/// Tabulated u on (time grid) x (space grid): nearest time, linear in x, centred-difference u_x.
ValueProvider make_grid_provider(std::vector<double> times, std::vector<double> xs,
                                 std::vector<std::vector<double>> values);

struct PicardResult {
    ValueProvider provider;
    std::vector<double> times;
    std::vector<double> xs;
    std::vector<std::vector<double>> values;  ///< values[i][j] at (times[i], xs[j])
    int iterations = 0;
    bool converged = false;
    double final_change = 0.0;
    double contraction_ratio = 0.0;  ///< last change over the one before; 0 when undefined
};

/// Fixed-point iteration u^{k+1} = estimate_u(..., provider = u^k) on a grid, from u^0 = 0.
PicardResult picard_value_iteration(const CoefficientModel& model, const std::vector<double>& space_grid,
                                    const TimeGrid& time_grid, const McOptions& options, int k_max, double tol);

}  // namespace fbsde
