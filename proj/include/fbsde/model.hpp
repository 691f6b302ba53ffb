#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fbsde {

using SpaceTimeFn = std::function<double(double t, double x)>;
using DriverFn = std::function<double(double t, double x, double y)>;
using PayoffFn = std::function<double(double x)>;

/**
 * Coefficients of a one-dimensional decoupled FBSDE
 *
 *   dX = b(t,X) dt + sigma(t,X) dW,
 *   dY = -[f1(t,X,Y) + f2(t,X) Z] dt + Z dW,   Y_T = g(X_T).
 *
 * sigma, b and g are mandatory. An empty f1 or f2 means the term is
 * identically zero; estimators take fast paths on that. Empty derivative
 * slots are filled by `finalize_model` with central differences.
 */
struct CoefficientModel {
    std::string name;

    SpaceTimeFn sigma;
    SpaceTimeFn sigma_x;
    SpaceTimeFn b;
    SpaceTimeFn b_x;

    DriverFn f1;
    DriverFn f1_x;
    DriverFn f1_y;
    bool f1_depends_on_y = false;

    SpaceTimeFn f2;
    SpaceTimeFn f2_x;

    PayoffFn g;
    PayoffFn g_prime;  ///< empty unless the payoff is differentiable

    /// Points where g jumps or kinks; finite-difference grids avoid putting nodes on them.
    std::vector<double> payoff_jumps;
    /// Times where sigma is discontinuous in t; excluded from the Hoelder check.
    std::vector<double> sigma_time_jumps;

    double lipschitz_K = 1.0;
    double holder_alpha = 1.0;
    double holder_C = 1.0;
    double psi_K = 2.0;
    double psi_p0 = 1.0;
    double horizon_T = 1.0;

    [[nodiscard]] bool has_f1() const noexcept { return static_cast<bool>(f1); }
    [[nodiscard]] bool has_f2() const noexcept { return static_cast<bool>(f2); }

    [[nodiscard]] double eval_f1(double t, double x, double y) const { return f1 ? f1(t, x, y) : 0.0; }
    [[nodiscard]] double eval_f2(double t, double x) const { return f2 ? f2(t, x) : 0.0; }

    /// Growth envelope psi(x) = psi_K (1 + |x|^psi_p0).
    [[nodiscard]] double psi(double x) const;
};

struct ProblemPoint {
    double t0 = 0.0;
    double x0 = 0.0;
};

using ParamMap = std::map<std::string, double, std::less<>>;

struct ModelSpec {
    std::string name;
    ParamMap params;
    std::string base;  ///< wrapped model for girsanov_const
};

/// Names accepted by `builtin_model`.
const std::vector<std::string>& builtin_model_names();

/// Builds a registered model. Throws ValidationError on an unknown name, an
/// unknown or missing parameter, or a parameter outside its admissible range.
CoefficientModel builtin_model(const ModelSpec& spec);
CoefficientModel builtin_model(std::string_view name, const ParamMap& params = {});

/// Fills missing sigma_x, b_x, f2_x, f1_x, f1_y with central differences
/// (relative step 1e-5) and checks that mandatory fields are present.
CoefficientModel finalize_model(CoefficientModel model);

/// Absorbs the z-linear driver term into the drift: b~ = b + f2 sigma,
/// b~_x = b_x + f2_x sigma + f2 sigma_x, f2 = 0. Identity when f2 is already zero.
CoefficientModel transformed_drift(const CoefficientModel& model);

/// Lower envelope of the time modulus delta(eps) implied by the Hoelder bound.
double holder_delta(const CoefficientModel& model, double eps);

/// Throws ValidationError unless 0 <= t0 <= T.
void validate_point(const CoefficientModel& model, const ProblemPoint& point);

struct InvariantReport {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Samples an n_t x n_x grid over [0,T] x [x_lo,x_hi] and checks boundedness,
/// derivative consistency, the time-Hoelder bound and |g| <= psi.
InvariantReport check_invariants(const CoefficientModel& model, int n_t = 50, int n_x = 50,
                                 double x_lo = -5.0, double x_hi = 5.0);

}  // namespace fbsde
