#pragma once

#include <vector>

namespace fbsde::oracles {

/// Blow-up example parameters; valid iff 0 < alpha < 1 and 0 < beta < alpha / (2 (1 - alpha)).
struct Example1Params {
    double alpha = 0.8;
    double beta = 0.5;

    /// Throws ValidationError when the open-interval constraints fail.
    void validate() const;
};

/// Nodes and weights of a Gauss rule.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Hermite rule for weight exp(-z^2) on R (Golub-Welsch).
QuadratureRule gauss_hermite(int n);

/// Gauss-Jacobi rule for weight (1-s)^a (1+s)^b on [-1, 1] (Golub-Welsch).
QuadratureRule gauss_jacobi(int n, double a, double b);

double normal_pdf(double z);
double normal_cdf(double z);

/// E|N(0,1)|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi).
double gaussian_abs_moment(double p);

/// Terminal variance of the blow-up example seen from t: (1-t)^{1+2 beta} / (1 + 2 beta); zero for t >= 1.
double example1_sigma0_sq(double t, const Example1Params& params);

/**
 * u(t, x) for the blow-up example. For t >= 1 this is g(x) = x / |x|^alpha.
 * For t < 1 it is the Gaussian convolution of g. Near the kink the integral is
 * split at y = 0 into mirrored half-line pieces with the |y|^{1-alpha} factor
 * carried by a Gauss-Jacobi weight; far from the kink Gauss-Hermite around x is used.
 */
double example1_u(double t, double x, const Example1Params& params, int n_quad = 128);

/// u_x(t, 0) = sigma0^{-alpha} E|N|^{2-alpha}; requires t < 1.
double example1_ux_at_zero(double t, const Example1Params& params);

/// Exponent of (u_x sigma)(t, 0) in (1 - t): beta (1 - alpha) - alpha / 2.
double example1_z_exponent(const Example1Params& params);

/// Exponent of u_x(t, 0) in (1 - t): -alpha (1 + 2 beta) / 2.
double example1_ux_exponent(const Example1Params& params);

struct DigitalValue {
    double u = 0.0;
    double ux = 0.0;
};

/// Digital payoff under constant volatility and zero drift: u = Phi(d), u_x = phi(d)/s,
/// d = (x - strike)/s, s = sigma_bar sqrt(T - t). Requires t < T.
DigitalValue bachelier_digital(double t, double x, double sigma_bar, double strike, double T);

}  // namespace fbsde::oracles
