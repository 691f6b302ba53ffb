#include "fbsde/oracles.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "fbsde/errors.hpp"

namespace fbsde::oracles {

namespace {

// Kink-aware quadrature is used while |x| / sigma0 stays below this.
constexpr double kKinkWindow = 8.0;
// Half-line integrals are truncated at |x| + kTailWidth * sigma0.
constexpr double kTailWidth = 10.0;

QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("gauss rule: eigen decomposition failed");
    }
    const auto n = diag.size();
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v0 = solver.eigenvectors()(0, i);
        rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
        rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
    }
    return rule;
}

double g_example1(double x, double alpha) { return x == 0.0 ? 0.0 : x / std::pow(std::abs(x), alpha); }

}  // namespace

void Example1Params::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("example1: alpha must lie in (0, 1)");
    }
    if (!(beta > 0.0 && beta < alpha / (2.0 * (1.0 - alpha)))) {
        throw ValidationError("example1: beta must lie in (0, alpha/(2(1-alpha)))");
    }
}

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw ValidationError("gauss_hermite: n must be >= 1");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(0.5 * k);
    return golub_welsch(diag, off, std::sqrt(std::numbers::pi));
}

QuadratureRule gauss_jacobi(int n, double a, double b) {
    if (n < 1) throw ValidationError("gauss_jacobi: n must be >= 1");
    if (!(a > -1.0 && b > -1.0)) throw ValidationError("gauss_jacobi: exponents must exceed -1");
    const double ab = a + b;
    Eigen::VectorXd diag(n);
    Eigen::VectorXd off(std::max(n - 1, 0));
    diag(0) = (b - a) / (ab + 2.0);
    for (int k = 1; k < n; ++k) {
        const double s = 2.0 * k + ab;
        diag(k) = (b * b - a * a) / (s * (s + 2.0));
        off(k - 1) = std::sqrt(4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0)));
    }
    const double mu0 = std::exp((ab + 1.0) * std::numbers::ln2 + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                std::lgamma(ab + 2.0));
    return golub_welsch(diag, off, mu0);
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double gaussian_abs_moment(double p) {
    if (!(p >= 0.0)) throw ValidationError("gaussian_abs_moment: p must be >= 0");
    return std::exp(0.5 * p * std::numbers::ln2 + std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(std::numbers::pi));
}

double example1_sigma0_sq(double t, const Example1Params& params) {
    if (t >= 1.0) return 0.0;
    const double e = 1.0 + 2.0 * params.beta;
    return std::pow(1.0 - t, e) / e;
}

double example1_u(double t, double x, const Example1Params& params, int n_quad) {
    params.validate();
    if (n_quad < 16) throw ValidationError("example1_u: n_quad must be >= 16");
    if (!(t >= 0.0 && t <= 2.0)) throw ValidationError("example1_u: t must lie in [0, 2]");
    if (t >= 1.0) return g_example1(x, params.alpha);

    const double s0 = std::sqrt(example1_sigma0_sq(t, params));
    const double alpha = params.alpha;
    if (std::abs(x) > kKinkWindow * s0) {
        const auto rule = gauss_hermite(n_quad);
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            acc += rule.weights[i] * g_example1(x + std::numbers::sqrt2 * s0 * rule.nodes[i], alpha);
        }
        return acc / std::sqrt(std::numbers::pi);
    }

    // u = int_0^L y^{1-alpha} [phi_s0(y - x) - phi_s0(y + x)] dy with y = L (1 + s) / 2.
    const double L = std::abs(x) + kTailWidth * s0;
    const auto rule = gauss_jacobi(n_quad, 0.0, 1.0 - alpha);
    const double inv_var = 1.0 / (s0 * s0);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double y = 0.5 * L * (1.0 + rule.nodes[i]);
        const double dm = y - x;
        const double dp = y + x;
        acc += rule.weights[i] * (std::exp(-0.5 * dm * dm * inv_var) - std::exp(-0.5 * dp * dp * inv_var));
    }
    return acc * std::pow(0.5 * L, 2.0 - alpha) / (std::sqrt(2.0 * std::numbers::pi) * s0);
}

double example1_ux_at_zero(double t, const Example1Params& params) {
    params.validate();
    if (!(t < 1.0)) throw ValidationError("example1_ux_at_zero: requires t < 1");
    const double s0 = std::sqrt(example1_sigma0_sq(t, params));
    return std::pow(s0, -params.alpha) * gaussian_abs_moment(2.0 - params.alpha);
}

double example1_z_exponent(const Example1Params& params) {
    params.validate();
    return params.beta * (1.0 - params.alpha) - 0.5 * params.alpha;
}

double example1_ux_exponent(const Example1Params& params) {
    params.validate();
    return -0.5 * params.alpha * (1.0 + 2.0 * params.beta);
}

DigitalValue bachelier_digital(double t, double x, double sigma_bar, double strike, double T) {
    if (!(t < T)) throw ValidationError("bachelier_digital: requires t < T");
    if (!(sigma_bar > 0.0)) throw ValidationError("bachelier_digital: sigma_bar must be positive");
    const double s = sigma_bar * std::sqrt(T - t);
    const double d = (x - strike) / s;
    return {normal_cdf(d), normal_pdf(d) / s};
}

}  // namespace fbsde::oracles
