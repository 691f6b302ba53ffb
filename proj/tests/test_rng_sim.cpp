#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/rng.hpp"
#include "fbsde/sde_sim.hpp"

using namespace fbsde;

namespace {

CoefficientModel constant_model(double c, double T = 1.0) {
    CoefficientModel m;
    m.name = "const";
    m.sigma = [c](double, double) { return c; };
    m.b = [](double, double) { return 0.0; };
    m.g = [](double x) { return x; };
    m.g_prime = [](double) { return 1.0; };
    m.horizon_T = T;
    m.lipschitz_K = std::max(1.0, c);
    return finalize_model(m);
}

CoefficientModel linear_drift_model(double c, double lambda) {
    CoefficientModel m;
    m.sigma = [c](double, double) { return c; };
    m.sigma_x = [](double, double) { return 0.0; };
    m.b = [lambda](double, double x) { return lambda * x; };
    m.b_x = [lambda](double, double) { return lambda; };
    m.g = [](double x) { return x; };
    return finalize_model(m);
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    // Reference outputs from the Random123 distribution (kat_vectors).
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::apply({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
    static_assert(Philox4x32::apply({0, 0, 0, 0}, {0, 0})[0] == 0x6627e8d5u);
}

TEST_CASE("Brownian increments are deterministic and well distributed") {
    const auto a = brownian_increments(42, 7, 1000, 1e-3);
    const auto b = brownian_increments(42, 7, 1000, 1e-3);
    CHECK(a == b);
    CHECK(a != brownian_increments(42, 8, 1000, 1e-3));
    CHECK(a != brownian_increments(43, 7, 1000, 1e-3));
    // Prefix stability: the first k increments do not depend on n_steps.
    const auto shorter = brownian_increments(42, 7, 333, 1e-3);
    CHECK(std::equal(shorter.begin(), shorter.end(), a.begin()));

    const double dt = 1e-3;
    std::vector<double> all;
    all.reserve(1000000);
    for (std::uint64_t p = 0; p < 1000; ++p) {
        const auto inc = brownian_increments(2024, p, 1000, dt);
        all.insert(all.end(), inc.begin(), inc.end());
    }
    const auto m = sample_moments(all);
    CHECK(std::abs(m.mean) <= 3.0 * std::sqrt(dt / 1e6));
    CHECK(m.stddev * m.stddev == doctest::Approx(dt).epsilon(0.01));

    // Distinct streams are uncorrelated.
    const auto x = brownian_increments(5, 0, 100000, 1.0);
    const auto y = brownian_increments(5, 1, 100000, 1.0);
    const double corr = std::inner_product(x.begin(), x.end(), y.begin(), 0.0) / 1e5;
    CHECK(std::abs(corr) < 4.0 / std::sqrt(1e5));
    CHECK_THROWS_AS(brownian_increments(1, 0, 0, 1.0), ValidationError);
}

TEST_CASE("time grid") {
    const TimeGrid g(0.3, 1.7, 7);
    CHECK(g.time(0) == 0.3);
    CHECK(g.time(7) == 1.7);
    for (int k = 0; k < 7; ++k) CHECK(g.time(k) < g.time(k + 1));
    CHECK_THROWS_AS(TimeGrid(1.0, 1.0, 4), ValidationError);
    CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 0), ValidationError);
}

TEST_CASE("constant coefficients") {
    const double c = 0.7;
    const auto m = constant_model(c);
    const TimeGrid g(0.25, 1.0, 64);
    const auto p = simulate_path(m, {0.25, 0.1}, g, 9, 3);
    REQUIRE(p.valid);
    REQUIRE(p.X.size() == 65);
    REQUIRE(p.dW.size() == 64);
    for (double v : p.gradX) CHECK(v == 1.0);
    CHECK(p.Lambda.front() == 0.0);
    CHECK(p.Lambda.back() == doctest::Approx(c * c * 0.75).epsilon(1e-14));
    for (std::size_t k = 0; k + 1 < p.Lambda.size(); ++k) CHECK(p.Lambda[k] <= p.Lambda[k + 1]);
    for (std::size_t k = 0; k < p.B.size(); ++k) CHECK(p.B[k] == 0.0);
    for (std::size_t k = 0; k < p.gamma.size(); ++k) CHECK(p.gamma[k] == m.sigma(g.time(static_cast<int>(k)), p.X[k]));
    // Same increments as the stream.
    CHECK(p.dW == brownian_increments(9, 3, 64, g.dt()));

    // Law of X_T.
    std::vector<double> xt(100000);
    for (std::size_t i = 0; i < xt.size(); ++i) xt[i] = simulate_path(m, {0.25, 0.1}, g, 1, i).X.back();
    const auto mom = sample_moments(xt);
    const double var = c * c * 0.75;
    const double var_se = var * std::sqrt(2.0 / (xt.size() - 1));
    CHECK(std::abs(mom.stddev * mom.stddev - var) <= 3.0 * var_se);
    CHECK(std::abs(mom.mean - 0.1) <= 3.0 * std::sqrt(var / xt.size()));
}

TEST_CASE("zero-volatility model stays put") {
    const auto m = builtin_model("indicator_zero_vol");
    const auto p = simulate_path(m, {0.0, 1.0}, TimeGrid(0.0, 1.0, 50), 3, 0);
    for (double x : p.X) CHECK(x == 1.0);
    for (double v : p.Lambda) CHECK(v == 0.0);
    for (double v : p.S1) CHECK(v == 0.0);
}

TEST_CASE("tangent flow stays positive") {
    const auto m = builtin_model("example1", {{"alpha", 0.8}, {"beta", 0.5}});
    const TimeGrid g(0.0, 2.0, 400);
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto p = simulate_path(m, {0.0, 0.0}, g, 17, i);
        for (double v : p.gradX) REQUIRE(v > 0.0);
        for (int k = 0; k <= g.n_steps; ++k) {
            if (g.time(k) > 1.0) CHECK(p.gamma[k] == 0.0);
        }
    }
    // Nonconstant flow: sigma_x and b_x nonzero.
    CoefficientModel nl;
    nl.sigma = [](double, double x) { return 0.5 + 0.4 * std::tanh(x); };
    nl.b = [](double, double x) { return -std::sin(x); };
    nl.g = [](double x) { return x; };
    nl = finalize_model(nl);
    for (std::uint64_t i = 0; i < 200; ++i) {
        const auto p = simulate_path(nl, {0.0, 0.3}, TimeGrid(0.0, 1.0, 100), 2, i);
        for (double v : p.gradX) REQUIRE(v > 0.0);
    }
}

TEST_CASE("bounded-below volatility yields positive occupation") {
    const auto m = builtin_model("tanh_smooth", {{"sigma_bar", 0.4}});
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto p = simulate_path(m, {0.2, 0.0}, TimeGrid(0.2, 1.0, 40), 5, i);
        CHECK(p.Lambda.back() > 0.0);
    }
}

TEST_CASE("simulate_path preconditions") {
    const auto m = constant_model(1.0);
    CHECK_THROWS_AS(simulate_path(m, {0.1, 0.0}, TimeGrid(0.0, 1.0, 10), 0, 0), ValidationError);
    CHECK_THROWS_AS(simulate_path(m, {0.0, 0.0}, TimeGrid(0.0, 2.0, 10), 0, 0), ValidationError);
}

TEST_CASE("batch equals individual paths for any worker count") {
    const auto m = builtin_model("tanh_smooth", {{"sigma_bar", 1.0}});
    const TimeGrid g(0.0, 1.0, 32);
    const auto one = simulate_batch(m, {0.0, 0.5}, g, 77, 1, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].X == simulate_path(m, {0.0, 0.5}, g, 77, 0).X);
    const auto a = simulate_batch(m, {0.0, 0.5}, g, 77, 257, 1);
    const auto b = simulate_batch(m, {0.0, 0.5}, g, 77, 257, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].X == b[i].X);
        CHECK(a[i].S1 == b[i].S1);
        CHECK(a[i].Lambda == b[i].Lambda);
    }
}

TEST_CASE("invalid paths are flagged and batches with many of them fail") {
    CoefficientModel blow;
    blow.sigma = [](double, double) { return 1.0; };
    blow.b = [](double, double x) { return x * x * 1e3; };
    blow.g = [](double x) { return x; };
    blow = finalize_model(blow);
    const auto p = simulate_path(blow, {0.0, 10.0}, TimeGrid(0.0, 1.0, 50), 1, 0);
    CHECK_FALSE(p.valid);
    CHECK_THROWS_AS(simulate_batch(blow, {0.0, 10.0}, TimeGrid(0.0, 1.0, 50), 1, 20), NumericalError);
}

TEST_CASE("strong order for additive noise") {
    // dX = lambda X dt + c dW. The exact solution driven by the same increments
    // is X_{k+1} = e^{lambda dt} X_k + c * (integral), approximated here by
    // running the Euler scheme on a 64x finer grid with the summed increments.
    const double c = 0.5, lambda = -1.0, x0 = 1.0;
    const auto m = linear_drift_model(c, lambda);
    std::vector<double> errs;
    const int fine = 4096;
    const int n_paths = 400;
    std::vector<std::vector<double>> fine_dw(n_paths);
    std::vector<double> ref(n_paths);
    const double dt_f = 1.0 / fine;
    for (int i = 0; i < n_paths; ++i) {
        fine_dw[i] = brownian_increments(31, i, fine, dt_f);
        // Exact OU update on the fine grid: this is the reference solution.
        double x = x0;
        for (int k = 0; k < fine; ++k) x = std::exp(lambda * dt_f) * x + c * fine_dw[i][k];
        ref[i] = x;
    }
    for (int n : {16, 32, 64, 128, 256}) {
        const int stride = fine / n;
        const double dt = 1.0 / n;
        double se = 0.0;
        for (int i = 0; i < n_paths; ++i) {
            double x = x0;
            for (int k = 0; k < n; ++k) {
                double dw = 0.0;
                for (int j = 0; j < stride; ++j) dw += fine_dw[i][k * stride + j];
                x = x + lambda * x * dt + c * dw;
            }
            se += (x - ref[i]) * (x - ref[i]);
        }
        errs.push_back(std::sqrt(se / n_paths));
    }
    for (std::size_t j = 0; j + 1 < errs.size(); ++j) {
        const double slope = std::log2(errs[j] / errs[j + 1]);
        INFO("doubling ", j, " rate ", slope);
        CHECK(slope >= 0.8);
        CHECK(slope <= 1.2);
    }
    // The library's scheme is that same Euler recursion.
    const TimeGrid g(0.0, 1.0, 16);
    const auto p = simulate_path(m, {0.0, x0}, g, 31, 0);
    double x = x0;
    for (int k = 0; k < 16; ++k) x = x + lambda * x * g.dt() + c * p.dW[k];
    CHECK(p.X.back() == doctest::Approx(x).epsilon(1e-14));
}

TEST_CASE("parallel helpers") {
    std::vector<double> v(10007);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + i);
    double naive = 0.0;
    for (double d : v) naive += d;
    CHECK(pairwise_sum(v) == doctest::Approx(naive).epsilon(1e-13));
    std::vector<int> hit(1000, 0);
    parallel_for(hit.size(), 3, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(100, 3, [](std::size_t i) {
                        if (i == 57) throw NumericalError("boom");
                    }),
                    NumericalError);
}
