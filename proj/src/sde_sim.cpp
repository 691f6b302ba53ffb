#include "fbsde/sde_sim.hpp"

#include <cmath>
#include <sstream>

#include "fbsde/errors.hpp"
#include "fbsde/parallel.hpp"
#include "fbsde/rng.hpp"

namespace fbsde {

TimeGrid::TimeGrid(double t0_, double T_, int n_steps_) : t0(t0_), T(T_), n_steps(n_steps_) {
    if (!(t0 < T) || !std::isfinite(t0) || !std::isfinite(T)) {
        throw ValidationError("TimeGrid: need t0 < T");
    }
    if (n_steps < 1) {
        throw ValidationError("TimeGrid: n_steps must be >= 1");
    }
}

void simulate_path_into(PathBundle& out, const CoefficientModel& model, const ProblemPoint& point,
                        const TimeGrid& grid, std::uint64_t seed, std::uint64_t path_index) {
    if (grid.t0 != point.t0 || grid.T != model.horizon_T) {
        std::ostringstream os;
        os << "simulate_path: grid [" << grid.t0 << ", " << grid.T << "] does not match point t0=" << point.t0
           << " and horizon T=" << model.horizon_T;
        throw ValidationError(os.str());
    }
    const int n = grid.n_steps;
    const auto size = static_cast<std::size_t>(n) + 1;
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);

    out.grid = grid;
    out.valid = true;
    out.dW.resize(static_cast<std::size_t>(n));
    out.X.resize(size);
    out.gradX.resize(size);
    out.gamma.resize(size);
    out.Lambda.resize(size);
    out.S1.resize(size);
    out.B.resize(size);

    NormalStream(seed, path_index).fill(out.dW);
    for (double& v : out.dW) v *= sqrt_dt;

    double x = point.x0;
    double grad = 1.0;
    double lambda = 0.0;
    double s1 = 0.0;
    double bsum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const double gamma = model.sigma(t, x);
        const double sx = model.sigma_x(t, x);
        const double drift = model.b(t, x);
        const double bx = model.b_x(t, x);
        const double dw = out.dW[k];

        out.X[k] = x;
        out.gradX[k] = grad;
        out.gamma[k] = gamma;
        out.Lambda[k] = lambda;
        out.S1[k] = s1;
        out.B[k] = bsum;

        bsum += lambda * sx * gamma * grad * dt;
        s1 += gamma * grad * dw;
        lambda += gamma * gamma * dt;
        x += drift * dt + gamma * dw;
        grad *= std::exp((bx - 0.5 * sx * sx) * dt + sx * dw);

        if (!std::isfinite(x) || !std::isfinite(grad) || !std::isfinite(s1) || !std::isfinite(bsum)) {
            out.valid = false;
        }
    }
    out.X[n] = x;
    out.gradX[n] = grad;
    out.gamma[n] = model.sigma(grid.T, x);
    out.Lambda[n] = lambda;
    out.S1[n] = s1;
    out.B[n] = bsum;
    if (!(grad > 0.0) || !std::isfinite(out.gamma[n]) || !std::isfinite(lambda)) {
        out.valid = false;
    }
}

PathBundle simulate_path(const CoefficientModel& model, const ProblemPoint& point, const TimeGrid& grid,
                         std::uint64_t seed, std::uint64_t path_index) {
    PathBundle out;
    simulate_path_into(out, model, point, grid, seed, path_index);
    return out;
}

std::vector<PathBundle> simulate_batch(const CoefficientModel& model, const ProblemPoint& point,
                                       const TimeGrid& grid, std::uint64_t seed, std::size_t n_paths,
                                       unsigned workers) {
    if (n_paths < 1) {
        throw ValidationError("simulate_batch: n_paths must be >= 1");
    }
    std::vector<PathBundle> paths(n_paths);
    parallel_for(n_paths, workers,
                 [&](std::size_t i) { simulate_path_into(paths[i], model, point, grid, seed, i); });
    std::size_t invalid = 0;
    for (const auto& p : paths) invalid += p.valid ? 0 : 1;
    if (static_cast<double>(invalid) > kMaxInvalidFraction * static_cast<double>(n_paths)) {
        throw NumericalError("simulate_batch: " + std::to_string(invalid) + " of " + std::to_string(n_paths) +
                             " paths produced non-finite values");
    }
    return paths;
}

}  // namespace fbsde
