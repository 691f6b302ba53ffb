#include "fbsde/weights.hpp"

#include <cmath>

#include "fbsde/errors.hpp"

namespace fbsde {

namespace {

void check_index(const PathBundle& path, int r_index) {
    if (r_index < 1 || r_index > path.grid.n_steps) {
        throw ValidationError("weight: r_index must lie in [1, n_steps]");
    }
}

// Running state shared by the single-index and series evaluations so both
// produce bit-identical values.
class WeightAccumulator {
public:
    explicit WeightAccumulator(const PathBundle& path) : path_(path) {}

    // Absorb step j = r-1, moving the evaluation point to index r.
    void advance() {
        const int j = next_;
        const double gamma = path_.gamma[j];
        if (j == 0) {
            first_gamma_ = gamma;
        } else if (gamma != first_gamma_) {
            constant_gamma_ = false;
        }
        min_abs_gamma_ = j == 0 ? std::abs(gamma) : std::min(min_abs_gamma_, std::abs(gamma));
        if (gamma != 0.0) {
            cancelled_sum_ += path_.gradX[j] / gamma * path_.dW[j];
        }
        ++next_;
    }

    [[nodiscard]] WeightSample degenerate(double lambda_floor) const {
        WeightSample s = base();
        if (!(s.lambda_at_r >= lambda_floor) || s.lambda_at_r <= 0.0) {
            s.floored = true;
            return s;
        }
        const double bsum = path_.B[next_];
        if (constant_gamma_ && bsum == 0.0 && first_gamma_ != 0.0) {
            s.value = cancelled_value();
        } else {
            const double lambda = s.lambda_at_r;
            s.value = (path_.S1[next_] + 2.0 / lambda * bsum) / lambda;
        }
        return s;
    }

    [[nodiscard]] WeightSample nondegenerate(double sigma_floor) const {
        WeightSample s = base();
        if (!(min_abs_gamma_ >= sigma_floor) || min_abs_gamma_ == 0.0) {
            s.floored = true;
            return s;
        }
        s.value = cancelled_value();
        return s;
    }

private:
    [[nodiscard]] WeightSample base() const {
        WeightSample s;
        s.r_index = next_;
        s.r = path_.grid.time(next_);
        s.lambda_at_r = path_.Lambda[next_];
        return s;
    }

    [[nodiscard]] double cancelled_value() const { return cancelled_sum_ / (path_.grid.time(next_) - path_.grid.t0); }

    const PathBundle& path_;
    int next_ = 0;
    bool constant_gamma_ = true;
    double first_gamma_ = 0.0;
    double min_abs_gamma_ = 0.0;
    double cancelled_sum_ = 0.0;
};

}  // namespace

WeightSample degenerate_weight(const PathBundle& path, int r_index, double lambda_floor) {
    check_index(path, r_index);
    WeightAccumulator acc(path);
    for (int k = 0; k < r_index; ++k) acc.advance();
    return acc.degenerate(lambda_floor);
}

WeightSample nondegenerate_weight(const PathBundle& path, int r_index, double sigma_floor) {
    check_index(path, r_index);
    WeightAccumulator acc(path);
    for (int k = 0; k < r_index; ++k) acc.advance();
    return acc.nondegenerate(sigma_floor);
}

std::vector<WeightSample> weight_series(const PathBundle& path, WeightKind kind, double floor) {
    const int n = path.grid.n_steps;
    std::vector<WeightSample> out(static_cast<std::size_t>(n) + 1);
    out[0].r = path.grid.t0;
    out[0].floored = true;
    WeightAccumulator acc(path);
    for (int r = 1; r <= n; ++r) {
        acc.advance();
        out[r] = kind == WeightKind::degenerate ? acc.degenerate(floor) : acc.nondegenerate(floor);
    }
    return out;
}

}  // namespace fbsde
