#pragma once

#include <functional>

namespace fbsde {

/// A known (approximate) solution u and optionally u_x, used where the driver
/// needs Y_r = u(r, X_r) or Z needs u_x.
struct ValueProvider {
    std::function<double(double t, double x)> u_eval;
    std::function<double(double t, double x)> ux_eval;  ///< may be empty

    [[nodiscard]] bool has_ux() const noexcept { return static_cast<bool>(ux_eval); }
};

}  // namespace fbsde
