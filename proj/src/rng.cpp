#include "fbsde/rng.hpp"

#include <cmath>
#include <numbers>
#include <span>

#include "fbsde/errors.hpp"

namespace fbsde {

namespace {

// Uniform on (0, 1], 53 bits.
double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_lo_(static_cast<std::uint32_t>(stream)),
      stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

std::array<double, 2> NormalStream::pair(std::uint64_t block) const noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                                  stream_lo_, stream_hi_};
    const auto out = Philox4x32::apply(ctr, key_);
    const double u1 = to_unit(out[0], out[1]);
    const double u2 = to_unit(out[2], out[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

void NormalStream::fill(std::span<double> out) const noexcept {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; i += 2) {
        const auto z = pair(i / 2);
        out[i] = z[0];
        if (i + 1 < n) out[i + 1] = z[1];
    }
}

std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t path_index, int n_steps, double dt) {
    if (n_steps < 1) {
        throw ValidationError("brownian_increments: n_steps must be >= 1");
    }
    if (!(dt > 0.0)) {
        throw ValidationError("brownian_increments: dt must be positive");
    }
    std::vector<double> dw(static_cast<std::size_t>(n_steps));
    NormalStream(seed, path_index).fill(dw);
    const double scale = std::sqrt(dt);
    for (double& v : dw) v *= scale;
    return dw;
}

}  // namespace fbsde
