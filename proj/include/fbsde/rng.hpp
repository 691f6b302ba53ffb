#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace fbsde {

/// Philox-4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
/// the output is a pure function of (counter, key).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

    static constexpr Counter apply(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeylA;
                key[1] += kWeylB;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }
};

/// Standard normal stream for one (seed, stream) pair. Block k of the counter
/// yields normals 2k and 2k+1 via Box-Muller, so any normal is addressable.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    /// Writes the first out.size() normals of the stream.
    void fill(std::span<double> out) const noexcept;

    /// The pair (normal 2k, normal 2k+1).
    [[nodiscard]] std::array<double, 2> pair(std::uint64_t block) const noexcept;

private:
    Philox4x32::Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
};

/// Brownian increments over n_steps steps of size dt for path `path_index`.
/// Deterministic in (seed, path_index, n_steps, dt).
std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t path_index, int n_steps, double dt);

}  // namespace fbsde
