#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "fbsde/model.hpp"
#include "fbsde/sde_sim.hpp"

namespace fbsde {

inline constexpr double kDefaultEpsSigma = 1e-8;

/// Deterministic flow of the drift alone, d eta / ds = b(s, eta), eta_t = x.
struct CharacteristicPath {
    TimeGrid grid;
    std::vector<double> eta;
};

/// Membership of a space-time point in Gamma, Gamma^0 and Gamma^n.
struct DegeneracyReport {
    ProblemPoint point;
    double max_sigma_on_characteristic = 0.0;
    bool in_Gamma = false;
    bool in_Gamma0 = false;
    std::optional<int> n_index;  ///< smallest n with max >= 1/n; set iff in_Gamma0
};

/// Fixed-step classical RK4 on [t0, T]. At t0 == T the path is the single point x0.
CharacteristicPath characteristic(const CoefficientModel& model, const ProblemPoint& point, int n_ode_steps);

DegeneracyReport gamma_report(const CoefficientModel& model, const ProblemPoint& point, int n_ode_steps,
                              double eps_sigma = kDefaultEpsSigma);

/// Smallest n >= 1 with value >= 1/n.
int smallest_gamma_index(double value);

/**
 * Memo for Gamma^0 membership keyed by (t, x rounded to 1e-10). Safe for
 * concurrent use. A cache is only valid for one (model, n_ode_steps, eps_sigma).
 */
class GammaZeroCache {
public:
    std::optional<bool> find(double t, double x) const;
    void insert(double t, double x, bool inside);
    [[nodiscard]] std::size_t size() const;

private:
    struct Key {
        std::uint64_t t_bits;
        long long x_ticks;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            return std::hash<std::uint64_t>{}(k.t_bits * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(k.x_ticks));
        }
    };
    static std::optional<Key> make_key(double t, double x);

    mutable std::mutex mutex_;
    std::unordered_map<Key, bool, KeyHash> map_;
};

/// Gamma^0 membership with early exit at the first characteristic node where |sigma| > eps_sigma.
bool in_gamma0(const CoefficientModel& model, const ProblemPoint& point, int n_ode_steps,
               double eps_sigma = kDefaultEpsSigma, GammaZeroCache* cache = nullptr);

/// First grid time t_k with (t_k, X_k) outside Gamma^0; the horizon if there is none.
double locate_tau(const CoefficientModel& model, const PathBundle& path, int n_ode_steps,
                  double eps_sigma = kDefaultEpsSigma, GammaZeroCache* cache = nullptr);

/// Index of the grid time returned by locate_tau (n_steps + 1 when no exit occurs).
int locate_tau_index(const CoefficientModel& model, const PathBundle& path, int n_ode_steps,
                     double eps_sigma = kDefaultEpsSigma, GammaZeroCache* cache = nullptr);

struct GammaEquivalenceReport {
    std::size_t n_points = 0;
    std::size_t n_agree = 0;
    double agreement_fraction = 0.0;
    std::size_t n_both = 0;          ///< points in Gamma^0 under both drifts
    double max_n_ratio = 1.0;        ///< max of n~/n over n_both points
    double min_n_ratio = 1.0;
    std::vector<DegeneracyReport> original;
    std::vector<DegeneracyReport> transformed;
};

/// Compares Gamma^0 membership and Gamma^n indices under b and under b + f2 sigma.
GammaEquivalenceReport check_gamma_equivalence(const CoefficientModel& model,
                                               const std::vector<ProblemPoint>& sample_points, int n_ode_steps,
                                               double eps_sigma = kDefaultEpsSigma);

}  // namespace fbsde
