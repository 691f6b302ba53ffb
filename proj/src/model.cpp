#include "fbsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fbsde/errors.hpp"

namespace fbsde {

namespace {

constexpr double kFdRelStep = 1e-5;

double fd_step(double x) { return kFdRelStep * std::max(1.0, std::abs(x)); }

class ParamReader {
public:
    ParamReader(std::string_view model, const ParamMap& params) : model_(model), params_(params) {}

    double required(std::string_view key) {
        used_.emplace_back(key);
        auto it = params_.find(key);
        if (it == params_.end()) {
            throw ValidationError(model_ + ": missing parameter '" + std::string(key) + "'");
        }
        return it->second;
    }

    double optional(std::string_view key, double fallback) {
        used_.emplace_back(key);
        auto it = params_.find(key);
        return it == params_.end() ? fallback : it->second;
    }

    void ignore(std::string_view key) { used_.emplace_back(key); }

    void reject_unknown() const {
        for (const auto& [key, value] : params_) {
            if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
                throw ValidationError(model_ + ": unknown parameter '" + key + "'");
            }
        }
    }

    void positive(std::string_view key, double value) const {
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw ValidationError(model_ + ": parameter '" + std::string(key) + "' must be positive");
        }
    }

private:
    std::string model_;
    const ParamMap& params_;
    std::vector<std::string> used_;
};

PayoffFn indicator_above(double strike) {
    return [strike](double x) { return x > strike ? 1.0 : 0.0; };
}

CoefficientModel constant_vol(std::string name, double sigma_bar, double T) {
    CoefficientModel m;
    m.name = std::move(name);
    m.sigma = [sigma_bar](double, double) { return sigma_bar; };
    m.sigma_x = [](double, double) { return 0.0; };
    m.b = [](double, double) { return 0.0; };
    m.b_x = [](double, double) { return 0.0; };
    m.lipschitz_K = std::max(1.0, sigma_bar);
    m.holder_alpha = 1.0;
    m.holder_C = 1.0;
    m.horizon_T = T;
    return m;
}

CoefficientModel make_indicator_zero_vol(const ParamMap& params) {
    ParamReader r("indicator_zero_vol", params);
    const double T = r.optional("T", 1.0);
    r.positive("T", T);
    r.reject_unknown();
    CoefficientModel m = constant_vol("indicator_zero_vol", 0.0, T);
    m.g = indicator_above(0.0);
    m.payoff_jumps = {0.0};
    return m;
}

CoefficientModel make_example1(const ParamMap& params) {
    ParamReader r("example1", params);
    const double alpha = r.required("alpha");
    const double beta = r.required("beta");
    const double T = r.optional("T", 2.0);
    r.reject_unknown();
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("example1: alpha must lie in (0, 1)");
    }
    const double beta_max = alpha / (2.0 * (1.0 - alpha));
    if (!(beta > 0.0 && beta < beta_max)) {
        std::ostringstream os;
        os << "example1: beta must lie in (0, alpha/(2(1-alpha))) = (0, " << beta_max << ")";
        throw ValidationError(os.str());
    }
    if (T != 2.0) {
        throw ValidationError("example1: horizon T is fixed at 2");
    }

    CoefficientModel m;
    m.name = "example1";
    m.sigma = [beta](double t, double) { return t <= 1.0 ? std::pow(1.0 - t, beta) : 0.0; };
    m.sigma_x = [](double, double) { return 0.0; };
    m.b = [](double, double) { return 0.0; };
    m.b_x = [](double, double) { return 0.0; };
    m.g = [alpha](double x) { return x == 0.0 ? 0.0 : x / std::pow(std::abs(x), alpha); };
    m.payoff_jumps = {0.0};
    m.lipschitz_K = 1.0;
    // (1-t)^beta is Hoelder-min(beta,1) in t; for beta > 1 it is Lipschitz with constant beta.
    m.holder_alpha = std::min(beta, 1.0);
    m.holder_C = std::max(1.0, beta);
    m.psi_K = 2.0;
    m.psi_p0 = 1.0;
    m.horizon_T = 2.0;
    return m;
}

CoefficientModel make_bachelier_digital(const ParamMap& params) {
    ParamReader r("bachelier_digital", params);
    const double sigma_bar = r.required("sigma_bar");
    const double strike = r.optional("strike", 0.0);
    const double T = r.optional("T", 1.0);
    r.positive("sigma_bar", sigma_bar);
    r.positive("T", T);
    r.reject_unknown();
    CoefficientModel m = constant_vol("bachelier_digital", sigma_bar, T);
    m.g = indicator_above(strike);
    m.payoff_jumps = {strike};
    return m;
}

CoefficientModel make_tanh_smooth(const ParamMap& params) {
    ParamReader r("tanh_smooth", params);
    const double sigma_bar = r.required("sigma_bar");
    const double T = r.optional("T", 1.0);
    r.positive("sigma_bar", sigma_bar);
    r.positive("T", T);
    r.reject_unknown();
    CoefficientModel m = constant_vol("tanh_smooth", sigma_bar, T);
    m.g = [](double x) { return std::tanh(x); };
    m.g_prime = [](double x) {
        const double c = std::cosh(x);
        return 1.0 / (c * c);
    };
    return m;
}

CoefficientModel make_step_vol(const ParamMap& params) {
    ParamReader r("step_vol", params);
    const double sigma_bar = r.required("sigma_bar");
    const double t_cut = r.required("t_cut");
    const double strike = r.optional("strike", 0.0);
    const double T = r.optional("T", 1.0);
    r.positive("sigma_bar", sigma_bar);
    r.positive("T", T);
    r.reject_unknown();
    if (!(t_cut > 0.0 && t_cut < T)) {
        throw ValidationError("step_vol: t_cut must lie in (0, T)");
    }
    CoefficientModel m = constant_vol("step_vol", sigma_bar, T);
    m.sigma = [sigma_bar, t_cut](double t, double) { return t <= t_cut ? sigma_bar : 0.0; };
    m.sigma_time_jumps = {t_cut};
    m.g = indicator_above(strike);
    m.payoff_jumps = {strike};
    return m;
}

CoefficientModel make_girsanov_const(const ParamMap& params, const std::string& base) {
    if (base.empty()) {
        throw ValidationError("girsanov_const: missing base model");
    }
    if (base == "girsanov_const") {
        throw ValidationError("girsanov_const: base model cannot itself be girsanov_const");
    }
    auto it = params.find("f2");
    if (it == params.end()) {
        throw ValidationError("girsanov_const: missing parameter 'f2'");
    }
    const double f2 = it->second;
    if (!std::isfinite(f2)) {
        throw ValidationError("girsanov_const: parameter 'f2' must be finite");
    }
    ParamMap base_params = params;
    base_params.erase("f2");

    CoefficientModel m = builtin_model(base, base_params);
    m.name = "girsanov_const(" + base + ")";
    m.f1 = {};
    m.f2 = [f2](double, double) { return f2; };
    m.f2_x = [](double, double) { return 0.0; };
    m.lipschitz_K = std::max({m.lipschitz_K * (1.0 + std::abs(f2)), std::abs(f2)});
    return m;
}

}  // namespace

double CoefficientModel::psi(double x) const { return psi_K * (1.0 + std::pow(std::abs(x), psi_p0)); }

const std::vector<std::string>& builtin_model_names() {
    static const std::vector<std::string> names = {"indicator_zero_vol", "example1",       "bachelier_digital",
                                                   "tanh_smooth",        "girsanov_const", "step_vol"};
    return names;
}

CoefficientModel builtin_model(const ModelSpec& spec) {
    if (spec.name == "girsanov_const") {
        return make_girsanov_const(spec.params, spec.base);
    }
    if (!spec.base.empty()) {
        throw ValidationError(spec.name + ": only girsanov_const takes a base model");
    }
    if (spec.name == "indicator_zero_vol") return make_indicator_zero_vol(spec.params);
    if (spec.name == "example1") return make_example1(spec.params);
    if (spec.name == "bachelier_digital") return make_bachelier_digital(spec.params);
    if (spec.name == "tanh_smooth") return make_tanh_smooth(spec.params);
    if (spec.name == "step_vol") return make_step_vol(spec.params);
    throw ValidationError("unknown model '" + spec.name + "'");
}

CoefficientModel builtin_model(std::string_view name, const ParamMap& params) {
    ParamMap rest = params;
    return builtin_model(ModelSpec{std::string(name), std::move(rest), {}});
}

CoefficientModel finalize_model(CoefficientModel model) {
    if (!model.sigma || !model.b || !model.g) {
        throw ValidationError("model '" + model.name + "': sigma, b and g are mandatory");
    }
    if (!(model.horizon_T > 0.0)) {
        throw ValidationError("model '" + model.name + "': horizon_T must be positive");
    }
    if (!(model.holder_alpha > 0.0 && model.holder_alpha <= 1.0) || !(model.holder_C > 0.0)) {
        throw ValidationError("model '" + model.name + "': Hoelder metadata out of range");
    }
    auto central_x = [](SpaceTimeFn fn) -> SpaceTimeFn {
        return [fn = std::move(fn)](double t, double x) {
            const double h = fd_step(x);
            return (fn(t, x + h) - fn(t, x - h)) / (2.0 * h);
        };
    };
    if (!model.sigma_x) model.sigma_x = central_x(model.sigma);
    if (!model.b_x) model.b_x = central_x(model.b);
    if (model.f2 && !model.f2_x) model.f2_x = central_x(model.f2);
    if (model.f1 && !model.f1_x) {
        model.f1_x = [fn = model.f1](double t, double x, double y) {
            const double h = fd_step(x);
            return (fn(t, x + h, y) - fn(t, x - h, y)) / (2.0 * h);
        };
    }
    if (model.f1 && model.f1_depends_on_y && !model.f1_y) {
        model.f1_y = [fn = model.f1](double t, double x, double y) {
            const double h = fd_step(y);
            return (fn(t, x, y + h) - fn(t, x, y - h)) / (2.0 * h);
        };
    }
    return model;
}

CoefficientModel transformed_drift(const CoefficientModel& model) {
    if (!model.has_f2()) {
        return model;
    }
    CoefficientModel out = model;
    SpaceTimeFn b = model.b;
    SpaceTimeFn b_x = model.b_x;
    SpaceTimeFn sigma = model.sigma;
    SpaceTimeFn sigma_x = model.sigma_x;
    SpaceTimeFn f2 = model.f2;
    SpaceTimeFn f2_x = model.f2_x;
    if (!b_x || !sigma_x || !f2_x) {
        throw ValidationError("transformed_drift: model '" + model.name + "' lacks derivatives; finalize it first");
    }
    out.b = [b, sigma, f2](double t, double x) { return b(t, x) + f2(t, x) * sigma(t, x); };
    out.b_x = [b_x, sigma, sigma_x, f2, f2_x](double t, double x) {
        return b_x(t, x) + f2_x(t, x) * sigma(t, x) + f2(t, x) * sigma_x(t, x);
    };
    out.f2 = {};
    out.f2_x = {};
    out.lipschitz_K = model.lipschitz_K + model.lipschitz_K * model.lipschitz_K;
    return out;
}

double holder_delta(const CoefficientModel& model, double eps) {
    if (!(eps > 0.0)) {
        throw ValidationError("holder_delta: eps must be positive");
    }
    const double d = std::pow(eps / model.holder_C, 1.0 / model.holder_alpha);
    return std::min(model.horizon_T, d);
}

void validate_point(const CoefficientModel& model, const ProblemPoint& point) {
    if (!std::isfinite(point.x0) || !(point.t0 >= 0.0 && point.t0 <= model.horizon_T)) {
        std::ostringstream os;
        os << "point (t0=" << point.t0 << ", x0=" << point.x0 << ") outside [0, " << model.horizon_T << "] x R";
        throw ValidationError(os.str());
    }
}

InvariantReport check_invariants(const CoefficientModel& model, int n_t, int n_x, double x_lo, double x_hi) {
    InvariantReport report;
    auto fail = [&report](std::string what) {
        report.ok = false;
        if (report.violations.size() < 32) report.violations.push_back(std::move(what));
    };
    if (!model.sigma || !model.b || !model.g || !model.sigma_x || !model.b_x) {
        fail("missing coefficient or derivative");
        return report;
    }

    const double T = model.horizon_T;
    const double K = model.lipschitz_K;
    std::vector<double> ts(n_t);
    std::vector<double> xs(n_x);
    for (int i = 0; i < n_t; ++i) ts[i] = n_t == 1 ? 0.0 : T * i / (n_t - 1);
    for (int j = 0; j < n_x; ++j) xs[j] = n_x == 1 ? x_lo : x_lo + (x_hi - x_lo) * j / (n_x - 1);

    auto fd_ok = [&](const SpaceTimeFn& fn, const SpaceTimeFn& dfn, double t, double x) {
        const double h = fd_step(x);
        const double numeric = (fn(t, x + h) - fn(t, x - h)) / (2.0 * h);
        return std::abs(numeric - dfn(t, x)) <= 10.0 * h;
    };

    for (double t : ts) {
        for (double x : xs) {
            const double s = model.sigma(t, x);
            const double b = model.b(t, x);
            if (!(std::abs(s) <= K)) fail("|sigma| > K at t=" + std::to_string(t) + " x=" + std::to_string(x));
            if (!(std::abs(b) <= K)) fail("|b| > K at t=" + std::to_string(t) + " x=" + std::to_string(x));
            if (!fd_ok(model.sigma, model.sigma_x, t, x)) fail("sigma_x inconsistent at t=" + std::to_string(t));
            if (!fd_ok(model.b, model.b_x, t, x)) fail("b_x inconsistent at t=" + std::to_string(t));
            if (model.f2 && model.f2_x && !fd_ok(model.f2, model.f2_x, t, x)) {
                fail("f2_x inconsistent at t=" + std::to_string(t));
            }
        }
    }

    auto straddles_jump = [&model](double t1, double t2) {
        for (double j : model.sigma_time_jumps) {
            if ((t1 <= j && t2 > j) || (t2 <= j && t1 > j)) return true;
        }
        return false;
    };
    for (double x : xs) {
        for (int i = 0; i < n_t; ++i) {
            for (int k = i + 1; k < n_t; ++k) {
                if (straddles_jump(ts[i], ts[k])) continue;
                const double lhs = std::abs(model.sigma(ts[i], x) - model.sigma(ts[k], x));
                const double rhs = model.holder_C * std::pow(std::abs(ts[i] - ts[k]), model.holder_alpha);
                if (lhs > rhs * (1.0 + 1e-12) + 1e-15) fail("Hoelder bound violated at x=" + std::to_string(x));
            }
        }
    }

    for (double x : xs) {
        if (!(std::abs(model.g(x)) <= model.psi(x))) fail("|g| > psi at x=" + std::to_string(x));
    }
    return report;
}

}  // namespace fbsde
