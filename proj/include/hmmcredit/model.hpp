#pragma once

// Default-intensity families lambda_i(t | defaults so far, hidden state) and
// the portfolio default record they condition on.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hmmcredit/chain.hpp"
#include "hmmcredit/error.hpp"

namespace hmmcredit {

struct DefaultRecord {
    int obligor = 0;  // 1..K
    double time = 0.0;
    friend bool operator==(const DefaultRecord&, const DefaultRecord&) = default;
};

/// Portfolio of K obligors with the ordered defaults observed so far.
class PortfolioState {
public:
    PortfolioState() = default;
    explicit PortfolioState(int obligor_count) : count_(obligor_count) {
        detail::require(obligor_count > 0, "PortfolioState: obligor count must be positive");
    }
    PortfolioState(int obligor_count, std::vector<DefaultRecord> defaults) : PortfolioState(obligor_count) {
        for (const auto& d : defaults) add_default(d.obligor, d.time);
    }

    int obligor_count() const { return count_; }
    int default_count() const { return static_cast<int>(defaults_.size()); }
    int survivor_count() const { return count_ - default_count(); }
    const std::vector<DefaultRecord>& defaults() const { return defaults_; }
    double last_default_time() const { return defaults_.empty() ? 0.0 : defaults_.back().time; }

    bool has_defaulted(int obligor) const {
        return std::any_of(defaults_.begin(), defaults_.end(), [&](const auto& d) { return d.obligor == obligor; });
    }

    std::vector<int> survivors() const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(survivor_count()));
        for (int i = 1; i <= count_; ++i)
            if (!has_defaulted(i)) out.push_back(i);
        return out;
    }

    void add_default(int obligor, double time) {
        detail::require(obligor >= 1 && obligor <= count_, "PortfolioState: obligor id out of range");
        detail::require(!has_defaulted(obligor), "PortfolioState: obligor already defaulted");
        detail::require(defaults_.empty() || time > defaults_.back().time,
                        "PortfolioState: default times must be strictly increasing");
        defaults_.push_back({obligor, time});
    }

    PortfolioState with_default(int obligor, double time) const {
        PortfolioState next = *this;
        next.add_default(obligor, time);
        return next;
    }

private:
    int count_ = 1;
    std::vector<DefaultRecord> defaults_;
};

/// lambda_i(t) = a + b x + c (#defaulted others).
struct LinearContagion {
    double a = 0.0, b = 0.0, c = 0.0;
};

/// lambda_i(t) = (a + c (#defaulted others)) e^{-t} + b x, t absolute model time.
struct ExpDecayContagion {
    double a = 0.0, b = 0.0, c = 0.0;
};

/// User-supplied intensity. `bound` must dominate every single-obligor
/// intensity over the horizon it is used on.
struct CustomIntensity {
    std::function<double(int obligor, double t, int x, const PortfolioState& port)> fn;
    double bound = 0.0;
    bool symmetric = false;         // identical across survivors given (t, x, #defaults)
    bool time_homogeneous = false;  // independent of t between defaults
    double floor = 0.0;             // lower bound on any intensity, for all t
};

class IntensityModel {
public:
    using Variant = std::variant<LinearContagion, ExpDecayContagion, CustomIntensity>;

    IntensityModel(Variant v, int obligor_count) : v_(std::move(v)), count_(obligor_count) {
        detail::require(obligor_count > 0, "IntensityModel: obligor count must be positive");
        validate();
    }

    const Variant& variant() const { return v_; }
    int obligor_count() const { return count_; }

    bool is_linear() const { return std::holds_alternative<LinearContagion>(v_); }
    bool is_exp_decay() const { return std::holds_alternative<ExpDecayContagion>(v_); }

    /// Homogeneous and symmetric across survivors (the premise of the
    /// ordered-default formulas).
    bool symmetric() const {
        if (auto* c = std::get_if<CustomIntensity>(&v_)) return c->symmetric;
        return true;
    }

    /// True when intensities do not depend on t between defaults.
    bool time_homogeneous() const {
        if (is_linear()) return true;
        if (auto* c = std::get_if<CustomIntensity>(&v_)) return c->time_homogeneous;
        return false;
    }

    /// Lower bound on any intensity for all t; positive means every survivor
    /// eventually defaults.
    double intensity_floor() const {
        if (auto* l = std::get_if<LinearContagion>(&v_)) {
            double lo = std::numeric_limits<double>::infinity();
            for (int x = 0; x <= 1; ++x)
                for (int m : {0, count_ - 1}) lo = std::min(lo, l->a + l->b * x + l->c * m);
            return std::max(0.0, lo);
        }
        if (is_exp_decay()) return 0.0;
        return std::get<CustomIntensity>(v_).floor;
    }

    /// Single-obligor intensity with `defaults` others already defaulted.
    double single(double t, int x, int defaults) const {
        if (auto* l = std::get_if<LinearContagion>(&v_)) return l->a + l->b * x + l->c * defaults;
        if (auto* e = std::get_if<ExpDecayContagion>(&v_)) return (e->a + e->c * defaults) * std::exp(-t) + e->b * x;
        throw InvalidArgument("IntensityModel::single: custom intensities need an obligor and portfolio");
    }

    double evaluate(int obligor, double t, int x, const PortfolioState& port) const {
        if (auto* c = std::get_if<CustomIntensity>(&v_)) return c->fn(obligor, t, x, port);
        return single(t, x, port.default_count());
    }

    /// Upper bound on any single-obligor intensity over [0, horizon], all
    /// hidden states and default configurations.
    double lambda_max(double /*horizon*/ = 0.0) const {
        if (auto* l = std::get_if<LinearContagion>(&v_))
            return l->a + std::max(0.0, l->b) + std::max(0.0, l->c * (count_ - 1));
        if (auto* e = std::get_if<ExpDecayContagion>(&v_))
            return std::max(0.0, e->a + std::max(0.0, e->c * (count_ - 1))) + std::max(0.0, e->b);
        return std::get<CustomIntensity>(v_).bound;
    }

private:
    void validate() const {
        if (auto* l = std::get_if<LinearContagion>(&v_)) {
            detail::require(std::isfinite(l->a) && std::isfinite(l->b) && std::isfinite(l->c),
                            "LinearContagion: coefficients must be finite");
            for (int x = 0; x <= 1; ++x)
                for (int m : {0, count_ - 1})
                    detail::require(l->a + l->b * x + l->c * m >= 0.0,
                                    "LinearContagion: intensity negative in a reachable state");
        } else if (auto* e = std::get_if<ExpDecayContagion>(&v_)) {
            detail::require(std::isfinite(e->a) && std::isfinite(e->b) && std::isfinite(e->c),
                            "ExpDecayContagion: coefficients must be finite");
            detail::require(e->b >= 0.0, "ExpDecayContagion: b must be >= 0");
            for (int m : {0, count_ - 1})
                detail::require(e->a + e->c * m >= 0.0, "ExpDecayContagion: intensity negative in a reachable state");
        } else {
            const auto& c = std::get<CustomIntensity>(v_);
            detail::require(static_cast<bool>(c.fn), "CustomIntensity: missing function");
            detail::require(std::isfinite(c.bound) && c.bound >= 0.0, "CustomIntensity: bound must be finite");
        }
    }

    Variant v_;
    int count_;
};

/// lambda_obligor(t | port, x). Rejects defaulted obligors.
inline double intensity(const IntensityModel& model, int obligor, double t, int x, const PortfolioState& port) {
    detail::require(obligor >= 1 && obligor <= port.obligor_count(), "intensity: obligor id out of range");
    detail::require(!port.has_defaulted(obligor), "intensity: obligor has already defaulted");
    detail::require(t >= port.last_default_time(), "intensity: t precedes the last recorded default");
    return model.evaluate(obligor, t, x, port);
}

/// Component x is -(sum of intensities of surviving obligors in state x).
inline RateVector surviving_rate_vector(const IntensityModel& model, const PortfolioState& port, double t) {
    if (model.symmetric() && !std::holds_alternative<CustomIntensity>(model.variant())) {
        const double n = port.survivor_count();
        const int m = port.default_count();
        return {-n * model.single(t, 0, m), -n * model.single(t, 1, m)};
    }
    RateVector u{0.0, 0.0};
    for (int i : port.survivors())
        for (int x = 0; x <= 1; ++x) u[x] -= model.evaluate(i, t, x, port);
    return u;
}

inline double lambda_max(const IntensityModel& model, double horizon = 0.0) { return model.lambda_max(horizon); }

/// Exponent accumulated by "nothing happens" while the portfolio is in
/// `port`: -(extra + sum of surviving intensities), with `extra` a constant
/// per-state rate (e.g. the current Y jump rate).
inline TimeRateFunction survival_rate_function(const IntensityModel& model, const PortfolioState& port,
                                               const RateVector& extra = {0.0, 0.0}) {
    const double bound = max_abs(extra) + port.survivor_count() * model.lambda_max();
    if (model.time_homogeneous()) {
        RateVector u = surviving_rate_vector(model, port, port.last_default_time()) - extra;
        TimeRateFunction f = TimeRateFunction::constant_rate(u);
        f.bound = std::max(f.bound, bound);
        return f;
    }
    TimeRateFunction f;
    f.rate = [&model, port, extra](double t) { return surviving_rate_vector(model, port, t) - extra; };
    f.bound = bound;
    return f;
}

}  // namespace hmmcredit
