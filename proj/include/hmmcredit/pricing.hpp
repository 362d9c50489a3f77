#pragma once

// Single-name CDS premium and kth-to-default basket values.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hmmcredit/dist.hpp"
#include "hmmcredit/error.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/model.hpp"
#include "hmmcredit/quadrature.hpp"

namespace hmmcredit {

enum class TimeUnit { Day, Year };
enum class RateBasis { PerUnit, Annual };

/// Discount rate per model-time unit. An annual rate on a day clock is
/// divided by 365; every other combination is taken as given.
inline double rate_per_unit(double r, TimeUnit unit, RateBasis basis) {
    return (unit == TimeUnit::Day && basis == RateBasis::Annual) ? r / 365.0 : r;
}

struct CdsContract {
    double r = 0.0;  // per model-time unit
    double expiry = 0.0;

    void validate() const {
        detail::require(std::isfinite(r) && r >= 0.0, "CdsContract: r must be finite and >= 0");
        detail::require(std::isfinite(expiry) && expiry > 0.0, "CdsContract: expiry must be positive");
    }
};

struct CdsOptions {
    /// Protection leg on the order statistic P(tau^1 <= T < tau^2) instead of
    /// the reference name alone defaulting.
    bool order_statistic = false;
    DistOptions dist;
};

/// Continuous premium rate y for protection on the reference name C, paid by
/// B to A while all three names survive.
inline double cds_premium(const CdsContract& contract, const ModelContext& ctx, const CdsOptions& opt = {}) {
    contract.validate();
    detail::require_symmetric(ctx.model);
    detail::require(ctx.obligor_count() == 3, "cds_premium: the contract involves exactly three names");
    const ConditionalState start = ConditionalState::initial(ctx);
    const double big_t = contract.expiry;

    const double one_default = ordered_interval_prob(ctx, start, 1, big_t, opt.dist);
    const double share = opt.order_statistic ? 1.0 : 1.0 / 3.0;
    const double protection = std::exp(-contract.r * big_t) * share * one_default;

    quad::Budget budget{opt.dist.budget};
    const auto premium = quad::integrate<double>(
        [&](double s) { return std::exp(-contract.r * s) * ordered_interval_prob(ctx, start, 0, s, opt.dist); }, 0.0,
        big_t, {1e-10, 1e-15}, budget);
    if (!(premium.value > 0.0)) throw DegenerateDenominator("cds_premium: premium leg has zero value");
    return protection / premium.value;
}

struct BasketContract {
    double r = 0.0;  // per model-time unit
    double expiry = 0.0;
    double valuation_time = 0.0;
    int k = 1;

    void validate(int obligor_count) const {
        detail::require(std::isfinite(r) && r >= 0.0, "BasketContract: r must be finite and >= 0");
        detail::require(valuation_time >= 0.0 && valuation_time <= expiry,
                        "BasketContract: need 0 <= valuation time <= expiry");
        detail::require(k >= 1 && k <= obligor_count, "BasketContract: k must lie in [1, K]");
    }
};

/// V_k(t) from the conditional state at t.
inline double basket_value_from_state(const BasketContract& c, const ModelContext& ctx, const ConditionalState& state,
                                      const DistOptions& opt = {}) {
    c.validate(ctx.obligor_count());
    const double discount = std::exp(-c.r * (c.expiry - state.time));
    if (state.portfolio.default_count() >= c.k) return discount;
    return discount * (1.0 - ordered_survival(ctx, state, c.k, c.expiry, opt));
}

/// V_k(t) = e^{-r(T-t)} P(tau^k <= T | F_t), with the posterior obtained by
/// filtering `history` (events after t are ignored).
inline double basket_value(const BasketContract& c, const ModelContext& ctx, const EventHistory& history,
                           const FilterOptions& fopt = {}, const DistOptions& dopt = {}) {
    c.validate(ctx.obligor_count());
    history.validate(ctx.obligor_count());
    const FilterState fs = filter_until(history, c.valuation_time, ctx, fopt);
    return basket_value_from_state(c, ctx, ConditionalState::from(fs), dopt);
}

struct SeriesPoint {
    double time = 0.0;
    double value = 0.0;
};

/// V_k at each of `times` (increasing), filtering the history incrementally.
inline std::vector<SeriesPoint> basket_value_series(BasketContract c, const ModelContext& ctx,
                                                    const EventHistory& history, const std::vector<double>& times,
                                                    const FilterOptions& fopt = {}, const DistOptions& dopt = {}) {
    history.validate(ctx.obligor_count());
    FilterState fs(ctx, fopt);
    std::size_t next = 0;
    std::vector<SeriesPoint> out;
    double prev = -1.0;
    for (double t : times) {
        detail::require(t > prev, "basket_value_series: times must be strictly increasing");
        prev = t;
        for (; next < history.events.size() && history.events[next].time <= t; ++next) fs.advance(history.events[next]);
        fs.advance_no_event(t);
        c.valuation_time = t;
        out.push_back({t, basket_value_from_state(c, ctx, ConditionalState::from(fs), dopt)});
    }
    return out;
}

/// Copy of `model` with one coefficient ('a', 'b' or 'c') replaced.
inline IntensityModel with_coefficient(const IntensityModel& model, const std::string& name, double value) {
    detail::require(name == "a" || name == "b" || name == "c", "unknown coefficient '" + name + "'");
    auto set = [&](auto coeffs) {
        (name == "a" ? coeffs.a : name == "b" ? coeffs.b : coeffs.c) = value;
        return IntensityModel(coeffs, model.obligor_count());
    };
    if (auto* l = std::get_if<LinearContagion>(&model.variant())) return set(*l);
    if (auto* e = std::get_if<ExpDecayContagion>(&model.variant())) return set(*e);
    throw InvalidArgument("coefficient sweeps need a built-in intensity");
}

struct SensitivityRow {
    double value = 0.0;
    double premium = 0.0;
};

/// One-at-a-time sweep of a coefficient, the others held at base values.
inline std::vector<SensitivityRow> premium_sensitivity(const CdsContract& contract, const ModelContext& base,
                                                       const std::string& coefficient,
                                                       const std::vector<double>& grid, const CdsOptions& opt = {}) {
    detail::require(!grid.empty(), "premium_sensitivity: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        detail::require(grid[i] > grid[i - 1], "premium_sensitivity: grid must be strictly increasing");
    std::vector<SensitivityRow> rows;
    for (double v : grid) {
        ModelContext ctx{base.chain, base.obs, with_coefficient(base.model, coefficient, v)};
        rows.push_back({v, cds_premium(contract, ctx, opt)});
    }
    return rows;
}

}  // namespace hmmcredit
