#pragma once

// Joint and ordered default-time distributions given the information at a
// valuation time t.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "hmmcredit/chain.hpp"
#include "hmmcredit/error.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/mc.hpp"
#include "hmmcredit/model.hpp"
#include "hmmcredit/quadrature.hpp"
#include "hmmcredit/random.hpp"

namespace hmmcredit {

/// What is known at the valuation time: the posterior of X and the defaults.
/// Future Y jumps carry no information about future defaults beyond what the
/// posterior already holds, so Y does not appear.
struct ConditionalState {
    double time = 0.0;
    Posterior posterior;
    PortfolioState portfolio{1};

    static ConditionalState initial(const ModelContext& ctx) {
        return {0.0, Posterior::point_mass(ctx.chain.initial_state), PortfolioState(ctx.obligor_count())};
    }
    static ConditionalState from(const FilterState& fs) { return {fs.time(), fs.posterior(), fs.portfolio()}; }
};

enum class OrderedMethod { Auto, Nested, Grid };

struct DistOptions {
    double epsilon = 1e-4;  // per-step budget for time-dependent intensities
    quad::Tolerance tol{1e-6, 1e-13};
    std::int64_t budget = 1'000'000;
    OrderedMethod method = OrderedMethod::Auto;
    std::size_t mc_paths = 100'000;
    std::uint64_t seed = 1;
};

namespace detail {

/// Phi-bar over [s0, s0+t] with exponent -(sum of surviving intensities).
inline Mat2 survival_factor(const ModelContext& ctx, const PortfolioState& port, double s0, double t, double eps) {
    return phi_inhomogeneous(ctx.chain, survival_rate_function(ctx.model, port), s0, t, eps);
}

/// Survival factor for a symmetric model with `defaults` names gone.
inline TimeRateFunction count_rate_function(const IntensityModel& model, int defaults) {
    const double n = model.obligor_count() - defaults;
    if (model.time_homogeneous()) {
        TimeRateFunction f =
            TimeRateFunction::constant_rate({-n * model.single(0.0, 0, defaults), -n * model.single(0.0, 1, defaults)});
        f.bound = std::max(f.bound, n * model.lambda_max());
        return f;
    }
    TimeRateFunction f;
    f.rate = [&model, n, defaults](double t) {
        return RateVector{-n * model.single(t, 0, defaults), -n * model.single(t, 1, defaults)};
    };
    f.bound = n * model.lambda_max();
    return f;
}

inline void require_symmetric(const IntensityModel& model) {
    require(model.symmetric() && !std::holds_alternative<CustomIntensity>(model.variant()),
            "ordered default distributions need a homogeneous symmetric built-in intensity");
}

inline Vec2 ones() { return {1.0, 1.0}; }

}  // namespace detail

/// d/dt of the survival factor Phi-bar(s0, u, t): analytic when the exponent
/// is constant, 4th-order central differences with Richardson extrapolation
/// otherwise.
inline Mat2 survival_factor_derivative(const ModelContext& ctx, const PortfolioState& port, double s0, double t,
                                       double eps) {
    const TimeRateFunction f = survival_rate_function(ctx.model, port);
    if (f.constant) return phi_homogeneous_derivative(ctx.chain, f(s0), t);
    auto central = [&](double h) {
        const Mat2 p2 = phi_inhomogeneous(ctx.chain, f, s0, t + 2 * h, eps);
        const Mat2 p1 = phi_inhomogeneous(ctx.chain, f, s0, t + h, eps);
        const Mat2 m1 = phi_inhomogeneous(ctx.chain, f, s0, t - h, eps);
        const Mat2 m2 = phi_inhomogeneous(ctx.chain, f, s0, t - 2 * h, eps);
        return (m2 - p2 + (p1 - m1) * 8.0) * (1.0 / (12.0 * h));
    };
    const double h = 1e-5 * std::max(t, 1e-3);
    detail::require(t > 4 * h, "survival_factor_derivative: duration too short");
    const Mat2 coarse = central(h);
    const Mat2 fine = central(0.5 * h);
    return fine + (fine - coarse) * (1.0 / 15.0);
}

/// Density of every surviving obligor defaulting at its assigned time, given
/// the conditional state. `assignment` lists (obligor, time) for each
/// survivor; the order of the list does not matter.
inline double joint_density(const ModelContext& ctx, const ConditionalState& state,
                            std::vector<DefaultRecord> assignment, const DistOptions& opt = {}) {
    const PortfolioState& port0 = state.portfolio;
    detail::require(static_cast<int>(assignment.size()) == port0.survivor_count(),
                    "joint_density: assign a time to every surviving obligor");
    std::sort(assignment.begin(), assignment.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    double prev = std::max(state.time, port0.last_default_time());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        detail::require(!port0.has_defaulted(assignment[i].obligor), "joint_density: obligor already defaulted");
        detail::require(assignment[i].time > prev, "joint_density: candidate times must be strictly increasing");
        prev = assignment[i].time;
    }

    Vec2 v = state.posterior.vec();
    PortfolioState port = port0;
    prev = state.time;
    for (const auto& d : assignment) {
        v = v * detail::survival_factor(ctx, port, prev, d.time - prev, opt.epsilon);
        v = Vec2{v[0] * intensity(ctx.model, d.obligor, d.time, 0, port),
                 v[1] * intensity(ctx.model, d.obligor, d.time, 1, port)};
        port.add_default(d.obligor, d.time);
        prev = d.time;
    }
    return v.sum();
}

namespace detail {

struct SurvivalRecursion {
    const ModelContext& ctx;
    const std::vector<double>& threshold;  // indexed by obligor - 1
    const DistOptions& opt;
    quad::Budget& budget;

    /// Column vector over X at time tau: probability that every survivor of
    /// `port` outlives its threshold.
    Vec2 operator()(double tau, const PortfolioState& port) const {
        const auto rest = port.survivors();
        double last = tau;
        for (int o : rest) last = std::max(last, threshold[static_cast<std::size_t>(o - 1)]);
        if (last <= tau) return ones();

        Vec2 w = survival_factor(ctx, port, tau, last - tau, opt.epsilon) * ones();
        std::vector<double> breaks;
        for (int o : rest) breaks.push_back(threshold[static_cast<std::size_t>(o - 1)]);
        for (int o : rest) {
            const double lo = std::max(tau, threshold[static_cast<std::size_t>(o - 1)]);
            if (lo >= last) continue;
            auto integrand = [&](double sigma) {
                const PortfolioState next = port.with_default(o, sigma);
                const Vec2 tail = (*this)(sigma, next);
                const Vec2 hit{intensity(ctx.model, o, sigma, 0, port) * tail[0],
                               intensity(ctx.model, o, sigma, 1, port) * tail[1]};
                return survival_factor(ctx, port, tau, sigma - tau, opt.epsilon) * hit;
            };
            w = w + quad::integrate<Vec2>(integrand, lo, last, opt.tol, budget, breaks).value;
        }
        return w;
    }
};

}  // namespace detail

/// P(every surviving obligor outlives its threshold | state). `thresholds`
/// lists (obligor, time) for every survivor. Up to three survivors the
/// probability is computed by nested quadrature (std_error 0); beyond that by
/// simulation, with the estimator's standard error.
inline Estimate joint_survival(const ModelContext& ctx, const ConditionalState& state,
                               const std::vector<DefaultRecord>& thresholds, const DistOptions& opt = {}) {
    const PortfolioState& port = state.portfolio;
    const int dim = port.survivor_count();
    detail::require(static_cast<int>(thresholds.size()) == dim, "joint_survival: give a threshold for every survivor");
    detail::require(dim <= 10, "joint_survival: more than 10 survivors is not supported");

    std::vector<double> thr(static_cast<std::size_t>(port.obligor_count()), state.time);
    bool infinite = false;
    for (const auto& d : thresholds) {
        detail::require(d.obligor >= 1 && d.obligor <= port.obligor_count() && !port.has_defaulted(d.obligor),
                        "joint_survival: thresholds must refer to surviving obligors");
        detail::require(d.time >= state.time, "joint_survival: thresholds must be >= the valuation time");
        thr[static_cast<std::size_t>(d.obligor - 1)] = d.time;
        if (std::isinf(d.time)) infinite = true;
    }
    if (infinite) {
        detail::require(ctx.model.intensity_floor() > 0.0,
                        "joint_survival: infinite thresholds need an intensity bounded away from zero");
        return {0.0, 0.0, 0};
    }

    if (dim <= 3) {
        quad::Budget budget{opt.budget};
        detail::SurvivalRecursion rec{ctx, thr, opt, budget};
        const Vec2 col = rec(state.time, port);
        return {state.posterior.p0 * col[0] + state.posterior.p1 * col[1], 0.0, 0};
    }

    double horizon = state.time;
    for (double v : thr) horizon = std::max(horizon, v);
    std::size_t hits = 0;
    const ForwardStart start{state.time, state.posterior, port, 0};
    for (std::size_t p = 0; p < opt.mc_paths; ++p) {
        Stream rng(opt.seed, p);
        if (horizon <= state.time) {
            ++hits;
            continue;
        }
        const ForwardPath path = simulate_forward(ctx, start, horizon, rng, false);
        bool ok = true;
        for (const auto& d : path.defaults)
            if (d.time <= thr[static_cast<std::size_t>(d.obligor - 1)]) ok = false;
        hits += ok ? 1 : 0;
    }
    return empirical_proportion(hits, opt.mc_paths);
}

namespace detail {

/// P(N_s - m = k - m | state) by nested adaptive quadrature of the
/// count-level recursion.
inline double ordered_nested(const ModelContext& ctx, const ConditionalState& state, int k, double s,
                             const DistOptions& opt) {
    const int m = state.portfolio.default_count();
    const int big_k = ctx.obligor_count();
    quad::Budget budget{opt.budget};
    std::vector<TimeRateFunction> rate;
    for (int l = 0; l <= big_k; ++l) rate.push_back(count_rate_function(ctx.model, l));

    std::function<Vec2(int, double)> g = [&](int l, double tau) -> Vec2 {
        if (l == k) return phi_inhomogeneous(ctx.chain, rate[static_cast<std::size_t>(l)], tau, s - tau, opt.epsilon) * ones();
        if (tau >= s) return {};
        auto integrand = [&](double sigma) {
            const double n = big_k - l;
            const Vec2 next = g(l + 1, sigma);
            const Vec2 hit{n * ctx.model.single(sigma, 0, l) * next[0], n * ctx.model.single(sigma, 1, l) * next[1]};
            return phi_inhomogeneous(ctx.chain, rate[static_cast<std::size_t>(l)], tau, sigma - tau, opt.epsilon) * hit;
        };
        return quad::integrate<Vec2>(integrand, tau, s, opt.tol, budget).value;
    };
    const Vec2 col = g(m, state.time);
    return state.posterior.p0 * col[0] + state.posterior.p1 * col[1];
}

/// Same quantity on a uniform grid: each level is propagated backwards from
/// s cell by cell, with the next level interpolated by cubic Lagrange
/// polynomials inside the 15-point panel rule.
inline double ordered_grid(const ModelContext& ctx, const ConditionalState& state, int k, double s,
                           const DistOptions& opt) {
    const int m = state.portfolio.default_count();
    const int big_k = ctx.obligor_count();
    const double len = s - state.time;
    const double rate_scale = (big_k - m) * ctx.model.lambda_max() + ctx.chain.theta0 + ctx.chain.theta1;
    const double h_max = rate_scale > 0.0 ? 0.02 / rate_scale : len;
    const auto n = static_cast<std::size_t>(std::clamp(std::ceil(len / h_max), 64.0, 200000.0));
    const double h = len / static_cast<double>(n);
    auto node = [&](std::size_t i) { return i == n ? s : state.time + h * static_cast<double>(i); };

    constexpr int kPanel = 15;
    std::array<double, kPanel> offsets{};
    {
        std::size_t q = 0;
        for (std::size_t j = 0; j < 7; ++j) {
            offsets[q++] = 0.5 * h * (1.0 - quad::detail::kXk[j]);
            offsets[q++] = 0.5 * h * (1.0 + quad::detail::kXk[j]);
        }
        offsets[q] = 0.5 * h;
    }
    std::array<double, kPanel> weights{};
    for (std::size_t j = 0; j < 7; ++j) weights[2 * j] = weights[2 * j + 1] = 0.5 * h * quad::detail::kWk[j];
    weights[14] = 0.5 * h * quad::detail::kWk[7];

    // Level k: no further default before s.
    std::vector<Vec2> upper(n + 1), lower(n + 1);
    auto rate_k = count_rate_function(ctx.model, k);
    upper[n] = ones();
    std::vector<Mat2> cell(n);
    auto fill_cells = [&](const TimeRateFunction& r) {
        if (r.constant) {
            const Mat2 c = phi_homogeneous(ctx.chain, r(0.0), h);
            std::fill(cell.begin(), cell.end(), c);
        } else {
            for (std::size_t i = 0; i < n; ++i) cell[i] = phi_inhomogeneous(ctx.chain, r, node(i), node(i + 1) - node(i), opt.epsilon);
        }
    };
    fill_cells(rate_k);
    for (std::size_t i = n; i-- > 0;) upper[i] = cell[i] * upper[i + 1];

    auto interp = [&](const std::vector<Vec2>& g, double x) {
        const double pos = (x - state.time) / h;
        auto base = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
        base = std::clamp<std::ptrdiff_t>(base, 0, static_cast<std::ptrdiff_t>(n) - 3);
        Vec2 out{};
        for (std::ptrdiff_t a = 0; a < 4; ++a) {
            double w = 1.0;
            for (std::ptrdiff_t b = 0; b < 4; ++b)
                if (b != a) w *= (pos - static_cast<double>(base + b)) / static_cast<double>(a - b);
            out = out + g[static_cast<std::size_t>(base + a)] * w;
        }
        return out;
    };

    for (int l = k - 1; l >= m; --l) {
        const auto r = count_rate_function(ctx.model, l);
        fill_cells(r);
        std::array<Mat2, kPanel> partial{};
        if (r.constant)
            for (int q = 0; q < kPanel; ++q) partial[static_cast<std::size_t>(q)] = phi_homogeneous(ctx.chain, r(0.0), offsets[static_cast<std::size_t>(q)]);
        const double names = big_k - l;
        lower[n] = {};
        for (std::size_t i = n; i-- > 0;) {
            const double t0 = node(i);
            Vec2 acc{};
            for (std::size_t q = 0; q < kPanel; ++q) {
                const double sigma = t0 + offsets[q];
                const Vec2 next = interp(upper, sigma);
                const Vec2 hit{names * ctx.model.single(sigma, 0, l) * next[0], names * ctx.model.single(sigma, 1, l) * next[1]};
                const Mat2 p = r.constant ? partial[q] : phi_inhomogeneous(ctx.chain, r, t0, offsets[q], opt.epsilon);
                acc = acc + (p * hit) * weights[q];
            }
            lower[i] = cell[i] * lower[i + 1] + acc;
        }
        std::swap(upper, lower);
    }
    return state.posterior.p0 * upper[0][0] + state.posterior.p1 * upper[0][1];
}

}  // namespace detail

/// P(exactly k names have defaulted by s | state), i.e. tau^k <= s < tau^{k+1}.
inline double ordered_interval_prob(const ModelContext& ctx, const ConditionalState& state, int k, double s,
                                    const DistOptions& opt = {}) {
    detail::require_symmetric(ctx.model);
    const int m = state.portfolio.default_count();
    const int big_k = ctx.obligor_count();
    detail::require(k >= m && k <= big_k, "ordered_interval_prob: k must lie in [defaults so far, K]");
    detail::require(s >= state.time, "ordered_interval_prob: s must be >= the valuation time");
    if (std::isinf(s)) {
        detail::require(ctx.model.intensity_floor() > 0.0 || k == m,
                        "ordered_interval_prob: s = infinity needs an intensity bounded away from zero");
        if (ctx.model.intensity_floor() > 0.0) return k == big_k ? 1.0 : 0.0;
    }
    if (s == state.time) return k == m ? 1.0 : 0.0;
    if (k == m) {
        const Vec2 col = phi_inhomogeneous(ctx.chain, detail::count_rate_function(ctx.model, m), state.time,
                                           s - state.time, opt.epsilon) *
                         detail::ones();
        return state.posterior.p0 * col[0] + state.posterior.p1 * col[1];
    }
    OrderedMethod method = opt.method;
    if (method == OrderedMethod::Auto)
        method = (k - m <= 3 && ctx.model.time_homogeneous()) ? OrderedMethod::Nested : OrderedMethod::Grid;
    return method == OrderedMethod::Nested ? detail::ordered_nested(ctx, state, k, s, opt)
                                           : detail::ordered_grid(ctx, state, k, s, opt);
}

/// P(tau^k > s | state): fewer than k defaults by s.
inline double ordered_survival(const ModelContext& ctx, const ConditionalState& state, int k, double s,
                               const DistOptions& opt = {}) {
    detail::require_symmetric(ctx.model);
    const int m = state.portfolio.default_count();
    detail::require(k >= 1 && k <= ctx.obligor_count(), "ordered_survival: k must lie in [1, K]");
    if (k <= m) return 0.0;
    double sum = 0.0;
    for (int i = m; i < k; ++i) sum += ordered_interval_prob(ctx, state, i, s, opt);
    return sum;
}

}  // namespace hmmcredit
