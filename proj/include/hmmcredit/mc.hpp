#pragma once

// Monte Carlo: exact simulation of the hidden and observed chains, the total
// hazard construction of default times, and summary estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hmmcredit/chain.hpp"
#include "hmmcredit/error.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/model.hpp"
#include "hmmcredit/quadrature.hpp"
#include "hmmcredit/random.hpp"

namespace hmmcredit {

inline constexpr double kBeyondHorizon = std::numeric_limits<double>::infinity();

/// Piecewise-constant two-state path on [start, horizon].
struct ChainPath {
    int initial_state = 0;
    std::vector<double> switches;  // strictly increasing, in (start, horizon]
    double start = 0.0;
    double horizon = 0.0;

    int state_at(double t) const {
        const auto n = std::upper_bound(switches.begin(), switches.end(), t) - switches.begin();
        return (initial_state + static_cast<int>(n)) % 2;
    }

    /// Calls fn(p0, p1, state) for each constant piece of [from, to].
    /// fn returns true to stop early.
    template <class Fn>
    void for_each_piece(double from, double to, Fn&& fn) const {
        auto it = std::upper_bound(switches.begin(), switches.end(), from);
        int state = (initial_state + static_cast<int>(it - switches.begin())) % 2;
        double p0 = from;
        while (p0 < to) {
            const double p1 = it == switches.end() ? to : std::min(*it, to);
            if (p1 > p0 && fn(p0, p1, state)) return;
            if (it == switches.end() || *it >= to) return;
            p0 = *it;
            ++it;
            state ^= 1;
        }
    }
};

/// Y has the same representation; jumps play the role of switches.
using YPath = ChainPath;

/// Exact event-driven simulation of the coupled (X, Y) chain on [0, horizon].
inline std::pair<ChainPath, YPath> sample_joint_paths(const ChainSpec& chain, const ObservationSpec& obs,
                                                      double horizon, Stream& rng) {
    detail::require(horizon > 0.0, "sample_joint_paths: horizon must be positive");
    ChainPath x{chain.initial_state, {}, 0.0, horizon};
    YPath y{obs.y_initial, {}, 0.0, horizon};
    int xs = chain.initial_state;
    int ys = obs.y_initial;
    double t = 0.0;
    for (;;) {
        const double rx = chain.rate_out(xs);
        const double ry = obs.rates_out_of(ys)[xs];
        const double total = rx + ry;
        if (total <= 0.0) break;
        t += rng.exponential() / total;
        if (t > horizon) break;
        if (rng.uniform() * total < rx) {
            x.switches.push_back(t);
            xs ^= 1;
        } else {
            y.switches.push_back(t);
            ys ^= 1;
        }
    }
    return {std::move(x), std::move(y)};
}

/// Hazard accumulated by `obligor` over [from, to] with the default set fixed
/// at `port`, along the X path.
inline double segment_hazard(const IntensityModel& model, int obligor, const PortfolioState& port,
                             const ChainPath& x, double from, double to) {
    double total = 0.0;
    if (to <= from) return 0.0;
    const int m = port.default_count();
    if (auto* l = std::get_if<LinearContagion>(&model.variant())) {
        x.for_each_piece(from, to, [&](double p0, double p1, int s) {
            total += (l->a + l->b * s + l->c * m) * (p1 - p0);
            return false;
        });
    } else if (auto* e = std::get_if<ExpDecayContagion>(&model.variant())) {
        const double lead = e->a + e->c * m;
        x.for_each_piece(from, to, [&](double p0, double p1, int s) {
            total += lead * (std::exp(-p0) - std::exp(-p1)) + e->b * s * (p1 - p0);
            return false;
        });
    } else {
        x.for_each_piece(from, to, [&](double p0, double p1, int s) {
            quad::Budget budget{10'000'000};
            total += quad::integrate<double>([&](double u) { return model.evaluate(obligor, u, s, port); }, p0, p1,
                                             {1e-12, 1e-15}, budget)
                         .value;
            return false;
        });
    }
    return total;
}

/// Total hazard of `obligor` by time t: the hazard of each inter-default
/// segment under the default set then in force, summed.
inline double total_hazard(const IntensityModel& model, int obligor, double t, const PortfolioState& port,
                           const ChainPath& x) {
    detail::require(!port.has_defaulted(obligor) || t <= port.defaults().back().time,
                    "total_hazard: obligor has defaulted before t");
    PortfolioState running(port.obligor_count());
    double prev = x.start;
    double sum = 0.0;
    for (const auto& d : port.defaults()) {
        if (d.time >= t) break;
        sum += segment_hazard(model, obligor, running, x, prev, d.time);
        running.add_default(d.obligor, d.time);
        prev = d.time;
    }
    return sum + segment_hazard(model, obligor, running, x, prev, t);
}

/// Smallest duration s with segment_hazard(from, from + s) >= target, or
/// kBeyondHorizon when the hazard stays below target up to the path horizon.
inline double inverse_hazard(double target, const IntensityModel& model, int obligor, const PortfolioState& port,
                             const ChainPath& x, double from) {
    detail::require(target >= 0.0, "inverse_hazard: target must be >= 0");
    if (target == 0.0) return 0.0;
    const int m = port.default_count();
    double acc = 0.0;
    double found = kBeyondHorizon;

    auto piece_hazard = [&](double p0, double p1, int s) -> double {
        if (auto* l = std::get_if<LinearContagion>(&model.variant())) return (l->a + l->b * s + l->c * m) * (p1 - p0);
        if (auto* e = std::get_if<ExpDecayContagion>(&model.variant()))
            return (e->a + e->c * m) * (std::exp(-p0) - std::exp(-p1)) + e->b * s * (p1 - p0);
        quad::Budget budget{10'000'000};
        return quad::integrate<double>([&](double u) { return model.evaluate(obligor, u, s, port); }, p0, p1,
                                       {1e-12, 1e-15}, budget)
            .value;
    };

    x.for_each_piece(from, x.horizon, [&](double p0, double p1, int s) {
        const double h = piece_hazard(p0, p1, s);
        if (acc + h < target) {
            acc += h;
            return false;
        }
        const double need = target - acc;
        if (auto* l = std::get_if<LinearContagion>(&model.variant())) {
            found = p0 + need / (l->a + l->b * s + l->c * m) - from;
            found = std::min(found, p1 - from);
            return true;
        }
        double lo = p0, hi = p1;
        while (hi - lo > 1e-12 * std::max(1.0, std::abs(hi))) {
            const double mid = 0.5 * (lo + hi);
            if (piece_hazard(p0, mid, s) >= need)
                hi = mid;
            else
                lo = mid;
        }
        found = hi - from;
        return true;
    });
    return found;
}

struct SimulationOptions {
    /// Resample X beyond each default from its conditional law; when false the
    /// X path drawn in the first step is used throughout.
    bool resample_x = true;
    /// Stop after this many defaults (0 = run to K or the horizon).
    int stop_after = 0;
    /// Error budget that sets the resampling grid step.
    double resample_epsilon = 1e-3;
};

struct SimulatedPath {
    std::vector<DefaultRecord> defaults;  // censored obligors omitted
    ChainPath x;                          // X actually used for the hazards
    YPath y;
};

namespace detail {

/// Forward-filter / backward-sample X on [from, horizon] given the Y path
/// there and the posterior at `from`.
inline ChainPath ffbs_segment(const ChainSpec& chain, const ObservationSpec& obs, const YPath& y,
                              const Posterior& start, double from, double horizon, double epsilon, Stream& rng) {
    ChainPath out{0, {}, from, horizon};
    const double len = horizon - from;
    const double bound = obs.max_rate();
    const double h_max = bound > 0.0 ? step_size(epsilon, bound) : len;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / h_max - 1e-12)));
    const double h = len / static_cast<double>(n);

    thread_local std::vector<Mat2> lik;
    thread_local std::vector<Vec2> alpha;
    lik.resize(n);
    alpha.resize(n + 1);

    const Mat2 quiet[2] = {phi_homogeneous(chain, obs.eta0 * -1.0, h), phi_homogeneous(chain, obs.eta1 * -1.0, h)};

    auto jump_it = std::upper_bound(y.switches.begin(), y.switches.end(), from);
    int ys = y.state_at(from);
    alpha[0] = start.vec();
    for (std::size_t k = 0; k < n; ++k) {
        const double g0 = from + h * static_cast<double>(k);
        const double g1 = k + 1 == n ? horizon : g0 + h;
        if (jump_it == y.switches.end() || *jump_it > g1) {
            lik[k] = quiet[ys];
        } else {
            Mat2 m = Mat2::identity();
            double p = g0;
            while (jump_it != y.switches.end() && *jump_it <= g1) {
                const Vec2& eta = obs.rates_out_of(ys);
                m *= scale_columns(phi_homogeneous(chain, eta * -1.0, *jump_it - p), eta);
                p = *jump_it;
                ys ^= 1;
                ++jump_it;
            }
            m *= phi_homogeneous(chain, obs.rates_out_of(ys) * -1.0, g1 - p);
            lik[k] = m;
        }
        Vec2 next = alpha[k] * lik[k];
        const double s = next.sum();
        if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateEvidence("resampling: Y path has zero likelihood", 0);
        alpha[k + 1] = next * (1.0 / s);
    }

    auto draw = [&rng](double w0, double w1) { return rng.uniform() * (w0 + w1) < w0 ? 0 : 1; };
    int next_state = draw(alpha[n][0], alpha[n][1]);
    thread_local std::vector<int> states;
    states.assign(n + 1, 0);
    states[n] = next_state;
    for (std::size_t k = n; k-- > 0;) {
        const double w0 = alpha[k][0] * lik[k](0, next_state);
        const double w1 = alpha[k][1] * lik[k](1, next_state);
        next_state = draw(w0, w1);
        states[k] = next_state;
    }
    out.initial_state = states[0];
    for (std::size_t k = 0; k < n; ++k)
        if (states[k + 1] != states[k]) out.switches.push_back(from + h * (static_cast<double>(k) + rng.uniform()));
    return out;
}

/// Replaces the part of `base` after `from` by `tail` (which starts at from).
inline ChainPath splice(const ChainPath& base, const ChainPath& tail, double from) {
    ChainPath out{base.initial_state, {}, base.start, tail.horizon};
    for (double s : base.switches)
        if (s <= from) out.switches.push_back(s);
    if (base.state_at(from) != tail.initial_state) out.switches.push_back(from);
    for (double s : tail.switches) out.switches.push_back(s);
    // A switch placed exactly at `from` when base already switched there.
    out.switches.erase(std::unique(out.switches.begin(), out.switches.end()), out.switches.end());
    return out;
}

}  // namespace detail

/// Samples X on [from_time, horizon] given the whole Y path and the default
/// record up to from_time (the filter's state there).
inline ChainPath resample_x_given_observables(const ModelContext& ctx, const YPath& y, const FilterState& at_from,
                                              double horizon, Stream& rng, double epsilon = 1e-3) {
    detail::require(horizon >= at_from.time(), "resample_x_given_observables: horizon before from_time");
    if (horizon == at_from.time()) {
        const Posterior& p = at_from.posterior();
        return {rng.uniform() < p.p0 ? 0 : 1, {}, horizon, horizon};
    }
    return detail::ffbs_segment(ctx.chain, ctx.obs, y, at_from.posterior(), at_from.time(), horizon, epsilon, rng);
}

/// Filter state at `t` from the Y path (jumps <= t) and the defaults so far.
inline FilterState observables_filter(const ModelContext& ctx, const YPath& y, const PortfolioState& port, double t) {
    std::vector<Event> events;
    for (double s : y.switches)
        if (s <= t) events.push_back(Event::yjump(s));
    for (const auto& d : port.defaults())
        if (d.time <= t) events.push_back(Event::default_of(d.obligor, d.time));
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    FilterState fs(ctx);
    for (const auto& e : events) fs.advance(e);
    fs.advance_no_event(t);
    return fs;
}

/// One path of the total hazard construction.
inline SimulatedPath simulate_default_times(const ModelContext& ctx, double horizon, std::uint64_t seed,
                                           std::uint64_t path_id, const SimulationOptions& opt = {}) {
    detail::require(horizon > 0.0, "simulate_default_times: horizon must be positive");
    Stream rng(seed, path_id);
    const int k_total = ctx.obligor_count();
    const int stop = opt.stop_after > 0 ? std::min(opt.stop_after, k_total) : k_total;

    auto [x, y] = sample_joint_paths(ctx.chain, ctx.obs, horizon, rng);
    std::vector<double> residual(static_cast<std::size_t>(k_total));
    for (auto& e : residual) e = rng.exponential();

    SimulatedPath out;
    PortfolioState port(k_total);
    std::optional<FilterState> fs;
    std::size_t next_jump = 0;
    double from = 0.0;
    const bool symmetric = ctx.model.symmetric() && !std::holds_alternative<CustomIntensity>(ctx.model.variant());

    while (port.default_count() < stop) {
        const auto survivors = port.survivors();
        int who = -1;
        double when = kBeyondHorizon;
        if (symmetric) {
            for (int i : survivors)
                if (who < 0 || residual[static_cast<std::size_t>(i - 1)] < residual[static_cast<std::size_t>(who - 1)])
                    who = i;
            when = inverse_hazard(residual[static_cast<std::size_t>(who - 1)], ctx.model, who, port, x, from);
        } else {
            for (int i : survivors) {
                const double d = inverse_hazard(residual[static_cast<std::size_t>(i - 1)], ctx.model, i, port, x, from);
                if (d < when) {
                    when = d;
                    who = i;
                }
            }
        }
        if (!(when < kBeyondHorizon) || from + when > horizon) break;
        const double tau = from + when;

        if (symmetric) {
            const double used = segment_hazard(ctx.model, who, port, x, from, tau);
            for (int i : survivors) residual[static_cast<std::size_t>(i - 1)] -= used;
        } else {
            for (int i : survivors)
                residual[static_cast<std::size_t>(i - 1)] -= segment_hazard(ctx.model, i, port, x, from, tau);
        }
        residual[static_cast<std::size_t>(who - 1)] = 0.0;
        port.add_default(who, tau);
        out.defaults.push_back({who, tau});
        from = tau;

        if (opt.resample_x && port.default_count() < stop && port.survivor_count() > 0) {
            if (!fs) fs.emplace(ctx);
            for (; next_jump < y.switches.size() && y.switches[next_jump] < tau; ++next_jump)
                fs->advance(Event::yjump(y.switches[next_jump]));
            fs->advance(Event::default_of(who, tau));
            const ChainPath tail = resample_x_given_observables(ctx, y, *fs, horizon, rng, opt.resample_epsilon);
            x = detail::splice(x, tail, tau);
        }
    }
    out.x = std::move(x);
    out.y = std::move(y);
    return out;
}

/// Paths 0..n-1 under one seed.
inline std::vector<std::vector<DefaultRecord>> simulate_paths(const ModelContext& ctx, double horizon,
                                                               std::size_t n_paths, std::uint64_t seed,
                                                               const SimulationOptions& opt = {}) {
    detail::require(n_paths > 0, "simulate_paths: path count must be positive");
    std::vector<std::vector<DefaultRecord>> out;
    out.reserve(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p)
        out.push_back(simulate_default_times(ctx, horizon, seed, p, opt).defaults);
    return out;
}

/// Starting point for forward simulation: time, law of X, defaults so far and
/// the current Y state.
struct ForwardStart {
    double time = 0.0;
    Posterior x_law;
    PortfolioState portfolio{1};
    int y_state = 0;
};

struct ForwardPath {
    ChainPath x;
    YPath y;
    std::vector<DefaultRecord> defaults;
};

/// Direct simulation of (X, Y, defaults) from `start` to `horizon` by
/// thinning against the largest possible total event rate.
inline ForwardPath simulate_forward(const ModelContext& ctx, const ForwardStart& start, double horizon, Stream& rng,
                                    bool with_y = true) {
    ForwardPath out;
    int xs = rng.uniform() < start.x_law.p0 ? 0 : 1;
    int ys = start.y_state;
    out.x = {xs, {}, start.time, horizon};
    out.y = {ys, {}, start.time, horizon};
    PortfolioState port = start.portfolio;
    const double lmax = ctx.model.lambda_max();
    const bool homogeneous = ctx.model.time_homogeneous();
    const bool builtin = !std::holds_alternative<CustomIntensity>(ctx.model.variant());
    double t = start.time;
    for (;;) {
        const int n = port.survivor_count();
        const double rx = ctx.chain.rate_out(xs);
        const double ry = with_y ? ctx.obs.rates_out_of(ys)[xs] : 0.0;
        double cap = lmax;
        if (homogeneous && builtin && n > 0) cap = ctx.model.single(t, xs, port.default_count());
        const double total = rx + ry + n * cap;
        if (total <= 0.0) break;
        t += rng.exponential() / total;
        if (t > horizon) break;
        double u = rng.uniform() * total;
        if (u < rx) {
            out.x.switches.push_back(t);
            xs ^= 1;
            continue;
        }
        u -= rx;
        if (u < ry) {
            out.y.switches.push_back(t);
            ys ^= 1;
            continue;
        }
        u -= ry;
        if (cap <= 0.0) continue;
        // Candidate default: slot `idx` among survivors, accepted w.p. lambda / cap.
        const auto survivors = port.survivors();
        auto idx = static_cast<std::size_t>(u / cap);
        idx = std::min(idx, survivors.size() - 1);
        const double frac = u / cap - static_cast<double>(idx);
        const int who = survivors[idx];
        const double lam = ctx.model.evaluate(who, t, xs, port);
        if (frac * cap < lam) {
            port.add_default(who, t);
            out.defaults.push_back({who, t});
        }
    }
    return out;
}

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Sample mean and its standard error.
inline Estimate empirical_mean(std::span<const double> samples) {
    detail::require(samples.size() >= 2, "empirical_mean: need at least two samples");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n), samples.size()};
}

/// Proportion estimate with the binomial standard error sqrt(p(1-p)/n).
inline Estimate empirical_proportion(std::size_t successes, std::size_t n) {
    detail::require(n >= 1, "empirical_proportion: empty sample");
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n};
}

/// Fraction of samples strictly greater than t.
inline Estimate empirical_survival(std::span<const double> samples, double t) {
    detail::require(!samples.empty(), "empirical_survival: empty sample");
    const auto k = static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [t](double v) { return v > t; }));
    return empirical_proportion(k, samples.size());
}

/// Kolmogorov-Smirnov distance between the samples and a CDF. Non-finite
/// samples are censored observations: they count towards n, and the
/// comparison runs up to `horizon` only.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf,
                          double horizon = std::numeric_limits<double>::infinity()) {
    detail::require(!samples.empty(), "ks_distance: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    std::size_t finite = 0;
    for (std::size_t i = 0; i < samples.size() && std::isfinite(samples[i]); ++i, ++finite) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    if (std::isfinite(horizon)) d = std::max(d, std::abs(static_cast<double>(finite) / n - cdf(horizon)));
    return d;
}

}  // namespace hmmcredit
