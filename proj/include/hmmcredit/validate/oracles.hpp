#pragma once

// Brute-force reference computations. These deliberately avoid the library's
// own filter, quadrature and hazard machinery so they can referee it.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hmmcredit/chain.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/mc.hpp"
#include "hmmcredit/model.hpp"
#include "hmmcredit/random.hpp"

namespace hmmcredit::validate {

/// Per end state j: E[exp(int u(X)) ; X_t = j | X_0 = i] and the number of
/// paths that ended in j.
struct OccupationResult {
    std::array<Estimate, 2> phi;
    std::array<std::size_t, 2> ended{0, 0};
    /// E[exp(int u) | X_t = j], ratio estimator with delta-method SE.
    std::array<Estimate, 2> psi;
};

/// `integral(x, a, b)` returns the integral of u_x over [a, b].
inline OccupationResult occupation_mc(const ChainSpec& chain, int i, double s0, double t,
                                      const std::function<double(int, double, double)>& integral, std::size_t n,
                                      std::uint64_t seed) {
    std::array<double, 2> sum{0, 0}, sum_sq{0, 0};
    OccupationResult out;
    for (std::size_t p = 0; p < n; ++p) {
        Stream rng(seed, p);
        int x = i;
        double now = s0;
        double acc = 0.0;
        const double end = s0 + t;
        for (;;) {
            const double rate = chain.rate_out(x);
            const double next = rate > 0.0 ? now + rng.exponential() / rate : end;
            if (next >= end) {
                acc += integral(x, now, end);
                break;
            }
            acc += integral(x, now, next);
            now = next;
            x ^= 1;
        }
        const double w = std::exp(acc);
        sum[static_cast<std::size_t>(x)] += w;
        sum_sq[static_cast<std::size_t>(x)] += w * w;
        ++out.ended[static_cast<std::size_t>(x)];
    }
    const double nn = static_cast<double>(n);
    for (std::size_t j = 0; j < 2; ++j) {
        const double mean = sum[j] / nn;
        const double var = sum_sq[j] / nn - mean * mean;
        out.phi[j] = {mean, std::sqrt(std::max(var, 0.0) / nn), n};
        if (out.ended[j] >= 2) {
            const double m = static_cast<double>(out.ended[j]);
            const double cmean = sum[j] / m;
            const double cvar = sum_sq[j] / m - cmean * cmean;
            out.psi[j] = {cmean, std::sqrt(std::max(cvar, 0.0) / m), out.ended[j]};
        }
    }
    return out;
}

/// Constant exponent u.
inline OccupationResult occupation_mc(const ChainSpec& chain, const RateVector& u, int i, double t, std::size_t n,
                                      std::uint64_t seed) {
    return occupation_mc(
        chain, i, 0.0, t, [&u](int x, double a, double b) { return u[x] * (b - a); }, n, seed);
}

/// One simulated history of (X, Y, defaults), stopped early once `keep`
/// says the path can no longer be accepted.
struct RawPath {
    std::vector<double> x_switches;
    std::vector<double> y_jumps;
    std::vector<DefaultRecord> defaults;
    int x0 = 0;
    int x_at(double t) const {
        int s = x0;
        for (double v : x_switches)
            if (v <= t) s ^= 1;
        return s;
    }
};

/// Direct simulation of the full model by thinning, for built-in intensities
/// only. `keep(path)` is polled after each event; returning false aborts.
inline bool simulate_raw(const ModelContext& ctx, double horizon, Stream& rng, RawPath& out,
                         const std::function<bool(const RawPath&)>& keep) {
    out = RawPath{};
    int x = ctx.chain.initial_state;
    int y = ctx.obs.y_initial;
    out.x0 = x;
    const int big_k = ctx.obligor_count();
    const double cap = ctx.model.lambda_max();
    double t = 0.0;
    std::vector<char> alive(static_cast<std::size_t>(big_k), 1);
    for (;;) {
        const int m = static_cast<int>(out.defaults.size());
        const int n = big_k - m;
        const double rx = ctx.chain.rate_out(x);
        const double ry = ctx.obs.rates_out_of(y)[x];
        const double total = rx + ry + n * cap;
        if (total <= 0.0) return true;
        t += rng.exponential() / total;
        if (t > horizon) return true;
        double u = rng.uniform() * total;
        if (u < rx) {
            out.x_switches.push_back(t);
            x ^= 1;
        } else if ((u -= rx) < ry) {
            out.y_jumps.push_back(t);
            y ^= 1;
        } else {
            u -= ry;
            if (!(ctx.model.single(t, x, m) > (u - cap * std::floor(u / cap)))) continue;
            auto slot = static_cast<int>(u / cap);
            slot = std::min(slot, n - 1);
            int who = 0;
            for (int i = 0, seen = 0; i < big_k; ++i)
                if (alive[static_cast<std::size_t>(i)] && seen++ == slot) who = i + 1;
            alive[static_cast<std::size_t>(who - 1)] = 0;
            out.defaults.push_back({who, t});
        }
        if (!keep(out)) return false;
    }
}

struct ConditionalFrequency {
    std::size_t accepted = 0;
    Estimate p0;
};

/// Frequency of X_t = x0 among simulated paths with no Y jump and no default
/// in [0, t].
inline ConditionalFrequency no_event_oracle(const ModelContext& ctx, double t, std::size_t n, std::uint64_t seed) {
    std::size_t hits = 0, acc = 0;
    RawPath path;
    for (std::size_t p = 0; p < n; ++p) {
        Stream rng(seed, p);
        const bool ok = simulate_raw(ctx, t, rng, path,
                                     [](const RawPath& r) { return r.y_jumps.empty() && r.defaults.empty(); });
        if (!ok) continue;
        ++acc;
        hits += path.x_at(t) == 0 ? 1 : 0;
    }
    return {acc, acc ? empirical_proportion(hits, acc) : Estimate{}};
}

struct JumpScenarioFrequency {
    std::size_t accepted = 0;
    Estimate p0_at_jump;
    Estimate p0_at_end;
};

/// Paths whose only observable event in [0, end] is a single Y jump inside
/// [jump_lo, jump_hi]: frequency of X = x0 at the jump and at `end`.
inline JumpScenarioFrequency jump_scenario_oracle(const ModelContext& ctx, double jump_lo, double jump_hi, double end,
                                                  std::size_t n, std::uint64_t seed) {
    std::size_t acc = 0, at_jump = 0, at_end = 0;
    RawPath path;
    auto keep = [&](const RawPath& r) {
        if (!r.defaults.empty() || r.y_jumps.size() > 1) return false;
        if (r.y_jumps.size() == 1 && (r.y_jumps[0] < jump_lo || r.y_jumps[0] > jump_hi)) return false;
        return true;
    };
    for (std::size_t p = 0; p < n; ++p) {
        Stream rng(seed, p);
        if (!simulate_raw(ctx, end, rng, path, keep)) continue;
        if (path.y_jumps.size() != 1) continue;
        ++acc;
        at_jump += path.x_at(path.y_jumps[0]) == 0 ? 1 : 0;
        at_end += path.x_at(end) == 0 ? 1 : 0;
    }
    if (acc == 0) return {};
    return {acc, empirical_proportion(at_jump, acc), empirical_proportion(at_end, acc)};
}

}  // namespace hmmcredit::validate
