#pragma once

// Two-state continuous-time Markov chain: transition probabilities,
// occupation-time moment generating functions, and the left-endpoint
// piecewise-constant approximation used for time-dependent exponents.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "hmmcredit/error.hpp"
#include "hmmcredit/mat2.hpp"

namespace hmmcredit {

/// Hidden economy chain: rate theta0 for x0 -> x1, theta1 for x1 -> x0.
struct ChainSpec {
    double theta0 = 0.0;
    double theta1 = 0.0;
    int initial_state = 0;

    void validate() const {
        detail::require(std::isfinite(theta0) && theta0 >= 0.0, "theta0 must be finite and >= 0");
        detail::require(std::isfinite(theta1) && theta1 >= 0.0, "theta1 must be finite and >= 0");
        detail::require(initial_state == 0 || initial_state == 1, "initial_state must be 0 or 1");
    }

    double rate_out(int state) const { return state == 0 ? theta0 : theta1; }

    Mat2 generator() const { return {-theta0, theta0, theta1, -theta1}; }
};

/// Per-unit-time exponent accrued while the chain sits in x0 (u0) or x1 (u1).
using RateVector = Vec2;

/// Time-dependent exponent u(tbar) on absolute time.
///
/// `bound` must dominate max(|u0|, |u1|) over the horizon it is used on.
/// Breakpoints mark discontinuities; the function is taken as
/// right-continuous there. `constant` short-circuits the partition.
struct TimeRateFunction {
    std::function<RateVector(double)> rate;
    std::vector<double> breakpoints;
    double bound = 0.0;
    bool constant = false;

    RateVector operator()(double tbar) const { return rate(tbar); }

    static TimeRateFunction constant_rate(const RateVector& u) {
        TimeRateFunction f;
        f.rate = [u](double) { return u; };
        f.bound = max_abs(u);
        f.constant = true;
        return f;
    }
};

/// Transition matrix P(t) from the closed-form two-state solution
/// (eigenvalues 0 and -(theta0+theta1)).
inline Mat2 transition_matrix(const ChainSpec& spec, double t) {
    detail::require(t >= 0.0, "transition_prob: duration must be >= 0");
    const double total = spec.theta0 + spec.theta1;
    if (total == 0.0 || t == 0.0) return Mat2::identity();
    const double frac = -std::expm1(-total * t) / total;  // (1 - e^{-total t}) / total
    const double p01 = spec.theta0 * frac;
    const double p10 = spec.theta1 * frac;
    return {1.0 - p01, p01, p10, 1.0 - p10};
}

inline double transition_prob(const ChainSpec& spec, int i, int j, double t) {
    return transition_matrix(spec, t)(i, j);
}

/// A = Q + diag(u).
inline Mat2 mgf_generator(const ChainSpec& spec, const RateVector& u) {
#ifdef HMMCREDIT_MUTATION
    // Deliberately wrong diagonal, for the negative-control build only.
    return {u[0] - spec.theta0, spec.theta0, spec.theta1, u[1] - spec.theta0};
#else
    return {u[0] - spec.theta0, spec.theta0, spec.theta1, u[1] - spec.theta1};
#endif
}

/// Phi(u, t) = exp(A t): entry (i, j) is E[exp(u . occupation) ; X_t = j | X_0 = i].
inline Mat2 phi_homogeneous(const ChainSpec& spec, const RateVector& u, double t) {
    detail::require(t >= 0.0, "phi_homogeneous: duration must be >= 0");
    return expm(mgf_generator(spec, u), t);
}

/// d/dt Phi(u, t) = Phi(u, t) A.
inline Mat2 phi_homogeneous_derivative(const ChainSpec& spec, const RateVector& u, double t) {
    const Mat2 a = mgf_generator(spec, u);
    return expm(a, t) * a;
}

/// Psi_ij(u, t) = Phi_ij(u, t) / P_ij(t), the occupation-time MGF conditioned
/// on the end state. Throws DegenerateDenominator when P_ij(t) == 0.
inline double mgf_homogeneous(const ChainSpec& spec, const RateVector& u, int i, int j, double t) {
    const double p = transition_prob(spec, i, j, t);
    if (!(p > 0.0)) throw DegenerateDenominator("mgf_homogeneous: P_ij(t) is zero");
    return phi_homogeneous(spec, u, t)(i, j) / p;
}

/// Step length that keeps the frozen-exponent MGF within `epsilon` of the
/// exact one: -ln(1 - epsilon) / rate_bound. Returns +inf when rate_bound is 0.
inline double step_size(double epsilon, double rate_bound) {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "step_size: epsilon must lie in (0, 1)");
    detail::require(rate_bound >= 0.0 && std::isfinite(rate_bound), "step_size: rate_bound must be finite and >= 0");
    if (rate_bound == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log1p(-epsilon) / rate_bound;
}

/// Approximates the time-inhomogeneous Phi-bar(s0, u, t).
///
/// [s0, s0+t] is cut at the declared breakpoints, each piece is split evenly
/// into steps no longer than step_size(epsilon, rates.bound), u is frozen at
/// each step's left endpoint, and the homogeneous factors are chained.
inline Mat2 phi_inhomogeneous(const ChainSpec& spec, const TimeRateFunction& rates, double s0, double t,
                              double epsilon) {
    detail::require(t >= 0.0, "phi_inhomogeneous: duration must be >= 0");
    detail::require(std::isfinite(rates.bound), "phi_inhomogeneous: unbounded rates");
    if (t == 0.0) return Mat2::identity();
    if (rates.constant) return phi_homogeneous(spec, rates(s0), t);

    const double end = s0 + t;
    const double h = step_size(epsilon, rates.bound);

    std::vector<double> cuts{s0};
    for (double b : rates.breakpoints)
        if (b > s0 && b < end) cuts.push_back(b);
    std::sort(cuts.begin() + 1, cuts.end());
    cuts.push_back(end);

    Mat2 result = Mat2::identity();
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double a = cuts[p];
        const double len = cuts[p + 1] - a;
        if (len <= 0.0) continue;
        const auto n = static_cast<long>(std::max(1.0, std::ceil(len / h - 1e-12)));
        const double dt = len / static_cast<double>(n);
        for (long k = 0; k < n; ++k) {
            const double left = a + static_cast<double>(k) * dt;
            result *= phi_homogeneous(spec, rates(left), dt);
        }
    }
    return result;
}

/// Upper bound on epsilon-values that are ever returned.
inline constexpr double kEpsilonCap = 0.5;

struct EpsilonChoice {
    double epsilon = kEpsilonCap;
    /// False when no epsilon satisfies the relative-error conditions; epsilon
    /// then holds min(zeta, argmin of the condition's left-hand side).
    bool bound_satisfied = true;
};

namespace detail {

/// Left-hand side of the relative-error condition for one sub-segment:
/// 2^M [(1 + eps/(1-eps))^{M+1} - 1], M = len*bound/(-ln(1-eps)).
/// Each frozen step's MGF is at least 1 - eps, which gives the eps/(1-eps)
/// relative perturbation per factor.
inline double relative_error_lhs(double eps, double len, double bound) {
    if (len <= 0.0 || bound <= 0.0) return 0.0;
    const double q = -std::log1p(-eps);
    const double m = len * bound / q;
    const double log_growth = (m + 1.0) * std::log1p(eps / (1.0 - eps));
    const double log_two_m = m * std::log(2.0);
    if (log_two_m + log_growth > 700.0) return std::numeric_limits<double>::infinity();
    return std::exp(log_two_m) * std::expm1(log_growth);
}

}  // namespace detail

/// Largest epsilon meeting the relative-error conditions on both
/// sub-segments (before and after the event), to 1e-12 resolution.
///
/// The left-hand side is not monotone in epsilon (the 2^M path count blows up
/// as epsilon -> 0), so the feasible set is located by a log-spaced scan and
/// its upper edge refined by bisection.
inline EpsilonChoice epsilon_for_relative_error(double zeta, double seg1, double seg2, double rate_bound) {
    detail::require(zeta > 0.0 && zeta < 1.0, "epsilon_for_relative_error: zeta must lie in (0, 1)");
    detail::require(seg1 >= 0.0 && seg2 >= 0.0, "epsilon_for_relative_error: durations must be >= 0");
    detail::require(rate_bound >= 0.0, "epsilon_for_relative_error: rate_bound must be >= 0");

    if ((seg1 == 0.0 && seg2 == 0.0) || rate_bound == 0.0) return {kEpsilonCap, true};

    const double target = 0.5 * zeta;
    auto worst = [&](double eps) {
        return std::max(detail::relative_error_lhs(eps, seg1, rate_bound),
                        detail::relative_error_lhs(eps, seg2, rate_bound));
    };
    auto feasible = [&](double eps) { return worst(eps) < target; };

    constexpr int kScan = 4000;
    const double log_lo = std::log(1e-15);
    const double log_hi = std::log(kEpsilonCap);
    auto grid = [&](int k) {
        return std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(k) / kScan);
    };

    int best = -1;
    int argmin = 0;
    double min_val = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kScan; ++k) {
        const double eps = k == kScan ? kEpsilonCap : grid(k);
        const double v = worst(eps);
        if (v < min_val) {
            min_val = v;
            argmin = k;
        }
        if (v < target) best = k;
    }
    if (best < 0) return {std::min(zeta, grid(argmin)), false};
    if (best == kScan) return {kEpsilonCap, true};

    double lo = grid(best);
    double hi = grid(best + 1);
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid))
            lo = mid;
        else
            hi = mid;
    }
    return {lo, true};
}

}  // namespace hmmcredit
