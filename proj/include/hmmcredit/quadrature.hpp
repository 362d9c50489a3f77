#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature for scalar- and Vec2-valued
// integrands, with a shared evaluation budget so nested integrals can be
// capped as a whole.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "hmmcredit/error.hpp"
#include "hmmcredit/mat2.hpp"

namespace hmmcredit::quad {

inline double norm(double x) { return std::abs(x); }
inline double norm(const Vec2& x) { return max_abs(x); }

/// Counts integrand evaluations across any number of (nested) integrals.
struct Budget {
    std::int64_t limit = 1'000'000;
    std::int64_t used = 0;

    void charge(std::int64_t n) {
        used += n;
        if (used > limit) throw BudgetExceeded("quadrature evaluation budget exhausted");
    }
};

struct Tolerance {
    double rel = 1e-6;
    double abs = 1e-13;
};

namespace detail {

// Kronrod abscissae (descending, last is the centre) and weights; the Gauss
// points are the odd-indexed abscissae.
inline constexpr std::array<double, 8> kXk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kWk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class V>
struct Piece {
    double a, b;
    V value;
    double error;
    bool operator<(const Piece& o) const { return error < o.error; }
};

template <class V, class F>
Piece<V> rule15(F& f, double a, double b, Budget& budget) {
    budget.charge(15);
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const V fc = f(c);
    V kron = fc * kWk[7];
    V gauss = fc * kWg[3];
    for (int k = 0; k < 7; ++k) {
        const double dx = h * kXk[static_cast<std::size_t>(k)];
        const V s = f(c - dx) + f(c + dx);
        kron = kron + s * kWk[static_cast<std::size_t>(k)];
        if (k % 2 == 1) gauss = gauss + s * kWg[static_cast<std::size_t>(k / 2)];
    }
    kron = kron * h;
    gauss = gauss * h;
    return {a, b, kron, norm(kron - gauss)};
}

}  // namespace detail

/// 15-point Kronrod rule on [a, b] without adaptivity (a fixed panel rule).
template <class V, class F>
V panel15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    V sum = f(c) * detail::kWk[7];
    for (std::size_t k = 0; k < 7; ++k) {
        const double dx = h * detail::kXk[k];
        sum = sum + (f(c - dx) + f(c + dx)) * detail::kWk[k];
    }
    return sum * h;
}

template <class V>
struct Result {
    V value{};
    double error = 0.0;
};

/// Globally adaptive integration of f over [a, b]: the piece with the largest
/// error estimate is bisected until the summed estimate meets the tolerance.
/// `breaks` are interior points where f may have kinks.
template <class V, class F>
Result<V> integrate(F&& f, double a, double b, Tolerance tol, Budget& budget, const std::vector<double>& breaks = {}) {
    hmmcredit::detail::require(a <= b, "integrate: reversed interval");
    if (a == b) return {V{}, 0.0};

    std::vector<double> cuts{a};
    for (double x : breaks)
        if (x > a && x < b) cuts.push_back(x);
    std::sort(cuts.begin() + 1, cuts.end());
    cuts.push_back(b);

    std::priority_queue<detail::Piece<V>> heap;
    V total{};
    double err = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        if (cuts[k + 1] <= cuts[k]) continue;
        auto p = detail::rule15<V>(f, cuts[k], cuts[k + 1], budget);
        total = total + p.value;
        err += p.error;
        heap.push(p);
    }

    constexpr int kMaxPieces = 4000;
    while (err > std::max(tol.abs, tol.rel * norm(total)) && static_cast<int>(heap.size()) < kMaxPieces) {
        auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;
        heap.pop();
        auto left = detail::rule15<V>(f, worst.a, mid, budget);
        auto right = detail::rule15<V>(f, mid, worst.b, budget);
        total = total - worst.value + left.value + right.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift from incremental updates.
    V clean{};
    double clean_err = 0.0;
    while (!heap.empty()) {
        clean = clean + heap.top().value;
        clean_err += heap.top().error;
        heap.pop();
    }
    return {clean, clean_err};
}

}  // namespace hmmcredit::quad
