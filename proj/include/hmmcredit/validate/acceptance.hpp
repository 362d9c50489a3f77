#pragma once

// The acceptance suite: each check computes a measured error against an
// independent reference and compares it with its tolerance.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "hmmcredit/chain.hpp"
#include "hmmcredit/cli/reports.hpp"
#include "hmmcredit/dist.hpp"
#include "hmmcredit/filter.hpp"
#include "hmmcredit/mc.hpp"
#include "hmmcredit/model.hpp"
#include "hmmcredit/pricing.hpp"
#include "hmmcredit/quadrature.hpp"
#include "hmmcredit/random.hpp"
#include "hmmcredit/validate/oracles.hpp"

namespace hmmcredit::validate {

struct Sizes {
    std::size_t occupation_paths = 1'000'000;
    int bound_functions = 20;
    std::size_t bound_mc_paths = 100'000;
    std::size_t filter_paths = 10'000'000;
    std::size_t chi2_paths = 1'000'000;
    std::size_t ks_paths = 1'000'000;

    Sizes scaled(double f) const {
        auto s = [f](std::size_t n) { return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(n * f))); };
        Sizes out = *this;
        out.occupation_paths = s(occupation_paths);
        out.bound_mc_paths = s(bound_mc_paths);
        out.filter_paths = s(filter_paths);
        out.chi2_paths = s(chi2_paths);
        out.ks_paths = s(ks_paths);
        return out;
    }
};

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Parameter sets of the worked examples: a three-name CDS on a yearly clock
/// and a ten-name basket on a daily clock.
namespace setup {

inline ChainSpec chain() { return {0.1, 0.1, 0}; }
inline ObservationSpec observation() { return {{0.1, 0.2}, {0.2, 0.1}, 0}; }

inline ModelContext cds(int obligors = 3, bool exp_decay = false) {
    IntensityModel m = exp_decay ? IntensityModel(ExpDecayContagion{1.0, 0.1, 0.1}, obligors)
                                 : IntensityModel(LinearContagion{1.0, 0.1, 0.1}, obligors);
    return {chain(), observation(), std::move(m)};
}

inline ModelContext basket(bool exp_decay = false) {
    IntensityModel m = exp_decay ? IntensityModel(ExpDecayContagion{0.001, 0.001, 0.001}, 10)
                                 : IntensityModel(LinearContagion{0.001, 0.001, 0.001}, 10);
    return {chain(), observation(), std::move(m)};
}

inline constexpr double kJumpLo = 21.0, kJumpHi = 22.0, kJump = 21.5;

inline EventHistory quiet_days(double horizon) { return {{}, horizon}; }
inline EventHistory one_jump(double horizon) { return {{Event::yjump(kJump)}, horizon}; }

}  // namespace setup

namespace detail {

inline std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

inline double max_elem_error(const Mat2& a, const Mat2& b) {
    double e = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) e = std::max(e, std::abs(a(i, j) - b(i, j)));
    return e;
}

}  // namespace detail

// 1. Psi((0,0), t) = 1 and the semigroup law of Phi.
inline CheckResult check_mgf_identities() {
    const double thetas[] = {0.0, 0.05, 0.7, 4.0, 25.0};
    const double times[] = {1e-6, 0.3, 2.0, 9.0};
    double psi_err = 0.0, semi_err = 0.0;
    int points = 0;
    for (double t0 : thetas)
        for (double t1 : thetas)
            for (double t : times) {
                ++points;
                const ChainSpec c{t0, t1, 0};
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        if (transition_prob(c, i, j, t) > 0.0)
                            psi_err = std::max(psi_err, std::abs(mgf_homogeneous(c, {0.0, 0.0}, i, j, t) - 1.0));
                const RateVector u{-0.3 * (1.0 + t0), -0.1 * (1.0 + t1)};
                const Mat2 whole = phi_homogeneous(c, u, t + 0.37 * t);
                const Mat2 parts = phi_homogeneous(c, u, t) * phi_homogeneous(c, u, 0.37 * t);
                semi_err = std::max(semi_err, detail::max_elem_error(whole, parts));
            }
    const double worst = std::max(psi_err, semi_err);
    return {1, "MGF identities", worst < 1e-10,
            detail::fmt("%d grid points, max |Psi-1| %.2e, max semigroup error %.2e (tol 1e-10)", points, psi_err,
                        semi_err)};
}

// 2. Closed-form Phi against occupation-time simulation.
inline CheckResult check_mgf_vs_simulation(const Sizes& sz) {
    const ChainSpec c{0.1, 0.1, 0};
    const RateVector u{-0.2, -0.3};
    double worst_z = 0.0;
    for (double t : {1.0, 2.0, 5.0}) {
        const Mat2 phi = phi_homogeneous(c, u, t);
        for (int i = 0; i < 2; ++i) {
            const auto mc = occupation_mc(c, u, i, t, sz.occupation_paths, 7001 + static_cast<std::uint64_t>(10 * t) + i);
            for (int j = 0; j < 2; ++j) {
                const Estimate& e = mc.phi[static_cast<std::size_t>(j)];
                worst_z = std::max(worst_z, std::abs(phi(i, j) - e.value) / e.std_error);
            }
        }
    }
    return {2, "MGF vs occupation-time simulation", worst_z < 3.0,
            detail::fmt("%zu paths per (t, i), max deviation %.2f SE (tol 3 SE)", sz.occupation_paths, worst_z)};
}

// 3. Frozen-left-endpoint single step against the time-varying MGF.
inline CheckResult check_frozen_step(const Sizes& sz) {
    const ChainSpec c{0.1, 0.1, 0};
    const double bound = 0.11, eps = 1e-2;
    const double h = step_size(eps, bound);
    Stream rng(3003, 0);
    double worst_rel = 0.0, worst_z = 0.0;
    for (int f = 0; f < sz.bound_functions; ++f) {
        std::array<double, 2> omega{}, phase{};
        for (int x = 0; x < 2; ++x) {
            omega[static_cast<std::size_t>(x)] = 0.5 + 40.0 * rng.uniform();
            phase[static_cast<std::size_t>(x)] = 2.0 * std::numbers::pi * rng.uniform();
        }
        const double s0 = 100.0 * rng.uniform();
        auto rate = [&](int x, double t) {
            const auto k = static_cast<std::size_t>(x);
            return -bound * (0.5 + 0.5 * std::sin(omega[k] * t + phase[k]));
        };
        auto integral = [&](int x, double a, double b) {
            const auto k = static_cast<std::size_t>(x);
            return -bound * (0.5 * (b - a) - 0.5 * (std::cos(omega[k] * b + phase[k]) - std::cos(omega[k] * a + phase[k])) / omega[k]);
        };

        const Mat2 frozen = phi_homogeneous(c, {rate(0, s0), rate(1, s0)}, h);
        // Reference: midpoint composition on a grid 4096 times finer.
        constexpr int kFine = 4096;
        Mat2 truth = Mat2::identity();
        for (int k = 0; k < kFine; ++k) {
            const double mid = s0 + (k + 0.5) * h / kFine;
            truth *= phi_homogeneous(c, {rate(0, mid), rate(1, mid)}, h / kFine);
        }
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) worst_rel = std::max(worst_rel, std::abs(frozen(i, j) / truth(i, j) - 1.0));
            const auto mc = occupation_mc(c, i, s0, h, integral, sz.bound_mc_paths, 9000 + static_cast<std::uint64_t>(2 * f + i));
            for (int j = 0; j < 2; ++j) {
                const Estimate& e = mc.phi[static_cast<std::size_t>(j)];
                if (e.std_error > 0.0) worst_z = std::max(worst_z, std::abs(truth(i, j) - e.value) / e.std_error);
            }
        }
    }
    const bool ok = worst_rel < eps && worst_z < 4.0;
    return {3, "frozen-step error bound", ok,
            detail::fmt("step %.10f, %d rate functions, max relative error %.2e (tol %.0e); grid reference vs "
                        "simulation max %.2f SE (tol 4)",
                        h, sz.bound_functions, worst_rel, eps, worst_z)};
}

// 4. Uninformative observations reproduce the prior; a frozen chain stays put.
inline CheckResult check_filter_reductions() {
    const ChainSpec c{0.3, 0.2, 0};
    const ObservationSpec flat{{0.15, 0.15}, {0.3, 0.3}, 0};
    const EventHistory hist{{Event::yjump(0.7), Event::default_of(2, 1.3), Event::yjump(2.0), Event::default_of(1, 2.6)},
                            3.0};
    double worst = 0.0;
    std::vector<ModelContext> flat_models;
    flat_models.push_back({c, flat, IntensityModel(LinearContagion{0.5, 0.0, 0.2}, 3)});
    flat_models.push_back({c, flat, IntensityModel(ExpDecayContagion{0.5, 0.0, 0.2}, 3)});
    for (const auto& ctx : flat_models)
        for (bool literal : {false, true})
            for (bool literal_c : {false, true}) {
                FilterOptions opt;
                opt.paper_literal = literal;
                opt.literal_c = literal_c;
                for (const auto& p : run_filter(hist, ctx, opt))
                    worst = std::max(worst, std::abs(p.posterior.p0 - transition_prob(c, 0, 0, p.time)));
            }

    bool frozen_exact = true;
    for (bool exp_decay : {false, true}) {
        ModelContext ctx = setup::cds(3, exp_decay);
        ctx.chain = {0.0, 0.0, 0};
        for (bool literal : {false, true}) {
            FilterOptions opt;
            opt.paper_literal = literal;
            for (const auto& p : run_filter(hist, ctx, opt))
                frozen_exact = frozen_exact && p.posterior.p0 == 1.0 && p.posterior.p1 == 0.0;
        }
    }
    return {4, "filter reductions", worst < 1e-6 && frozen_exact,
            detail::fmt("uninformative max |p0 - P00(t)| %.2e (tol 1e-6); frozen chain exactly (1,0): %s", worst,
                        frozen_exact ? "yes" : "no")};
}

// 5. Filter against conditional frequencies of simulated full histories.
inline CheckResult check_filter_vs_oracle(const Sizes& sz) {
    std::string detail;
    double worst = 0.0;
    for (bool exp_decay : {false, true}) {
        const ModelContext ctx = setup::basket(exp_decay);
        const auto freq = jump_scenario_oracle(ctx, setup::kJumpLo, setup::kJumpHi, setup::kJumpHi, sz.filter_paths,
                                               exp_decay ? 5502 : 5501);
        const auto pts = run_filter(setup::one_jump(setup::kJumpHi), ctx);
        const double d_jump = std::abs(pts[0].posterior.p0 - freq.p0_at_jump.value);
        const double d_end = std::abs(pts[1].posterior.p0 - freq.p0_at_end.value);
        const double quiet_t = 10.0;
        const auto quiet = no_event_oracle(ctx, quiet_t, sz.filter_paths / 10, exp_decay ? 5504 : 5503);
        const double d_quiet = std::abs(no_event_posterior(quiet_t, ctx).p0 - quiet.p0.value);
        worst = std::max({worst, d_jump, d_end, d_quiet});
        detail += detail::fmt("%s: %zu accepted, TV at jump %.4f (SE %.4f), at day 22 %.4f, quiet day 10 %.4f; ",
                              exp_decay ? "expdecay" : "linear", freq.accepted, d_jump, freq.p0_at_jump.std_error,
                              d_end, d_quiet);
    }
    detail += "tol 0.02";
    return {5, "filter vs simulated histories", worst < 0.02, detail};
}

namespace detail {

/// Integral of joint_density over all orderings on [0, cutoff]^K.
inline double density_mass(const ModelContext& ctx, double cutoff) {
    const int big_k = ctx.obligor_count();
    const ConditionalState start = ConditionalState::initial(ctx);
    std::vector<int> order(static_cast<std::size_t>(big_k));
    for (int i = 0; i < big_k; ++i) order[static_cast<std::size_t>(i)] = i + 1;
    quad::Budget budget{200'000'000};
    const quad::Tolerance tol{1e-9, 1e-13};
    double total = 0.0;
    do {
        std::vector<double> times(static_cast<std::size_t>(big_k));
        std::function<double(int, double)> level = [&](int depth, double lo) -> double {
            return quad::integrate<double>(
                       [&](double t) {
                           times[static_cast<std::size_t>(depth)] = t;
                           if (depth + 1 == big_k) {
                               std::vector<DefaultRecord> a;
                               for (int i = 0; i < big_k; ++i)
                                   a.push_back({order[static_cast<std::size_t>(i)], times[static_cast<std::size_t>(i)]});
                               return joint_density(ctx, start, a);
                           }
                           return level(depth + 1, t);
                       },
                       lo, cutoff, tol, budget)
                .value;
        };
        total += level(0, 0.0);
    } while (std::next_permutation(order.begin(), order.end()));
    return total;
}

struct ChiSquare {
    double statistic = 0.0;
    int df = 0;
    double p_value = 0.0;
};

/// Joint default-time cells against inclusion-exclusion of joint_survival.
inline ChiSquare default_time_chi2(const ModelContext& ctx, std::size_t paths, std::uint64_t seed) {
    const int big_k = ctx.obligor_count();
    constexpr int kBins = 10;
    std::vector<double> edge{0.0};
    for (int k = 1; k < kBins; ++k) edge.push_back(-std::log(1.0 - k / 10.0) / 1.1);
    edge.push_back(std::numeric_limits<double>::infinity());
    const double horizon = edge[kBins - 1] + 0.5;

    const ConditionalState start = ConditionalState::initial(ctx);
    DistOptions dopt;
    dopt.tol = {1e-10, 1e-14};
    dopt.budget = 100'000'000;
    std::map<std::vector<int>, double> cache;
    auto survival = [&](std::vector<int> idx) {
        std::sort(idx.begin(), idx.end());  // exchangeable names
        auto it = cache.find(idx);
        if (it != cache.end()) return it->second;
        std::vector<DefaultRecord> thr;
        for (int i = 0; i < big_k; ++i) thr.push_back({i + 1, edge[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]});
        const double v = joint_survival(ctx, start, thr, dopt).value;
        cache.emplace(idx, v);
        return v;
    };

    std::size_t cells = 1;
    for (int i = 0; i < big_k; ++i) cells *= kBins;
    std::vector<double> expected(cells, 0.0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::vector<int> bin(static_cast<std::size_t>(big_k));
        std::size_t rest = cell;
        for (int i = 0; i < big_k; ++i) {
            bin[static_cast<std::size_t>(i)] = static_cast<int>(rest % kBins);
            rest /= kBins;
        }
        double p = 0.0;
        for (int corner = 0; corner < (1 << big_k); ++corner) {
            std::vector<int> idx(static_cast<std::size_t>(big_k));
            int uppers = 0;
            for (int i = 0; i < big_k; ++i) {
                const bool up = (corner >> i) & 1;
                uppers += up;
                idx[static_cast<std::size_t>(i)] = bin[static_cast<std::size_t>(i)] + (up ? 1 : 0);
            }
            p += (uppers % 2 ? -1.0 : 1.0) * survival(idx);
        }
        expected[cell] = p * static_cast<double>(paths);
    }

    std::vector<double> observed(cells, 0.0);
    for (std::size_t p = 0; p < paths; ++p) {
        const SimulatedPath path = simulate_default_times(ctx, horizon, seed, p);
        std::vector<int> bin(static_cast<std::size_t>(big_k), kBins - 1);
        for (const auto& d : path.defaults)
            bin[static_cast<std::size_t>(d.obligor - 1)] =
                static_cast<int>(std::upper_bound(edge.begin() + 1, edge.begin() + kBins, d.time) - edge.begin()) - 1;
        std::size_t cell = 0;
        for (int i = big_k; i-- > 0;) cell = cell * kBins + static_cast<std::size_t>(bin[static_cast<std::size_t>(i)]);
        observed[cell] += 1.0;
    }

    ChiSquare out;
    double pool_e = 0.0, pool_o = 0.0;
    int used = 0;
    for (std::size_t c = 0; c < cells; ++c) {
        if (expected[c] < 5.0) {
            pool_e += expected[c];
            pool_o += observed[c];
            continue;
        }
        out.statistic += (observed[c] - expected[c]) * (observed[c] - expected[c]) / expected[c];
        ++used;
    }
    if (pool_e > 0.0) {
        out.statistic += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
        ++used;
    }
    out.df = used - 1;
    // Too few paths to fill two cells: the test has no power.
    out.p_value = out.df < 1 ? 1.0
                              : boost::math::cdf(boost::math::complement(boost::math::chi_squared(out.df), out.statistic));
    return out;
}

}  // namespace detail

// 6. Joint density normalization and agreement with the total-hazard simulator.
inline CheckResult check_density_and_simulator(const Sizes& sz) {
    std::string detail;
    bool ok = true;
    for (int big_k : {2, 3}) {
        const ModelContext ctx = setup::cds(big_k);
        const double mass = detail::density_mass(ctx, 30.0);
        const auto chi = detail::default_time_chi2(ctx, sz.chi2_paths, 6000 + static_cast<std::uint64_t>(big_k));
        ok = ok && std::abs(mass - 1.0) < 5e-3 && chi.p_value > 0.01;
        detail += detail::fmt("K=%d: mass %.8f (tol 5e-3), chi2 %.1f on %d df, p %.3f (tol > 0.01); ", big_k, mass,
                              chi.statistic, chi.df, chi.p_value);
    }
    detail += detail::fmt("%zu paths", sz.chi2_paths);
    return {6, "density normalization and simulator", ok, detail};
}

// 7. No hidden-state dependence: first default is exponential, CDS closed form.
inline CheckResult check_b0_collapse() {
    double worst = 0.0;
    for (int big_k : {3, 10}) {
        const double a = big_k == 3 ? 1.0 : 0.001;
        const ModelContext ctx{setup::chain(), setup::observation(), IntensityModel(LinearContagion{a, 0.0, 0.1}, big_k)};
        const double t = big_k == 3 ? 0.5 : 10.0;
        const ConditionalState s0 = ConditionalState::initial(ctx);
        const ConditionalState st = ConditionalState::from(filter_until(setup::quiet_days(t), t, ctx));
        for (const ConditionalState& state : {s0, st})
            for (double frac : {0.1, 1.0, 4.0}) {
                const double s = state.time + frac / (big_k * a);
                const double want = std::exp(-big_k * a * (s - state.time));
                worst = std::max(worst, std::abs(ordered_survival(ctx, state, 1, s) - want));
            }
    }
    const ModelContext cds{setup::chain(), setup::observation(), IntensityModel(LinearContagion{1.0, 0.0, 0.0}, 3)};
    const double r = 0.05, big_t = 5.0, a = 1.0;
    const double closed = std::exp(-r * big_t) * std::exp(-2 * a * big_t) * (1 - std::exp(-a * big_t)) * (r + 3 * a) /
                          (1 - std::exp(-(r + 3 * a) * big_t));
    const double y = cds_premium({r, big_t}, cds);
    const double rel = std::abs(y / closed - 1.0);
    return {7, "b=0 collapse", worst < 1e-6 && rel < 1e-3,
            detail::fmt("max |survival - exp| %.2e (tol 1e-6); premium %.9e vs closed form %.9e, relative %.2e "
                        "(tol 1e-3)",
                        worst, y, closed, rel)};
}

/// Sweep grids for the premium sensitivity table.
inline std::vector<double> sweep_grid(char coefficient) {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(coefficient == 'a' ? 0.5 + 0.1 * i : 0.05 * i);
    return g;
}

// 8. Premium decreases in each coefficient.
inline CheckResult check_premium_trend() {
    const ModelContext base = setup::cds();
    std::string detail;
    bool ok = true;
    for (char coef : {'a', 'b', 'c'}) {
        const auto rows = premium_sensitivity({0.05, 5.0}, base, std::string(1, coef), sweep_grid(coef));
        bool dec = true;
        for (std::size_t i = 1; i < rows.size(); ++i) dec = dec && rows[i].premium < rows[i - 1].premium;
        ok = ok && dec;
        detail += detail::fmt("%c in [%g, %g]: %.4e -> %.4e %s; ", coef, rows.front().value, rows.back().value,
                              rows.front().premium, rows.back().premium, dec ? "strictly decreasing" : "NOT decreasing");
    }
    detail.resize(detail.size() - 2);
    return {8, "premium trend", ok, detail};
}

/// Daily first-to-default values for the basket example.
inline std::vector<SeriesPoint> basket_days(bool exp_decay, bool jump, double r_per_day = 0.05) {
    const ModelContext ctx = setup::basket(exp_decay);
    FilterOptions fopt;
    fopt.literal_c = true;
    std::vector<double> days;
    for (int d = 10; d <= 50; ++d) days.push_back(d);
    const EventHistory h = jump ? setup::one_jump(50.0) : setup::quiet_days(50.0);
    return basket_value_series({r_per_day, 100.0, 10.0, 1}, ctx, h, days, fopt);
}

/// V_1 just before and just after the jump.
inline std::pair<double, double> basket_jump_values(bool exp_decay, double r_per_day = 0.05) {
    const ModelContext ctx = setup::basket(exp_decay);
    FilterOptions fopt;
    fopt.literal_c = true;
    const BasketContract c{r_per_day, 100.0, setup::kJump, 1};
    FilterState before(ctx, fopt);
    before.advance_no_event(setup::kJump);
    FilterState after(ctx, fopt);
    after.advance(Event::yjump(setup::kJump));
    return {basket_value_from_state(c, ctx, ConditionalState::from(before)),
            basket_value_from_state(c, ctx, ConditionalState::from(after))};
}

// 9. Basket value series: upward trend, drop at the jump, ExpDecay below Linear.
inline CheckResult check_basket_trends() {
    bool increasing = true, below = true, drop = true;
    std::string detail;
    std::array<std::array<std::vector<SeriesPoint>, 2>, 2> s;  // [exp_decay][jump]
    for (int e = 0; e < 2; ++e)
        for (int j = 0; j < 2; ++j) s[e][j] = basket_days(e == 1, j == 1);
    for (int e = 0; e < 2; ++e)
        for (int j = 0; j < 2; ++j)
            for (std::size_t i = 1; i < s[e][j].size(); ++i)
                increasing = increasing && s[e][j][i].value > s[e][j][i - 1].value;
    for (int j = 0; j < 2; ++j)
        for (std::size_t i = 0; i < s[0][j].size(); ++i) below = below && s[1][j][i].value < s[0][j][i].value;
    for (int e = 0; e < 2; ++e) {
        const auto [pre, post] = basket_jump_values(e == 1);
        drop = drop && post < pre;
        detail += detail::fmt("%s: V(21.5-) %.9f, V(21.5+) %.9f, day 21 %.9f, day 22 %.9f; ", e ? "expdecay" : "linear",
                              pre, post, s[e][1][11].value, s[e][1][12].value);
    }
    detail += detail::fmt("increasing %s, drop at jump %s, expdecay below linear %s", increasing ? "yes" : "no",
                          drop ? "yes" : "no", below ? "yes" : "no");
    return {9, "basket value trends", increasing && drop && below, detail};
}

namespace detail {

/// CDF of the first default time from the initial state on [0, horizon],
/// tabulated on a fine grid and interpolated linearly.
inline std::function<double(double)> first_default_cdf(const ModelContext& ctx, double horizon) {
    constexpr int kGrid = 20000;
    const double h = horizon / kGrid;
    const TimeRateFunction f = hmmcredit::detail::count_rate_function(ctx.model, 0);
    auto table = std::make_shared<std::vector<double>>(kGrid + 1);
    Vec2 v = Posterior::point_mass(ctx.chain.initial_state).vec();
    (*table)[0] = 0.0;
    for (int i = 0; i < kGrid; ++i) {
        v = v * phi_inhomogeneous(ctx.chain, f, i * h, h, 1e-6);
        (*table)[static_cast<std::size_t>(i) + 1] = 1.0 - v.sum();
    }
    return [table, h](double t) {
        const double pos = std::clamp(t / h, 0.0, static_cast<double>(kGrid));
        const auto i = std::min(static_cast<std::size_t>(pos), static_cast<std::size_t>(kGrid - 1));
        const double w = pos - static_cast<double>(i);
        return (*table)[i] * (1.0 - w) + (*table)[i + 1] * w;
    };
}

}  // namespace detail

// 10. First-default times from the simulator against the closed-form marginal.
inline CheckResult check_first_default_ks(const Sizes& sz) {
    struct Case {
        const char* name;
        ModelContext ctx;
        double horizon;
    };
    const std::vector<Case> cases{{"linear K=3", setup::cds(3, false), 5.0},
                                  {"expdecay K=3", setup::cds(3, true), 5.0},
                                  {"linear K=10", setup::basket(false), 100.0},
                                  {"expdecay K=10", setup::basket(true), 100.0}};
    const double tol = 4.0 / std::sqrt(static_cast<double>(sz.ks_paths));
    bool ok = true;
    std::string detail;
    SimulationOptions opt;
    opt.stop_after = 1;
    std::uint64_t seed = 1000;
    for (const auto& c : cases) {
        std::vector<double> first(sz.ks_paths);
        for (std::size_t p = 0; p < sz.ks_paths; ++p) {
            const SimulatedPath path = simulate_default_times(c.ctx, c.horizon, seed, p, opt);
            first[p] = path.defaults.empty() ? std::numeric_limits<double>::infinity() : path.defaults.front().time;
        }
        ++seed;
        const double d = ks_distance(first, detail::first_default_cdf(c.ctx, c.horizon), c.horizon);
        ok = ok && d < tol;
        detail += detail::fmt("%s %.5f; ", c.name, d);
    }
    detail += detail::fmt("KS tol %.5f at n=%zu", tol, sz.ks_paths);
    return {10, "first-default KS", ok, detail};
}

struct RunOptions {
    Sizes sizes;
    /// Check 11 reruns the suite; the nested runs skip it.
    bool reproducibility = true;
    std::vector<int> only;  // empty: all checks
};

inline std::string format_line(const CheckResult& r) {
    return std::string(r.pass ? "PASS" : "FAIL") + " #" + std::to_string(r.id) + " " + r.name + ": " + r.detail;
}

inline std::vector<CheckResult> run_acceptance(const RunOptions& opt, std::ostream& out, std::ostream* timing = nullptr);

// 11. Same seed, same bytes.
inline CheckResult check_reproducibility() {
    const ModelContext ctx = setup::cds();
    const auto a = report::simulate(ctx, 5.0, 2000, 42);
    const auto b = report::simulate(ctx, 5.0, 2000, 42);
    const bool sim_same = a.samples_csv == b.samples_csv && a.summary.dump(2) == b.summary.dump(2);

    RunOptions quick;
    quick.sizes = Sizes{}.scaled(1e-3);
    quick.reproducibility = false;
    quick.only = {2, 3, 5, 10};
    std::ostringstream r1, r2;
    run_acceptance(quick, r1);
    run_acceptance(quick, r2);
    const bool validate_same = r1.str() == r2.str();
    return {11, "reproducibility", sim_same && validate_same,
            detail::fmt("simulation output identical: %s (%zu bytes); validation report identical: %s (%zu bytes)",
                        sim_same ? "yes" : "no", a.samples_csv.size(), validate_same ? "yes" : "no", r1.str().size())};
}

/// Runs the checks in order, printing one PASS/FAIL line each to `out` and
/// the runtimes to `timing`.
inline std::vector<CheckResult> run_acceptance(const RunOptions& opt, std::ostream& out, std::ostream* timing) {
    const std::vector<std::pair<int, std::function<CheckResult()>>> checks{
        {1, [] { return check_mgf_identities(); }},
        {2, [&] { return check_mgf_vs_simulation(opt.sizes); }},
        {3, [&] { return check_frozen_step(opt.sizes); }},
        {4, [] { return check_filter_reductions(); }},
        {5, [&] { return check_filter_vs_oracle(opt.sizes); }},
        {6, [&] { return check_density_and_simulator(opt.sizes); }},
        {7, [] { return check_b0_collapse(); }},
        {8, [] { return check_premium_trend(); }},
        {9, [] { return check_basket_trends(); }},
        {10, [&] { return check_first_default_ks(opt.sizes); }},
        {11, [] { return check_reproducibility(); }},
    };
    std::vector<CheckResult> results;
    for (const auto& [id, fn] : checks) {
        if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
        if (id == 11 && !opt.reproducibility) continue;
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = {id, "check " + std::to_string(id), false, std::string("error: ") + e.what()};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out << format_line(r) << "\n" << std::flush;
        if (timing) *timing << "#" << id << " runtime " << detail::fmt("%.2f", r.seconds) << " s\n" << std::flush;
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace hmmcredit::validate
