#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <gtest/gtest.h>

#include "hmmcredit/filter.hpp"
#include "hmmcredit/random.hpp"

using namespace hmmcredit;

namespace {

ModelContext example(bool exp_decay, int k = 10) {
    const ChainSpec chain{0.1, 0.1, 0};
    const ObservationSpec obs{{0.1, 0.2}, {0.2, 0.1}, 0};
    if (exp_decay) return {chain, obs, IntensityModel(ExpDecayContagion{0.001, 0.001, 0.001}, k)};
    return {chain, obs, IntensityModel(LinearContagion{0.001, 0.001, 0.001}, k)};
}

// Unnormalized forward likelihood by brute-force composition of Eigen
// exponentials on a fine midpoint grid.
Eigen::RowVector2d oracle_forward(const ModelContext& ctx, const EventHistory& h, bool literal_c = false) {
    Eigen::RowVector2d v(ctx.chain.initial_state == 0 ? 1.0 : 0.0, ctx.chain.initial_state == 0 ? 0.0 : 1.0);
    Eigen::Matrix2d q;
    q << -ctx.chain.theta0, ctx.chain.theta0, ctx.chain.theta1, -ctx.chain.theta1;
    PortfolioState port(ctx.obligor_count());
    int jumps = 0;
    double now = 0.0;
    auto y_rates = [&](int x) {
        int state = (ctx.obs.y_initial + jumps) % 2;
        if (literal_c) state = 1 - state;
        return ctx.obs.rates_out_of(state)[x];
    };
    auto quiet = [&](double to) {
        constexpr int kSteps = 400;
        const double dt = (to - now) / kSteps;
        for (int k = 0; k < kSteps; ++k) {
            const double mid = now + (k + 0.5) * dt;
            Eigen::Matrix2d a = q;
            for (int x = 0; x < 2; ++x) {
                double total = y_rates(x);
                for (int i : port.survivors()) total += ctx.model.evaluate(i, mid, x, port);
                a(x, x) -= total;
            }
            v = v * (a * dt).exp();
        }
        now = to;
    };
    for (const auto& e : h.events) {
        quiet(e.time);
        for (int x = 0; x < 2; ++x)
            v(x) *= e.kind == EventKind::YJump ? y_rates(x) : ctx.model.evaluate(e.obligor, e.time, x, port);
        if (e.kind == EventKind::YJump)
            ++jumps;
        else
            port.add_default(e.obligor, e.time);
    }
    quiet(h.horizon);
    return v;
}

EventHistory mixed_history() {
    return {{Event::yjump(3.0), Event::default_of(4, 7.5), Event::yjump(12.0), Event::default_of(2, 20.0),
             Event::yjump(21.5)},
            30.0};
}

}  // namespace

TEST(Filter, EmptyHistoryAtZeroIsThePrior) {
    const auto pts = run_filter({{}, 0.0}, example(false));
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].posterior.p0, 1.0);
    EXPECT_EQ(pts[0].posterior.p1, 0.0);
}

TEST(Filter, FrozenChainStaysPut) {
    ModelContext ctx = example(true);
    ctx.chain = {0.0, 0.0, 0};
    for (const auto& p : run_filter(mixed_history(), ctx)) {
        EXPECT_EQ(p.posterior.p0, 1.0);
        EXPECT_EQ(p.posterior.p1, 0.0);
    }
}

TEST(Filter, UninformativeObservationsGiveTheMarginal) {
    const ChainSpec chain{0.3, 0.2, 0};
    const ModelContext ctx{chain, {{0.15, 0.15}, {0.3, 0.3}, 0}, IntensityModel(LinearContagion{0.5, 0.0, 0.2}, 4)};
    const EventHistory h{{Event::yjump(0.7), Event::default_of(2, 1.3), Event::yjump(2.0)}, 3.0};
    for (const auto& p : run_filter(h, ctx)) EXPECT_NEAR(p.posterior.p0, transition_prob(chain, 0, 0, p.time), 1e-12);
}

TEST(Filter, MatchesBruteForceLikelihoodLinear) {
    const ModelContext ctx = example(false);
    EventHistory h = mixed_history();
    const auto pts = run_filter(h, ctx);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        EventHistory prefix{{h.events.begin(), h.events.begin() + static_cast<long>(std::min(k + 1, h.events.size()))},
                            pts[k].time};
        const Eigen::RowVector2d v = oracle_forward(ctx, prefix);
        EXPECT_NEAR(pts[k].posterior.p0, v(0) / v.sum(), 1e-10) << "point " << k;
    }
}

TEST(Filter, MatchesBruteForceLikelihoodExpDecay) {
    // Early event times so that the decaying term still matters.
    ModelContext ctx = example(true, 4);
    ctx.model = IntensityModel(ExpDecayContagion{1.0, 0.3, 0.5}, 4);
    const EventHistory h{{Event::default_of(1, 0.4), Event::yjump(0.9), Event::default_of(3, 1.6)}, 2.5};
    const auto pts = run_filter(h, ctx);
    const Eigen::RowVector2d v = oracle_forward(ctx, h);
    EXPECT_NEAR(pts.back().posterior.p0, v(0) / v.sum(), 2e-4);
}

TEST(Filter, LiteralParityMatchesItsOwnOracle) {
    const ModelContext ctx = example(false);
    FilterOptions opt;
    opt.literal_c = true;
    const auto pts = run_filter(mixed_history(), ctx, opt);
    const Eigen::RowVector2d v = oracle_forward(ctx, mixed_history(), true);
    EXPECT_NEAR(pts.back().posterior.p0, v(0) / v.sum(), 1e-10);
    EXPECT_EQ(eta_index(ctx.obs, 0, false), 0);
    EXPECT_EQ(eta_index(ctx.obs, 0, true), 1);
    EXPECT_EQ(eta_index(ctx.obs, 1, false), 1);
}

TEST(Filter, SeparatedProductAgreesWhenDefaultsCarryNoSignal) {
    // With b = 0 the default exposure does not depend on X, so multiplying
    // separate MGFs is exact.
    const ModelContext ctx{{0.1, 0.1, 0}, {{0.1, 0.2}, {0.2, 0.1}, 0}, IntensityModel(LinearContagion{0.3, 0.0, 0.1}, 5)};
    FilterOptions literal;
    literal.paper_literal = true;
    const auto a = run_filter(mixed_history(), ctx);
    const auto b = run_filter(mixed_history(), ctx, literal);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k].posterior.p0, b[k].posterior.p0, 1e-12);
}

TEST(Filter, SeparatedProductDiffersWhenBothChannelsCarrySignal) {
    ModelContext ctx = example(false, 3);
    ctx.model = IntensityModel(LinearContagion{0.5, 2.0, 0.1}, 3);
    FilterOptions literal;
    literal.paper_literal = true;
    const EventHistory h{{Event::yjump(4.0)}, 8.0};
    EXPECT_GT(std::abs(run_filter(h, ctx).back().posterior.p0 - run_filter(h, ctx, literal).back().posterior.p0), 1e-4);
}

TEST(Filter, IncrementalStateMatchesBatchRun) {
    const ModelContext ctx = example(true);
    const EventHistory h = mixed_history();
    FilterState st(ctx);
    const auto pts = run_filter(h, ctx);
    for (std::size_t k = 0; k < h.events.size(); ++k) {
        st.advance(h.events[k]);
        EXPECT_DOUBLE_EQ(st.posterior().p0, pts[k].posterior.p0);
    }
    st.advance_no_event(h.horizon);
    EXPECT_DOUBLE_EQ(st.posterior().p0, pts.back().posterior.p0);
    EXPECT_EQ(st.y_jumps(), 3);
    EXPECT_EQ(st.portfolio().default_count(), 2);
}

TEST(Filter, PosteriorsAreProbabilitiesOnRandomHistories) {
    const ModelContext ctx = example(false, 5);
    Stream rng(77, 0);
    for (int trial = 0; trial < 50; ++trial) {
        EventHistory h;
        double t = 0.0;
        int next_default = 1;
        for (int e = 0; e < 6; ++e) {
            t += 0.1 + 10.0 * rng.uniform();
            if (rng.uniform() < 0.3 && next_default <= 5)
                h.events.push_back(Event::default_of(next_default++, t));
            else
                h.events.push_back(Event::yjump(t));
        }
        h.horizon = t + 1.0;
        for (const auto& p : run_filter(h, ctx)) {
            EXPECT_GE(p.posterior.p0, 0.0);
            EXPECT_LE(p.posterior.p0, 1.0);
            EXPECT_NEAR(p.posterior.p0 + p.posterior.p1, 1.0, 1e-14);
        }
    }
}

TEST(Filter, JumpScenarioRegressionValues) {
    const ModelContext ctx = example(true);
    const EventHistory h{{Event::yjump(21.5)}, 50.0};
    const auto plain = run_filter(h, ctx);
    EXPECT_NEAR(plain[0].posterior.p0, 0.4607, 5e-4);
    EXPECT_NEAR(plain[1].posterior.p0, 0.3928, 5e-4);
    FilterOptions lit;
    lit.literal_c = true;
    const auto literal = run_filter(h, ctx, lit);
    EXPECT_NEAR(literal[0].posterior.p0, 0.5713, 5e-4);
    EXPECT_NEAR(literal[1].posterior.p0, 0.6283, 5e-4);
}

TEST(Filter, ImpossibleEvidenceThrowsWithEventIndex) {
    ModelContext ctx = example(false, 3);
    ctx.obs.eta0 = {0.0, 0.0};
    const EventHistory h{{Event::default_of(1, 1.0), Event::yjump(2.0)}, 3.0};
    try {
        run_filter(h, ctx);
        FAIL() << "expected DegenerateEvidence";
    } catch (const DegenerateEvidence& e) {
        EXPECT_EQ(e.event_index(), 1u);
    }
}

TEST(Filter, RejectsInvalidHistories) {
    const ModelContext ctx = example(false, 3);
    EXPECT_THROW(run_filter({{Event::yjump(2.0), Event::yjump(1.0)}, 3.0}, ctx), InvalidArgument);
    EXPECT_THROW(run_filter({{Event::default_of(4, 1.0)}, 3.0}, ctx), InvalidArgument);
    EXPECT_THROW(run_filter({{Event::default_of(1, 1.0), Event::default_of(1, 2.0)}, 3.0}, ctx), InvalidArgument);
    EXPECT_THROW(run_filter({{Event::yjump(4.0)}, 3.0}, ctx), InvalidArgument);
}

TEST(Filter, SegmentFactorsReproduceEventDensities) {
    // f^{j,i} summed over the end state is the density of the event at
    // s + tbar with nothing else happening, which for a frozen chain is a
    // product of scalars.
    ModelContext ctx = example(false, 3);
    ctx.chain = {0.0, 0.0, 0};
    const PortfolioState port(3);
    const double eps = 1e-3;
    const double tbar = 0.8, seg = 2.0;
    const double lam0 = 0.001, quiet0 = 0.1 + 3 * lam0;
    const double f = f_default(0, 0, 2, tbar, 0.0, seg, ctx, port, 0, eps);
    const double want = std::exp(-quiet0 * tbar) * lam0 * std::exp(-(0.1 + 2 * (0.001 + 0.001)) * (seg - tbar));
    EXPECT_NEAR(f, want, 1e-15);
    EXPECT_EQ(f_yjump(0, 1, tbar, 0.0, seg, ctx, port, 0, eps), 0.0);
}
