#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hmmcredit/dist.hpp"

using namespace hmmcredit;

namespace {

const ChainSpec kChain{0.1, 0.1, 0};
const ObservationSpec kObs{{0.1, 0.2}, {0.2, 0.1}, 0};

ModelContext linear(double a, double b, double c, int k) { return {kChain, kObs, IntensityModel(LinearContagion{a, b, c}, k)}; }

double binomial(int n, int k, double p) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) * std::pow(p, k) *
           std::pow(1.0 - p, n - k);
}

ConditionalState mixed_state(const ModelContext& ctx, double t) {
    return {t, {0.3, 0.7}, PortfolioState(ctx.obligor_count())};
}

}  // namespace

TEST(JointDensity, IndependentNamesFactorize) {
    const ModelContext ctx = linear(0.7, 0.0, 0.0, 3);
    const ConditionalState st = mixed_state(ctx, 0.0);
    const double d = joint_density(ctx, st, {{2, 0.4}, {1, 1.1}, {3, 2.5}});
    EXPECT_NEAR(d, 0.7 * std::exp(-0.7 * 0.4) * 0.7 * std::exp(-0.7 * 1.1) * 0.7 * std::exp(-0.7 * 2.5), 1e-15);
}

TEST(JointDensity, IntegratesToOneForTwoNames) {
    const ModelContext ctx = linear(1.0, 0.1, 0.1, 2);
    const ConditionalState st = ConditionalState::initial(ctx);
    quad::Budget budget{50'000'000};
    double total = 0.0;
    for (auto [first, second] : {std::pair{1, 2}, std::pair{2, 1}}) {
        total += quad::integrate<double>(
                     [&](double t1) {
                         return quad::integrate<double>(
                                    [&](double t2) { return joint_density(ctx, st, {{first, t1}, {second, t2}}); }, t1,
                                    40.0, {1e-10, 1e-15}, budget)
                             .value;
                     },
                     0.0, 40.0, {1e-10, 1e-15}, budget)
                     .value;
    }
    EXPECT_NEAR(total, 1.0, 1e-7);
}

TEST(JointDensity, RejectsBadAssignments) {
    const ModelContext ctx = linear(1.0, 0.1, 0.1, 2);
    const ConditionalState st = ConditionalState::initial(ctx);
    EXPECT_THROW(joint_density(ctx, st, {{1, 0.5}}), InvalidArgument);
    EXPECT_THROW(joint_density(ctx, st, {{1, 0.5}, {2, 0.5}}), InvalidArgument);
    EXPECT_THROW(joint_density(ctx, st, {{1, 0.5}, {1, 0.7}}), InvalidArgument);
}

TEST(JointSurvival, IndependentNamesFactorize) {
    const ModelContext ctx = linear(0.4, 0.0, 0.0, 3);
    const ConditionalState st = mixed_state(ctx, 1.0);
    const Estimate e = joint_survival(ctx, st, {{1, 1.5}, {2, 2.0}, {3, 3.0}});
    EXPECT_NEAR(e.value, std::exp(-0.4 * (0.5 + 1.0 + 2.0)), 1e-9);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(JointSurvival, EqualThresholdsGiveFirstDefaultSurvival) {
    const ModelContext ctx = linear(1.0, 0.1, 0.1, 3);
    const ConditionalState st = mixed_state(ctx, 0.0);
    for (double s : {0.2, 1.0}) {
        const double joint = joint_survival(ctx, st, {{1, s}, {2, s}, {3, s}}).value;
        EXPECT_NEAR(joint, ordered_survival(ctx, st, 1, s), 1e-10);
    }
}

TEST(JointSurvival, DerivativesRecoverTheDensity) {
    // -d/ds1 -d/ds2 S(s1, s2) = density at (s1, s2).
    const ModelContext ctx = linear(1.0, 0.3, 0.2, 2);
    const ConditionalState st = mixed_state(ctx, 0.0);
    DistOptions opt;
    opt.tol = {1e-12, 1e-16};
    auto s = [&](double a, double b) { return joint_survival(ctx, st, {{1, a}, {2, b}}, opt).value; };
    const double h = 1e-3, a = 0.6, b = 1.3;
    const double mixed = (s(a + h, b + h) - s(a + h, b - h) - s(a - h, b + h) + s(a - h, b - h)) / (4 * h * h);
    EXPECT_NEAR(mixed, joint_density(ctx, st, {{1, a}, {2, b}}), 1e-6);
}

TEST(JointSurvival, SimulationBranchAgreesWithQuadratureScale) {
    // Four independent names go through simulation; compare with the
    // product of exponential survivals.
    const ModelContext ctx = linear(0.5, 0.0, 0.0, 4);
    DistOptions opt;
    opt.mc_paths = 20000;
    const Estimate e = joint_survival(ctx, ConditionalState::initial(ctx), {{1, 0.5}, {2, 1.0}, {3, 0.2}, {4, 0.8}}, opt);
    const double want = std::exp(-0.5 * 2.5);
    EXPECT_GT(e.std_error, 0.0);
    EXPECT_NEAR(e.value, want, 4.0 * e.std_error);
}

TEST(JointSurvival, InfiniteThresholdsAndLimits) {
    const ModelContext ctx = linear(1.0, 0.1, 0.1, 2);
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(joint_survival(ctx, ConditionalState::initial(ctx), {{1, inf}, {2, 1.0}}).value, 0.0);
    const ModelContext decay{kChain, kObs, IntensityModel(ExpDecayContagion{1.0, 0.1, 0.1}, 2)};
    EXPECT_THROW(joint_survival(decay, ConditionalState::initial(decay), {{1, inf}, {2, 1.0}}), InvalidArgument);
    const ModelContext big = linear(1.0, 0.1, 0.1, 11);
    std::vector<DefaultRecord> thr;
    for (int i = 1; i <= 11; ++i) thr.push_back({i, 1.0});
    EXPECT_THROW(joint_survival(big, ConditionalState::initial(big), thr), InvalidArgument);
}

TEST(Ordered, IndependentNamesAreBinomial) {
    for (int k_total : {3, 10}) {
        const ModelContext ctx = linear(0.2, 0.0, 0.0, k_total);
        const ConditionalState st = mixed_state(ctx, 0.0);
        const double s = 3.0;
        const double p = 1.0 - std::exp(-0.2 * s);
        double total = 0.0;
        for (int k = 0; k <= k_total; ++k) {
            const double got = ordered_interval_prob(ctx, st, k, s);
            EXPECT_NEAR(got, binomial(k_total, k, p), 1e-7) << "K=" << k_total << " k=" << k;
            total += got;
        }
        EXPECT_NEAR(total, 1.0, 1e-7);
    }
}

TEST(Ordered, NestedAndGridAgree) {
    const ModelContext ctx = linear(1.0, 0.1, 0.1, 3);
    const ConditionalState st = mixed_state(ctx, 0.5);
    DistOptions nested, grid;
    nested.method = OrderedMethod::Nested;
    nested.tol = {1e-10, 1e-15};
    grid.method = OrderedMethod::Grid;
    for (int k = 1; k <= 3; ++k)
        EXPECT_NEAR(ordered_interval_prob(ctx, st, k, 2.0, nested), ordered_interval_prob(ctx, st, k, 2.0, grid), 1e-7);
}

TEST(Ordered, ProbabilitiesSumToOneWithContagion) {
    const ModelContext ctx = linear(0.001, 0.001, 0.001, 10);
    const ConditionalState st = mixed_state(ctx, 10.0);
    double total = 0.0;
    for (int k = 0; k <= 10; ++k) total += ordered_interval_prob(ctx, st, k, 100.0);
    EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(Ordered, FirstDefaultWithoutRegimeEffect) {
    for (int k_total : {3, 10}) {
        const ModelContext ctx = linear(0.3, 0.0, 0.5, k_total);
        const ConditionalState st = mixed_state(ctx, 1.0);
        for (double s : {1.0, 1.5, 4.0}) EXPECT_NEAR(ordered_survival(ctx, st, 1, s), std::exp(-k_total * 0.3 * (s - 1.0)), 1e-12);
    }
}

TEST(Ordered, ExpDecayFirstDefaultClosedForm) {
    // b = 0: P(no default by s) = exp(-K a (e^{-t} - e^{-s})).
    const ModelContext ctx{kChain, kObs, IntensityModel(ExpDecayContagion{0.8, 0.0, 0.3}, 4)};
    const ConditionalState st = mixed_state(ctx, 0.2);
    DistOptions opt;
    opt.epsilon = 1e-6;
    const double want = std::exp(-4 * 0.8 * (std::exp(-0.2) - std::exp(-2.0)));
    EXPECT_NEAR(ordered_interval_prob(ctx, st, 0, 2.0, opt), want, 1e-6);
}

TEST(Ordered, SurvivalIsMonotoneInKAndS) {
    const ModelContext ctx = linear(1.0, 0.1, 0.1, 3);
    const ConditionalState st = ConditionalState::initial(ctx);
    for (double s : {0.5, 1.0, 2.0})
        for (int k = 1; k < 3; ++k) EXPECT_LE(ordered_survival(ctx, st, k, s), ordered_survival(ctx, st, k + 1, s));
    for (int k = 1; k <= 3; ++k) EXPECT_GT(ordered_survival(ctx, st, k, 0.5), ordered_survival(ctx, st, k, 1.0));
}

TEST(Ordered, AfterDefaultsAndLimits) {
    const ModelContext ctx = linear(1.0, 0.1, 0.1, 3);
    ConditionalState st = ConditionalState::initial(ctx);
    st.portfolio.add_default(2, 0.3);
    st.time = 0.5;
    EXPECT_EQ(ordered_survival(ctx, st, 1, 2.0), 0.0);
    EXPECT_EQ(ordered_interval_prob(ctx, st, 1, 0.5), 1.0);
    EXPECT_THROW(ordered_interval_prob(ctx, st, 0, 2.0), InvalidArgument);
    EXPECT_EQ(ordered_interval_prob(ctx, st, 3, std::numeric_limits<double>::infinity()), 1.0);
    CustomIntensity c;
    c.fn = [](int, double, int, const PortfolioState&) { return 0.1; };
    c.bound = 0.1;
    const ModelContext custom{kChain, kObs, IntensityModel(c, 3)};
    EXPECT_THROW(ordered_survival(custom, ConditionalState::initial(custom), 1, 1.0), InvalidArgument);
}

TEST(Ordered, SurvivalFactorDerivative) {
    const ModelContext ctx{kChain, kObs, IntensityModel(ExpDecayContagion{1.0, 0.2, 0.1}, 3)};
    const PortfolioState port(3);
    const double h = 1e-4;
    const Mat2 fd = (hmmcredit::detail::survival_factor(ctx, port, 0.3, 1.0 + h, 1e-5) -
                     hmmcredit::detail::survival_factor(ctx, port, 0.3, 1.0 - h, 1e-5)) *
                    (0.5 / h);
    const Mat2 d = survival_factor_derivative(ctx, port, 0.3, 1.0, 1e-5);
    EXPECT_LT(max_abs(d - fd), 1e-3);
}
