#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "hmmcredit/mc.hpp"

using namespace hmmcredit;

namespace {

const ChainSpec kChain{0.1, 0.1, 0};
const ObservationSpec kObs{{0.1, 0.2}, {0.2, 0.1}, 0};

ModelContext linear(double a, double b, double c, int k) { return {kChain, kObs, IntensityModel(LinearContagion{a, b, c}, k)}; }

}  // namespace

TEST(Random, StreamsAreReproducibleAndDistinct) {
    Stream a(5, 3), b(5, 3), c(5, 4), d(6, 3);
    bool differs_path = false, differs_seed = false;
    for (int k = 0; k < 100; ++k) {
        const double u = a.uniform();
        EXPECT_EQ(u, b.uniform());
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        differs_path |= u != c.uniform();
        differs_seed |= u != d.uniform();
    }
    EXPECT_TRUE(differs_path);
    EXPECT_TRUE(differs_seed);
}

TEST(Paths, JointPathsAreWellFormed) {
    for (std::uint64_t p = 0; p < 200; ++p) {
        Stream rng(9, p);
        const auto [x, y] = sample_joint_paths({1.0, 2.0, 0}, kObs, 5.0, rng);
        for (const auto* path : {&x, &y}) {
            for (std::size_t i = 0; i < path->switches.size(); ++i) {
                EXPECT_GT(path->switches[i], i == 0 ? 0.0 : path->switches[i - 1]);
                EXPECT_LE(path->switches[i], 5.0);
            }
        }
    }
}

TEST(Paths, HiddenChainMarginalMatchesTransitionMatrix) {
    const ChainSpec chain{0.4, 0.9, 0};
    constexpr int kPaths = 40000;
    int zero = 0;
    for (int p = 0; p < kPaths; ++p) {
        Stream rng(21, static_cast<std::uint64_t>(p));
        zero += sample_joint_paths(chain, kObs, 1.7, rng).first.state_at(1.7) == 0;
    }
    const Estimate e = empirical_proportion(static_cast<std::size_t>(zero), kPaths);
    EXPECT_NEAR(e.value, transition_prob(chain, 0, 0, 1.7), 4.0 * e.std_error);
}

TEST(Hazard, HandBuiltPath) {
    const IntensityModel m(LinearContagion{1.0, 1.0, 0.5}, 2);
    const ChainPath x{0, {1.0, 3.0}, 0.0, 5.0};
    PortfolioState port(2);
    // Pieces: [0,1] x=0 rate 1; [1,2] x=1 rate 2; then obligor 2 defaults:
    // [2,3] x=1 rate 2.5; [3,4] x=0 rate 1.5.
    EXPECT_NEAR(total_hazard(m, 1, 2.0, port, x), 3.0, 1e-15);
    EXPECT_NEAR(inverse_hazard(2.5, m, 1, port, x, 0.0), 1.75, 1e-14);
    EXPECT_EQ(inverse_hazard(0.0, m, 1, port, x, 0.0), 0.0);
    EXPECT_EQ(inverse_hazard(100.0, m, 1, port, x, 0.0), kBeyondHorizon);
    port.add_default(2, 2.0);
    EXPECT_NEAR(total_hazard(m, 1, 4.0, port, x), 7.0, 1e-14);
    EXPECT_NEAR(inverse_hazard(1.0, m, 1, port, x, 2.0), 0.4, 1e-14);
}

TEST(Hazard, ExpDecayInverseRoundTrips) {
    const IntensityModel m(ExpDecayContagion{1.0, 0.3, 0.2}, 3);
    const ChainPath x{1, {0.7, 2.2}, 0.0, 6.0};
    const PortfolioState port(3);
    for (double target : {0.1, 0.5, 1.1}) {
        const double s = inverse_hazard(target, m, 1, port, x, 0.2);
        EXPECT_NEAR(segment_hazard(m, 1, port, x, 0.2, 0.2 + s), target, 1e-10);
    }
}

TEST(Simulation, ReproducibleAndOrdered) {
    const ModelContext ctx = linear(0.5, 0.5, 0.3, 4);
    for (std::uint64_t p = 0; p < 50; ++p) {
        const auto a = simulate_default_times(ctx, 3.0, 17, p);
        const auto b = simulate_default_times(ctx, 3.0, 17, p);
        ASSERT_EQ(a.defaults.size(), b.defaults.size());
        for (std::size_t i = 0; i < a.defaults.size(); ++i) {
            EXPECT_EQ(a.defaults[i].obligor, b.defaults[i].obligor);
            EXPECT_EQ(a.defaults[i].time, b.defaults[i].time);
            EXPECT_LE(a.defaults[i].time, 3.0);
            if (i > 0) EXPECT_GT(a.defaults[i].time, a.defaults[i - 1].time);
        }
    }
    SimulationOptions opt;
    opt.stop_after = 1;
    for (std::uint64_t p = 0; p < 50; ++p) EXPECT_LE(simulate_default_times(ctx, 3.0, 17, p, opt).defaults.size(), 1u);
    EXPECT_THROW(simulate_paths(ctx, 3.0, 0, 1), InvalidArgument);
}

TEST(Simulation, IndependentNamesHaveExponentialDefaults) {
    const ModelContext ctx = linear(0.5, 0.0, 0.0, 3);
    SimulationOptions opt;
    opt.resample_x = false;
    const auto paths = simulate_paths(ctx, 4.0, 20000, 5, opt);
    std::vector<double> first_name;
    for (const auto& p : paths) {
        double t = kBeyondHorizon;
        for (const auto& d : p)
            if (d.obligor == 1) t = d.time;
        first_name.push_back(t);
    }
    const Estimate s = empirical_survival(first_name, 1.0);
    EXPECT_NEAR(s.value, std::exp(-0.5), 4.0 * s.std_error);
    const double ks = ks_distance(first_name, [](double t) { return 1.0 - std::exp(-0.5 * t); }, 4.0);
    EXPECT_LT(ks, 1.63 / std::sqrt(20000.0));
}

TEST(Simulation, FirstDefaultWithRegimeEffectMatchesMarginal) {
    // With c = 0 the first default time is the first event of a Cox process
    // driven by X alone: P(tau^1 > t) = [Phi(-K(a + b x), t) 1]_{x0}.
    const ModelContext ctx = linear(0.2, 0.6, 0.0, 3);
    SimulationOptions opt;
    opt.stop_after = 1;
    constexpr int kPaths = 20000;
    std::size_t alive = 0;
    for (int p = 0; p < kPaths; ++p)
        alive += simulate_default_times(ctx, 2.0, 3, static_cast<std::uint64_t>(p), opt).defaults.empty();
    const Mat2 phi = phi_homogeneous(kChain, {-0.6, -2.4}, 2.0);
    const Estimate e = empirical_proportion(alive, kPaths);
    EXPECT_NEAR(e.value, phi(0, 0) + phi(0, 1), 4.0 * e.std_error);
}

TEST(Resampling, EndpointLawMatchesTheFilter) {
    // b = 0: defaults carry no information on X, so the filter at the end
    // is the law of X given Y alone.
    const ModelContext ctx = linear(0.2, 0.0, 0.1, 3);
    const YPath y{0, {2.0, 5.0}, 0.0, 8.0};
    const PortfolioState port(3);
    const FilterState from = observables_filter(ctx, y, port, 3.0);
    const double want = observables_filter(ctx, y, port, 8.0).posterior().p0;
    constexpr int kDraws = 20000;
    int zero = 0;
    for (int k = 0; k < kDraws; ++k) {
        Stream rng(44, static_cast<std::uint64_t>(k));
        const ChainPath x = resample_x_given_observables(ctx, y, from, 8.0, rng);
        EXPECT_EQ(x.start, 3.0);
        zero += x.state_at(8.0) == 0;
    }
    EXPECT_NEAR(static_cast<double>(zero) / kDraws, want, 0.02);
}

TEST(Resampling, SpliceKeepsHistory) {
    const ChainPath base{0, {1.0, 2.0, 4.0}, 0.0, 6.0};
    const ChainPath tail{0, {3.5}, 2.5, 6.0};
    const ChainPath s = detail::splice(base, tail, 2.5);
    EXPECT_EQ(s.switches, (std::vector<double>{1.0, 2.0, 3.5}));
    const ChainPath flip{1, {}, 2.5, 6.0};
    EXPECT_EQ(detail::splice(base, flip, 2.5).switches, (std::vector<double>{1.0, 2.0, 2.5}));
}

TEST(Estimators, ProportionsAndMeans) {
    const Estimate p = empirical_proportion(25, 100);
    EXPECT_DOUBLE_EQ(p.value, 0.25);
    EXPECT_NEAR(p.std_error, std::sqrt(0.25 * 0.75 / 100), 1e-15);
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const Estimate m = empirical_mean(v);
    EXPECT_DOUBLE_EQ(m.value, 2.5);
    EXPECT_NEAR(m.std_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
    EXPECT_THROW(empirical_proportion(0, 0), InvalidArgument);
}

TEST(Estimators, KolmogorovSmirnovWithCensoring) {
    auto uniform = [](double t) { return std::clamp(t, 0.0, 1.0); };
    EXPECT_NEAR(ks_distance({0.25, 0.75}, uniform), 0.25, 1e-15);
    EXPECT_NEAR(ks_distance({0.5, kBeyondHorizon}, uniform, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(ks_distance({0.2, kBeyondHorizon}, uniform, 0.4), 0.3, 1e-15);
}
