#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <gtest/gtest.h>

#include "hmmcredit/chain.hpp"
#include "hmmcredit/random.hpp"

using namespace hmmcredit;

namespace {

Mat2 eigen_expm(const Mat2& a, double t) {
    Eigen::Matrix2d m;
    m << a(0, 0), a(0, 1), a(1, 0), a(1, 1);
    const Eigen::Matrix2d e = (m * t).exp();
    return {e(0, 0), e(0, 1), e(1, 0), e(1, 1)};
}

void expect_near(const Mat2& a, const Mat2& b, double tol) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(a(i, j), b(i, j), tol) << "entry " << i << j;
}

}  // namespace

TEST(Chain, TransitionMatrixMatchesGeneratorExponential) {
    Stream rng(11, 0);
    for (int k = 0; k < 200; ++k) {
        const ChainSpec c{5.0 * rng.uniform(), 5.0 * rng.uniform(), 0};
        const double t = 10.0 * rng.uniform();
        const Mat2 p = transition_matrix(c, t);
        expect_near(p, eigen_expm(c.generator(), t), 1e-12);
        EXPECT_NEAR(p(0, 0) + p(0, 1), 1.0, 1e-15);
        EXPECT_NEAR(p(1, 0) + p(1, 1), 1.0, 1e-15);
    }
}

TEST(Chain, PhiMatchesEigenAcrossRandomInputs) {
    Stream rng(12, 0);
    for (int k = 0; k < 500; ++k) {
        const ChainSpec c{3.0 * rng.uniform(), 3.0 * rng.uniform(), 0};
        const RateVector u{-4.0 * rng.uniform(), -4.0 * rng.uniform()};
        const double t = 8.0 * rng.uniform();
        const Mat2 want = eigen_expm(mgf_generator(c, u), t);
        const Mat2 got = phi_homogeneous(c, u, t);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(got(i, j), want(i, j), 1e-12 + 1e-10 * std::abs(want(i, j)));
    }
}

TEST(Chain, PhiRepeatedEigenvalueBranch) {
    // theta0 = theta1 = 0 and u0 = u1 gives a double eigenvalue; a tiny
    // perturbation sits just inside the near-degenerate band.
    for (double gap : {0.0, 1e-12, 1e-9, 1e-7}) {
        const ChainSpec c{0.0, 1e-3, 0};
        const RateVector u{-0.5, -0.5 - 1e-3 + gap};
        const Mat2 want = eigen_expm(mgf_generator(c, u), 2.0);
        expect_near(phi_homogeneous(c, u, 2.0), want, 1e-13);
    }
}

TEST(Chain, PhiAtZeroAndZeroExponent) {
    const ChainSpec c{0.3, 0.7, 0};
    expect_near(phi_homogeneous(c, {-1.0, -2.0}, 0.0), Mat2::identity(), 0.0);
    for (double t : {0.1, 1.0, 7.5}) expect_near(phi_homogeneous(c, {0.0, 0.0}, t), transition_matrix(c, t), 1e-14);
}

TEST(Chain, PhiSemigroup) {
    const ChainSpec c{0.4, 1.3, 0};
    const RateVector u{-0.2, -1.1};
    expect_near(phi_homogeneous(c, u, 2.5), phi_homogeneous(c, u, 1.0) * phi_homogeneous(c, u, 1.5), 1e-14);
}

TEST(Chain, DerivativeMatchesFiniteDifference) {
    const ChainSpec c{0.4, 1.3, 0};
    const RateVector u{-0.2, -1.1};
    const double h = 1e-5;
    const Mat2 fd = (phi_homogeneous(c, u, 2.0 + h) - phi_homogeneous(c, u, 2.0 - h)) * (0.5 / h);
    expect_near(phi_homogeneous_derivative(c, u, 2.0), fd, 1e-9);
}

TEST(Chain, PsiOfZeroIsOneAndDegenerateDenominatorThrows) {
    const ChainSpec c{0.1, 0.1, 0};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(mgf_homogeneous(c, {0.0, 0.0}, i, j, 3.0), 1.0, 1e-14);
    const ChainSpec frozen{0.0, 0.0, 0};
    EXPECT_THROW(mgf_homogeneous(frozen, {-1.0, -1.0}, 0, 1, 1.0), DegenerateDenominator);
    EXPECT_NEAR(mgf_homogeneous(frozen, {-1.0, -2.0}, 1, 1, 1.0), std::exp(-2.0), 1e-15);
}

TEST(Chain, StepSize) {
    EXPECT_NEAR(step_size(0.01, 0.11), 0.0913666895, 1e-10);
    EXPECT_TRUE(std::isinf(step_size(0.01, 0.0)));
    EXPECT_THROW(step_size(0.0, 1.0), InvalidArgument);
    EXPECT_THROW(step_size(1.0, 1.0), InvalidArgument);
    EXPECT_THROW(step_size(0.5, -1.0), InvalidArgument);
}

TEST(Chain, InhomogeneousReducesToHomogeneousForConstantRates) {
    const ChainSpec c{0.2, 0.5, 0};
    TimeRateFunction f;
    f.rate = [](double) { return RateVector{-0.3, -0.8}; };
    f.bound = 0.8;
    expect_near(phi_inhomogeneous(c, f, 3.0, 4.0, 1e-3), phi_homogeneous(c, {-0.3, -0.8}, 4.0), 1e-13);
}

TEST(Chain, InhomogeneousConvergesToFineReference) {
    const ChainSpec c{0.3, 0.6, 0};
    TimeRateFunction f;
    f.rate = [](double t) { return RateVector{-std::exp(-t), -0.5 - 0.5 * std::exp(-t)}; };
    f.bound = 1.0;
    Mat2 ref = Mat2::identity();
    constexpr int kFine = 200000;
    for (int k = 0; k < kFine; ++k) {
        const double mid = 0.5 + 2.0 * (k + 0.5) / kFine;
        ref *= eigen_expm(mgf_generator(c, f(mid)), 2.0 / kFine);
    }
    double prev = 1.0;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const double err = max_abs(phi_inhomogeneous(c, f, 0.5, 2.0, eps) - ref);
        EXPECT_LT(err, 2.0 * eps);
        EXPECT_LT(err, prev);
        prev = err;
    }
}

TEST(Chain, InhomogeneousRespectsBreakpoints) {
    const ChainSpec c{0.2, 0.4, 0};
    TimeRateFunction f;
    f.rate = [](double t) { return t < 1.3 ? RateVector{-0.1, -0.2} : RateVector{-0.9, -0.7}; };
    f.breakpoints = {1.3};
    f.bound = 0.9;
    const Mat2 want = phi_homogeneous(c, {-0.1, -0.2}, 1.3) * phi_homogeneous(c, {-0.9, -0.7}, 0.7);
    expect_near(phi_inhomogeneous(c, f, 0.0, 2.0, 0.5), want, 1e-13);
}

TEST(Chain, EpsilonInfeasibleExample) {
    const EpsilonChoice e = epsilon_for_relative_error(0.01, 1.0, 1.0, 0.11);
    EXPECT_FALSE(e.bound_satisfied);
    EXPECT_DOUBLE_EQ(e.epsilon, 0.01);
}

TEST(Chain, EpsilonFeasibleExample) {
    const EpsilonChoice e = epsilon_for_relative_error(0.01, 1e-4, 1e-4, 0.11);
    ASSERT_TRUE(e.bound_satisfied);
    EXPECT_NEAR(e.epsilon, 0.00495659, 1e-7);
    EXPECT_LT(detail::relative_error_lhs(e.epsilon, 1e-4, 0.11), 0.005);
    EXPECT_GE(detail::relative_error_lhs(e.epsilon + 1e-9, 1e-4, 0.11), 0.005);
}

TEST(Chain, EpsilonTrivialCases) {
    EXPECT_TRUE(epsilon_for_relative_error(0.01, 0.0, 0.0, 1.0).bound_satisfied);
    EXPECT_DOUBLE_EQ(epsilon_for_relative_error(0.01, 1.0, 1.0, 0.0).epsilon, kEpsilonCap);
    EXPECT_THROW(epsilon_for_relative_error(0.0, 1.0, 1.0, 1.0), InvalidArgument);
}

TEST(Chain, RejectsInvalidSpecs) {
    EXPECT_THROW((ChainSpec{-0.1, 0.1, 0}.validate()), InvalidArgument);
    EXPECT_THROW((ChainSpec{0.1, 0.1, 2}.validate()), InvalidArgument);
    EXPECT_THROW(transition_matrix({0.1, 0.1, 0}, -1.0), InvalidArgument);
}
