#include <cmath>

#include <gtest/gtest.h>

#include "fopid/state_space.hpp"

using namespace fopid;

namespace {

StateSpaced first_order(double pole) {
    const std::vector<double> num{1.0}, den{1.0, pole};
    return realize_tf(num, den);
}

}  // namespace

TEST(StateSpace, InconsistentDimensionsThrow) {
    EXPECT_THROW(StateSpaced(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 2),
                             Eigen::MatrixXd::Zero(1, 1)),
                 std::invalid_argument);
}

TEST(StateSpace, SeriesMultipliesResponses) {
    const StateSpaced a = first_order(1.0), b = first_order(2.0);
    const StateSpaced ab = series(a, b);
    for (double w : {0.01, 0.3, 1.0, 7.0, 100.0}) {
        const auto expect = frequency_response(a, w) * frequency_response(b, w);
        EXPECT_LT(std::abs(frequency_response(ab, w) - expect), 1e-12);
    }
}

TEST(StateSpace, ParallelAddsResponses) {
    const StateSpaced a = first_order(1.0), b = StateSpaced::gain(3.0);
    for (double w : {0.1, 1.0, 10.0}) {
        EXPECT_LT(std::abs(frequency_response(parallel(a, b), w) - (frequency_response(a, w) + 3.0)), 1e-12);
    }
}

TEST(StateSpace, UnityFeedbackGivesComplementarySensitivity) {
    const StateSpaced g = series(first_order(1.0), StateSpaced::gain(2.0));
    const StateSpaced t = feedback(g, StateSpaced::gain(1.0));
    for (double w : {0.0, 0.5, 5.0}) {
        const auto gw = frequency_response(g, w);
        EXPECT_LT(std::abs(frequency_response(t, w) - gw / (1.0 + gw)), 1e-12);
    }
    EXPECT_NEAR(frequency_response(t, 0.0).real(), 2.0 / 3.0, 1e-12);
}

TEST(StateSpace, DerivativeOutputOfStrictlyProperSystem) {
    const std::vector<double> num{1.0}, den{1.0, 3.0, 2.0};
    const StateSpaced g = realize_tf(num, den);
    const StateSpaced dg = derivative_output(g, 1);
    for (double w : {0.2, 2.0}) {
        const std::complex<double> s(0.0, w);
        EXPECT_LT(std::abs(frequency_response(dg, w) - s * frequency_response(g, w)), 1e-12);
    }
    EXPECT_THROW(derivative_output(g, 3), std::invalid_argument);
}

TEST(StateSpace, FirstOrderStepMatchesAnalytic) {
    const RealVector y = step_response(first_order(1.0), 0.01, 501);
    for (Eigen::Index k = 0; k < y.size(); k += 50) {
        EXPECT_NEAR(y[k], 1.0 - std::exp(-0.01 * static_cast<double>(k)), 1e-12);
    }
    EXPECT_NEAR(y[100], 0.6321, 1e-4);
}

TEST(StateSpace, ImpulseResponseIsKernel) {
    const RealVector h = impulse_response(first_order(2.0), 0.01, 301);
    for (Eigen::Index k = 0; k < h.size(); k += 30) {
        EXPECT_NEAR(h[k], std::exp(-2.0 * 0.01 * static_cast<double>(k)), 1e-12);
    }
}

TEST(StateSpace, ZeroInputAndStateGiveZeroOutput) {
    const DiscreteLti d = discretize_zoh(first_order(1.0), 0.01);
    const std::vector<double> u(100, 0.0);
    EXPECT_EQ(simulate_zoh(d, u).cwiseAbs().maxCoeff(), 0.0);
}

TEST(StateSpace, PureGainSimulation) {
    const DiscreteLti d = discretize_zoh(StateSpaced::gain(2.0), 0.1);
    const std::vector<double> u{1.0, -1.0, 0.5};
    const RealVector y = simulate_zoh(d, u);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(y[k], 2.0 * u[static_cast<std::size_t>(k)]);
}

TEST(StateSpace, Stability) {
    EXPECT_TRUE(is_stable(first_order(1.0)));
    EXPECT_FALSE(is_stable(first_order(-1.0)));
    const std::vector<double> num{1.0}, den{1.0, 0.1, 1.0};
    EXPECT_TRUE(is_stable(realize_tf(num, den)));
    EXPECT_FALSE(is_stable(StateSpaced::integrator()));
    EXPECT_NEAR(spectral_abscissa(realize_tf(num, den)), -0.05, 1e-12);
}

TEST(StateSpace, RealizationMatchesTransferFunction) {
    const std::vector<double> num{2.0, 1.0, 3.0}, den{1.0, 4.0, 5.0, 6.0};
    const StateSpaced g = realize_tf(num, den);
    for (double w : {0.1, 1.0, 10.0}) {
        const std::complex<double> s(0.0, w);
        const auto expect = (2.0 * s * s + s + 3.0) / (s * s * s + 4.0 * s * s + 5.0 * s + 6.0);
        EXPECT_LT(std::abs(frequency_response(g, w) - expect), 1e-12);
    }
}
