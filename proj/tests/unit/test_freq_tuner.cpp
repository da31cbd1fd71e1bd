#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fopid/reproduce.hpp"

using namespace fopid;

namespace {

constexpr double kPi = std::numbers::pi;

FopidParams listed(const std::string& plant) { return reference_freq_controller(plant); }

Fotf model(const std::string& plant) { return to_fotf(bundled_model(plant)); }

bool within(const FopidParams& a, const FopidParams& b, double rel) {
    const RealVector x = a.to_vector(), y = b.to_vector();
    return ((x - y).cwiseAbs().array() <= rel * y.cwiseAbs().array()).all();
}

}  // namespace

TEST(Controller, ProportionalIsFlat) {
    const FopidParams c{1.0, 0.0, 0.0, 0.7, 1.3};
    for (double w : {0.01, 1.0, 100.0}) EXPECT_LT(std::abs(controller_response(c, w) - 1.0), 1e-15);
}

TEST(Controller, PureIntegrator) {
    const FopidParams c{0.0, 1.0, 0.0, 1.0, 1.0};
    for (double w : {0.1, 2.0}) {
        EXPECT_LT(std::abs(controller_response(c, w) - 1.0 / std::complex<double>(0.0, w)), 1e-14);
        EXPECT_LT(std::abs(freq_response(fopid_to_fotf(c), w) - 1.0 / std::complex<double>(0.0, w)), 1e-14);
    }
}

TEST(Controller, AnalyticForm) {
    const ControllerResponse p = controller_response_analytic({2.5, 0.0, 0.0, 1.0, 1.0}, 3.0);
    EXPECT_DOUBLE_EQ(p.magnitude, 2.5);
    EXPECT_DOUBLE_EQ(p.phase, 0.0);
    EXPECT_DOUBLE_EQ(p.phase_slope, 0.0);

    const ControllerResponse i = controller_response_analytic({0.0, 1.0, 0.0, 0.6, 1.0}, 2.0);
    EXPECT_NEAR(i.phase, -0.6 * kPi / 2.0, 1e-14);
    EXPECT_NEAR(i.phase_slope, 0.0, 1e-14);

    const ControllerResponse u = controller_response_analytic({1.0, 1.0, 1.0, 1.0, 1.0}, 1.0);
    EXPECT_NEAR(u.magnitude, 1.0, 1e-14);
    EXPECT_NEAR(u.phase, 0.0, 1e-14);
}

TEST(Controller, AnalyticAgreesWithNumeric) {
    const FopidParams c{0.9, 0.25, 0.2, 1.16, 0.99};
    for (double w : {0.05, 0.3, 2.0}) {
        const ControllerResponse a = controller_response_analytic(c, w);
        const auto v = controller_response(c, w);
        EXPECT_NEAR(a.magnitude, std::abs(v), 1e-12);
        EXPECT_NEAR(a.phase, std::arg(v), 1e-12);
        EXPECT_NEAR(a.phase_slope, phase_slope(fopid_to_fotf(c), w), 1e-6);
    }
}

TEST(Controller, Validation) {
    EXPECT_THROW((FopidParams{-1.0, 1.0, 1.0, 1.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((FopidParams{1.0, 1.0, 1.0, 0.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((FopidParams{1.0, 1.0, 1.0, 1.0, 2.5}.validate()), std::invalid_argument);
    EXPECT_FALSE((FopidParams{1.0, 1.0, 1.0, 1.0, 2.0}.admissible()));
    EXPECT_TRUE((FopidParams{1.0, 1.0, 1.0, 1.0, 1.0}.admissible()));
}

TEST(Residuals, GainConditionByConstruction) {
    const Fotf p = model("P2");
    const FreqSpec spec = reference_spec("P2");
    const FopidParams c{1.0 / std::abs(freq_response(p, spec.omega_gc)), 0.0, 0.0, 1.0, 1.0};
    EXPECT_NEAR(spec_residuals(c, p, spec)[1], 0.0, 1e-15);
}

TEST(Residuals, ListedP1ControllerHasUnitLoopGain) {
    const FopidParams c = listed("P1");
    const auto g = controller_response(c, 0.3) * freq_response(model("P1"), 0.3);
    EXPECT_NEAR(std::abs(g), 1.0, 1e-3);
}

TEST(Residuals, ListedP2ControllerSatisfiesDesignEquations) {
    const SpecResiduals r = spec_residuals(listed("P2"), model("P2"), reference_spec("P2"));
    EXPECT_LE(std::abs(r[0]), 0.05);
    EXPECT_LE(std::abs(r[1]), 0.05);
    EXPECT_LE(std::abs(r[2]), 0.05);
}

TEST(Residuals, ScaleConsistency) {
    const Fotf p = model("P3");
    const FreqSpec spec = reference_spec("P3");
    const FopidParams c = listed("P3");
    const double k = 3.7;
    const Fotf pk(k * p.num, p.den, p.delay);
    const FopidParams ck{c.Kp / k, c.Ki / k, c.Kd / k, c.lambda, c.mu};
    const SpecResiduals a = spec_residuals(c, p, spec), b = spec_residuals(ck, pk, spec);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(a[i], b[i], 1e-9 * (1.0 + std::abs(a[i])));
}

TEST(Residuals, UnwrappedPhaseFollowsBranch) {
    const std::vector<double> l{1.0, 1.0};
    const Fotf g(FracPoly{{1.0, 0.0}}, FracPoly::from_coefficients(poly_mul(poly_mul(l, l), l)));
    EXPECT_NEAR(unwrapped_phase(g, 0.01, 10.0), -3.0 * std::atan(10.0), 1e-9);
}

TEST(Residuals, ListedDesignsMeetSensitivityCaps) {
    for (const auto& plant : kPlantNames) {
        const SpecResiduals r = spec_residuals(listed(plant), model(plant), reference_spec(plant));
        EXPECT_LE(r[3], 0.5) << plant;
        EXPECT_LE(r[4], 0.5) << plant;
    }
}

TEST(FreqTuning, GainsForOrdersSolveFirstThreeEquations) {
    const Fotf p = model("P2");
    const FreqSpec spec = reference_spec("P2");
    const auto c = gains_for_orders(p, spec, 1.1, 0.9);
    ASSERT_TRUE(c);
    const SpecResiduals r = spec_residuals(*c, p, spec);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r[i], 0.0, 1e-9);
}

TEST(FreqTuning, PureGainPlantDoesNotConverge) {
    const Fotf p(FracPoly{{2.0, 0.0}}, FracPoly{{1.0, 0.0}});
    const TuningResult t = tune_frequency_domain(p, FreqSpec{});
    EXPECT_FALSE(t.converged);
    EXPECT_FALSE(t.advisory.empty());
}

TEST(FreqTuning, ConvergedOrRelaxedDesignsSolvePhaseGainFlatness) {
    for (const auto& plant : kPlantNames) {
        const TuningResult t = tune_frequency_domain(model(plant), reference_spec(plant));
        const SpecResiduals r = spec_residuals(t.params, model(plant), reference_spec(plant));
        EXPECT_TRUE(t.converged || t.caps_relaxed) << plant;
        for (std::size_t i = 0; i < 3; ++i) EXPECT_LE(std::abs(r[i]), 1e-6) << plant << " r" << i + 1;
        if (t.converged) {
            EXPECT_LE(std::abs(r[3]), 1e-4) << plant;
            EXPECT_LE(std::abs(r[4]), 1e-4) << plant;
        }
    }
}

TEST(FreqTuning, FlatPhaseAroundCrossover) {
    for (const auto& plant : kPlantNames) {
        const Fotf p = model(plant);
        const FreqSpec spec = reference_spec(plant);
        const TuningResult t = tune_frequency_domain(p, spec);
        const Fotf loop = series(fopid_to_fotf(t.params), p);
        const double ref = unwrapped_phase(loop, spec.omega_s, spec.omega_gc);
        for (double f = 0.8; f <= 1.2001; f += 0.05) {
            const double ph = unwrapped_phase(loop, spec.omega_s, f * spec.omega_gc);
            EXPECT_LE(std::abs(ph - ref) * 180.0 / kPi, 2.0) << plant << " at " << f << " omega_gc";
        }
    }
}

TEST(FreqTuning, MatchesListedP1Controller) {
    const TuningResult t = tune_frequency_domain(model("P1"), reference_spec("P1"));
    EXPECT_TRUE(within(t.params, listed("P1"), 0.15));
}

TEST(FreqTuning, MatchesListedP3Controller) {
    const TuningResult t = tune_frequency_domain(model("P3"), reference_spec("P3"));
    EXPECT_TRUE(within(t.params, listed("P3"), 0.15));
}

TEST(FreqTuning, Deterministic) {
    const TuningResult a = tune_frequency_domain(model("P4"), reference_spec("P4"));
    const TuningResult b = tune_frequency_domain(model("P4"), reference_spec("P4"));
    EXPECT_EQ(a.params.to_vector(), b.params.to_vector());
    EXPECT_EQ(a.residuals, b.residuals);
}

TEST(FreqTuning, PhaseMarginInsensitiveToLoopGain) {
    for (const auto& plant : kPlantNames) {
        const Fotf p = model(plant);
        const FreqSpec spec = reference_spec(plant);
        const Fotf loop = series(fopid_to_fotf(tune_frequency_domain(p, spec).params), p);
        const auto margin_deg = [&](double k) {
            double lo = spec.omega_gc * 1e-2, hi = spec.omega_gc * 1e2;
            for (int i = 0; i < 200; ++i) {
                const double mid = std::sqrt(lo * hi);
                (k * std::abs(freq_response(loop, mid)) > 1.0 ? lo : hi) = mid;
            }
            return 180.0 + unwrapped_phase(loop, spec.omega_s, std::sqrt(lo * hi)) * 180.0 / kPi;
        };
        const double nominal = margin_deg(1.0);
        for (double k : {0.5, 0.8, 1.25, 2.0}) EXPECT_LE(std::abs(margin_deg(k) - nominal), 3.0) << plant << " k " << k;
    }
}
