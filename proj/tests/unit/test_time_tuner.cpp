#include <cmath>

#include <gtest/gtest.h>

#include "fopid/reproduce.hpp"

using namespace fopid;

namespace {

Fotf lag(double pole) { return Fotf(FracPoly{{1.0, 0.0}}, FracPoly{{1.0, 1.0}, {pole, 0.0}}); }

FopidParams published(int table, IndexKind k) {
    return controller_from_json(reference_data().at("table" + std::to_string(table)).at("rows").at(to_string(k)).at("controller"));
}

double published_min(int table, IndexKind k) {
    return reference_data().at("table" + std::to_string(table)).at("rows").at(to_string(k)).at("j_min").get<double>();
}

const std::vector<TimeTuneResult>& p1_results() {
    static const std::vector<TimeTuneResult> r = reproduce_time_results("P1");
    return r;
}

std::vector<double> exp_decay(double dt, double t_end) {
    std::vector<double> e(static_cast<std::size_t>(std::lround(t_end / dt)) + 1);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(-dt * static_cast<double>(i));
    return e;
}

}  // namespace

TEST(SimConfig, Validation) {
    EXPECT_THROW((SimConfig{0.0, 50.0}.validate()), std::invalid_argument);
    EXPECT_THROW((SimConfig{0.01, 0.001}.validate()), std::invalid_argument);
    EXPECT_THROW((SimConfig{0.01, 50.0, 0}.validate()), std::invalid_argument);
    EXPECT_EQ((SimConfig{}.samples()), 5001u);
}

TEST(Indices, ParseAndName) {
    EXPECT_EQ(parse_index_kind("itae"), IndexKind::ITAE);
    EXPECT_EQ(parse_index_kind("SUM"), IndexKind::SUM_ALL);
    EXPECT_THROW(parse_index_kind("iae2"), std::invalid_argument);
    EXPECT_EQ(to_string(IndexKind::ISTSE), "ISTSE");
}

TEST(Indices, DecayingExponential) {
    const auto e = exp_decay(0.001, 50.0);
    EXPECT_NEAR(performance_index(e, 0.001, IndexKind::IAE), 1.0, 1e-3);
    EXPECT_NEAR(performance_index(e, 0.001, IndexKind::ITAE), 1.0, 1e-3);
    EXPECT_NEAR(performance_index(e, 0.001, IndexKind::ISE), 0.5, 1e-3);
    EXPECT_NEAR(performance_index(e, 0.001, IndexKind::ITSE), 0.25, 1e-3);
    EXPECT_NEAR(performance_index(e, 0.001, IndexKind::ISTSE), 0.25, 1e-3);
    EXPECT_NEAR(performance_index(e, 0.001, IndexKind::ISTES), 0.75, 1e-3);
    EXPECT_NEAR(performance_index(e, 0.001, IndexKind::SUM_ALL), 3.75, 6e-3);
}

TEST(Indices, WeightedSum) {
    const auto e = exp_decay(0.01, 50.0);
    IndexWeights w;
    w.w = {2.0, 0.0, 0.0, 0.0, 0.0, 1.0};
    const double expect =
        2.0 * performance_index(e, 0.01, IndexKind::IAE) + performance_index(e, 0.01, IndexKind::ISTSE);
    EXPECT_NEAR(performance_index(e, 0.01, IndexKind::SUM_ALL, w), expect, 1e-12);
    w.w.fill(0.0);
    EXPECT_THROW(w.validate(), std::invalid_argument);
}

TEST(Indices, ZeroErrorAndOverflow) {
    const std::vector<double> zero(100, 0.0);
    for (IndexKind k : kAllIndices) EXPECT_EQ(performance_index(zero, 0.01, k), 0.0);
    std::vector<double> bad(100, 1.0);
    bad[50] = std::numeric_limits<double>::infinity();
    EXPECT_TRUE(std::isinf(performance_index(bad, 0.01, IndexKind::IAE)));
}

TEST(ClosedLoop, ProportionalOnFirstOrderLag) {
    const ClosedLoop loop = closed_loop_realize(lag(1.0), {1.0, 0.0, 0.0, 1.0, 1.0}, {});
    EXPECT_NEAR(frequency_response(loop.T, 0.0).real(), 0.5, 1e-12);
    EXPECT_NEAR(frequency_response(loop.S, 0.0).real() + frequency_response(loop.T, 0.0).real(), 1.0, 1e-12);
}

TEST(ClosedLoop, SensitivityPlusComplementaryIsOne) {
    const FopidParams c = published(5, IndexKind::ITAE);
    const ClosedLoop loop = closed_loop_realize(bundled_plant("P2"), c, {});
    for (double w : log_space(1e-3, 1e3, 61)) {
        EXPECT_LT(std::abs(frequency_response(loop.S, w) + frequency_response(loop.T, w) - 1.0), 1e-12) << w;
    }
}

TEST(ClosedLoop, MatchesExactLoopInMidBand) {
    const FopidParams c = published(5, IndexKind::ITAE);
    const Fotf p = bundled_plant("P2");
    const ClosedLoop loop = closed_loop_realize(p, c, {});
    for (double w : {0.05, 0.5, 2.0}) {
        const auto g = controller_response(c, w) * freq_response(p, w);
        EXPECT_LT(std::abs(frequency_response(loop.T, w) - g / (1.0 + g)), 1e-2) << w;
    }
}

TEST(Simulation, IntegratorLoopIsFirstOrder) {
    const Fotf integ(FracPoly{{1.0, 0.0}}, FracPoly{{1.0, 1.0}});
    const SimResult r = simulate_step(closed_loop_realize(integ, {1.0, 0.0, 0.0, 1.0, 1.0}, {}), {});
    EXPECT_NEAR(r.y[100], 1.0 - std::exp(-1.0), 1e-3);
    EXPECT_NEAR(r.e[100], std::exp(-1.0), 1e-3);
}

TEST(Simulation, ZeroReferenceIsQuiet) {
    const SimResult r = simulate_step(closed_loop_realize(lag(1.0), {1.0, 1.0, 0.5, 0.9, 0.8}, {}), {}, std::nullopt, 0.0);
    for (const auto* v : {&r.y, &r.u, &r.e}) {
        for (double x : *v) EXPECT_EQ(x, 0.0);
    }
}

TEST(Simulation, PublishedItaeDesignOnP2) {
    const SimConfig cfg;
    const ClosedLoop loop = closed_loop_realize(bundled_plant("P2"), published(5, IndexKind::ITAE), cfg);
    EXPECT_TRUE(is_stable(loop.S));
    EXPECT_NEAR(step_metrics(simulate_step(loop, cfg)).mp_pct, 1.7, 1.0);
}

TEST(Simulation, LoadDisturbanceRecovers) {
    const SimConfig cfg;
    const ClosedLoop loop = closed_loop_realize(bundled_plant("P2"), published(5, IndexKind::ITAE), cfg);
    const SimResult r = simulate_step(loop, cfg, Disturbance{25.0, 1.0});
    const double before = r.y[2400];
    double peak = 0.0;
    for (std::size_t i = 2500; i < r.y.size(); ++i) peak = std::max(peak, std::abs(r.y[i] - 1.0));
    EXPECT_NEAR(before, 1.0, 0.02);
    EXPECT_GT(peak, 0.01);
    EXPECT_LT(peak, 2.0);
    EXPECT_NEAR(r.y.back(), 1.0, 0.02);
}

TEST(Simulation, PublishedItseDesignOnP1) {
    const SimConfig cfg;
    const SimResult r = simulate_step(closed_loop_realize(bundled_plant("P1"), published(4, IndexKind::ITSE), cfg), cfg);
    EXPECT_NEAR(performance_index(r, IndexKind::ITSE), 0.6950, 0.05 * 0.6950);
}

TEST(Objective, UnstableCandidateIsPenalized) {
    const std::vector<double> l{1.0, 1.0};
    const Fotf p1(FracPoly{{1.0, 0.0}}, FracPoly::from_coefficients(poly_mul(poly_mul(l, l), l)));
    const SimConfig cfg;
    const StateSpaced plant = realize(p1, cfg.oustaloup, cfg.pade_order);
    EXPECT_GE(time_objective(plant, {20.0, 0.01, 0.01, 1.0, 1.0}, IndexKind::IAE, cfg), 1e6);
    EXPECT_LT(time_objective(plant, {1.0, 0.3, 0.5, 1.0, 1.0}, IndexKind::IAE, cfg), 1e6);
}

TEST(TimeTuning, BeatsBestProportionalOnFirstOrderLag) {
    const Fotf p = lag(1.0);
    const SimConfig cfg;
    const StateSpaced plant = realize(p, cfg.oustaloup, cfg.pade_order);
    double best_gain_only = std::numeric_limits<double>::infinity();
    for (double kp : log_space(0.01, 500.0, 200)) {
        best_gain_only = std::min(best_gain_only, time_objective(plant, {kp, 0.0, 0.0, 1.0, 1.0}, IndexKind::ISE, cfg));
    }
    TimeTuneOptions opt;
    opt.starts = 3;
    const TimeTuneResult r = tune_time_domain(p, IndexKind::ISE, default_time_bounds(), cfg, opt);
    EXPECT_TRUE(r.found);
    EXPECT_TRUE(r.stable);
    EXPECT_LE(r.j_min, best_gain_only);
}

TEST(TimeTuning, Deterministic) {
    TimeTuneOptions opt;
    opt.starts = 2;
    opt.max_evals_per_start = 300;
    const TimeTuneResult a = tune_time_domain(lag(0.5), IndexKind::ITAE, default_time_bounds(), {}, opt);
    const TimeTuneResult b = tune_time_domain(lag(0.5), IndexKind::ITAE, default_time_bounds(), {}, opt);
    EXPECT_EQ(a.params.to_vector(), b.params.to_vector());
    EXPECT_EQ(a.j_min, b.j_min);
}

TEST(TimeTuning, BoundsValidated) {
    RealVector lo = default_time_bounds().lower, hi = default_time_bounds().upper;
    lo[0] = 0.0;
    EXPECT_THROW(tune_time_domain(lag(1.0), IndexKind::IAE, BoxBounds(lo, hi)), std::invalid_argument);
}

TEST(TimeTuning, P2ItaeWithinPublishedMinimum) {
    const TimeTuneResult r = tune_time_domain(bundled_plant("P2"), IndexKind::ITAE);
    ASSERT_TRUE(r.found);
    EXPECT_LE(r.j_min, 1.10 * 1.7622);
}

TEST(TimeTuning, P3IaeWithinPublishedMinimum) {
    const TimeTuneResult r = tune_time_domain(bundled_plant("P3"), IndexKind::IAE);
    ASSERT_TRUE(r.found);
    EXPECT_LE(r.j_min, 1.10 * 2.1936);
}

TEST(TimeTuning, P2SumWithinPublishedMinimum) {
    const TimeTuneResult r = tune_time_domain(bundled_plant("P2"), IndexKind::SUM_ALL);
    ASSERT_TRUE(r.found);
    EXPECT_LE(r.j_min, 1.10 * published_min(5, IndexKind::SUM_ALL));
}

TEST(TimeTuning, P1OptimaPassIndependentStabilityCheck) {
    for (const auto& r : p1_results()) {
        ASSERT_TRUE(r.found) << to_string(r.index);
        EXPECT_TRUE(independently_stable(bundled_plant("P1"), r.params, {}, 7)) << to_string(r.index);
        EXPECT_LE(r.j_min, 1.10 * published_min(4, r.index)) << to_string(r.index);
    }
}

TEST(TimeTuning, P1IaeGivesLowestOvershoot) {
    const auto& res = p1_results();
    const auto lowest = std::min_element(res.begin(), res.end(),
                                         [](const auto& a, const auto& b) { return a.mp_pct < b.mp_pct; });
    EXPECT_EQ(lowest->index, IndexKind::IAE) << "lowest overshoot from " << to_string(lowest->index);
}

TEST(TimeTuning, P1HorizonDoublingChangesMinimumByUnderOnePercent) {
    SimConfig longer;
    longer.t_end = 100.0;
    const Fotf p = bundled_plant("P1");
    for (const auto& r : p1_results()) {
        const double j100 = performance_index(simulate_step(closed_loop_realize(p, r.params, longer), longer), r.index);
        EXPECT_LT(std::abs(j100 - r.j_min) / r.j_min, 0.01) << to_string(r.index);
    }
}
