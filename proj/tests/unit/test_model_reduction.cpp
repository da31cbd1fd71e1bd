#include <cmath>

#include <gtest/gtest.h>

#include "fopid/reproduce.hpp"

using namespace fopid;

namespace {

double published_jf(const std::string& plant, TemplateKind k) {
    return reference_data().at("table1").at(plant).at(to_string(k)).at("j_f").get<double>();
}

const std::vector<RankEntry>& ranking(const std::string& plant) {
    static std::map<std::string, std::vector<RankEntry>> cache;
    auto it = cache.find(plant);
    if (it == cache.end()) it = cache.emplace(plant, rank_templates(bundled_plant(plant))).first;
    return it->second;
}

double jf_of(const std::vector<RankEntry>& r, TemplateKind k) {
    for (const auto& e : r) {
        if (e.kind == k && e.fit) return e.fit->j_f;
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace

TEST(Templates, Nioptd2DenominatorTerms) {
    const Fotf g = to_fotf(Nioptd2{0.42456, 2.109, 1.015, 1.2157, 0.42515, 0.2694});
    const auto& t = g.den.terms();
    ASSERT_EQ(t.size(), 3u);
    EXPECT_DOUBLE_EQ(t[0].coeff, 1.0);
    EXPECT_DOUBLE_EQ(t[0].exponent, 2.109);
    EXPECT_DOUBLE_EQ(t[1].coeff, 1.2157);
    EXPECT_DOUBLE_EQ(t[1].exponent, 1.015);
    EXPECT_DOUBLE_EQ(t[2].coeff, 0.42515);
    EXPECT_DOUBLE_EQ(t[2].exponent, 0.0);
    EXPECT_DOUBLE_EQ(g.delay, 0.2694);
}

TEST(Templates, UnitFoptdIsFirstOrderLag) {
    const Fotf g = to_fotf(Foptd{1.0, 1.0, 0.0});
    for (double w : {0.1, 1.0, 10.0}) {
        EXPECT_LT(std::abs(freq_response(g, w) - 1.0 / std::complex<double>(1.0, w)), 1e-15);
    }
}

TEST(Templates, SoptdIsNioptd2WithIntegerOrders) {
    const Soptd s{1.3, 0.8, 0.5, 0.4};
    const Nioptd2 n{1.3, 2.0, 1.0, 0.8, 0.5, 0.4};
    for (double w : {0.01, 0.7, 5.0}) {
        EXPECT_LT(std::abs(freq_response(to_fotf(s), w) - freq_response(to_fotf(n), w)), 1e-14);
    }
}

TEST(Templates, ValidationAndParsing) {
    EXPECT_THROW(validate(Foptd{1.0, -1.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(validate(Foptd{1.0, 1.0, -0.1}), std::invalid_argument);
    EXPECT_THROW(validate(Nioptd2{1.0, 1.0, 1.5, 1.0, 1.0, 0.0}), std::invalid_argument);
    EXPECT_EQ(parse_template_kind("NIOPTD2"), TemplateKind::Nioptd2);
    EXPECT_EQ(parse_template_kind("nioptd-i"), TemplateKind::Nioptd1);
    EXPECT_THROW(parse_template_kind("sixth"), std::invalid_argument);
    EXPECT_NEAR(damping_ratio(1.0, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(natural_frequency(4.0), 2.0, 1e-15);
}

TEST(Templates, ParameterRoundTrip) {
    const ReducedModel m = Nioptd1{2.0, 3.0, 1.2, 0.5};
    const ReducedModel back = from_parameters(TemplateKind::Nioptd1, parameters(m));
    EXPECT_EQ(parameters(back), parameters(m));
    EXPECT_EQ(parameter_names(TemplateKind::Nioptd2).size(), 6u);
}

TEST(H2, FirstOrderLagNorm) {
    EXPECT_NEAR(h2_norm(to_fotf(Foptd{1.0, 1.0, 0.0})), 1.0 / std::sqrt(2.0), 1e-3);
}

TEST(H2, IdenticalSystemsHaveZeroMismatch) {
    const ReducedModel m = Nioptd2{0.42456, 2.109, 1.015, 1.2157, 0.42515, 0.2694};
    EXPECT_NEAR(h2_mismatch(to_fotf(m), m), 0.0, 1e-8);
}

TEST(H2, MismatchIsAMetric) {
    const Fotf a = to_fotf(Foptd{1.0, 2.0, 0.5});
    const Fotf b = to_fotf(Soptd{1.0, 1.5, 0.6, 0.3});
    const Fotf c = to_fotf(Nioptd1{0.9, 1.0, 1.3, 0.1});
    EXPECT_NEAR(h2_mismatch(a, b), h2_mismatch(b, a), 1e-14);
    EXPECT_LE(h2_mismatch(a, c), h2_mismatch(a, b) + h2_mismatch(b, c) + 1e-12);
    EXPECT_GT(h2_mismatch(a, b), 0.0);
}

TEST(Fit, RecoversPlantInTemplateForm) {
    const Fotf p = Fotf(FracPoly{{1.0, 0.0}}, FracPoly{{2.0, 1.0}, {1.0, 0.0}}, 0.5);
    const FitResult r = fit_template(p, TemplateKind::Foptd);
    const auto& m = std::get<Foptd>(r.model);
    EXPECT_LT(r.j_f, 1e-4);
    EXPECT_NEAR(m.K, 1.0, 1e-3);
    EXPECT_NEAR(m.T, 2.0, 1e-2);
    EXPECT_NEAR(m.L, 0.5, 1e-2);
}

TEST(Fit, FoptdShapedPlantTiesWithNioptd1) {
    const Fotf p = to_fotf(Foptd{1.5, 3.0, 1.0});
    const auto r = rank_templates(p);
    EXPECT_LT(jf_of(r, TemplateKind::Foptd), 1e-4);
    EXPECT_LT(jf_of(r, TemplateKind::Nioptd1), 1e-4);
}

TEST(Fit, Deterministic) {
    const Fotf p = bundled_plant("P1");
    const FitResult a = fit_template(p, TemplateKind::Nioptd1);
    const FitResult b = fit_template(p, TemplateKind::Nioptd1);
    EXPECT_EQ(parameters(a.model), parameters(b.model));
    EXPECT_EQ(a.j_f, b.j_f);
}

TEST(Fit, PublishedMinimaReachedOnAllPlants) {
    for (const auto& plant : kPlantNames) {
        for (TemplateKind k : kAllTemplates) {
            EXPECT_LE(jf_of(ranking(plant), k), 1.10 * published_jf(plant, k)) << plant << " " << to_string(k);
        }
    }
}

TEST(Fit, Nioptd2PreferredOnAllPlants) {
    for (const auto& plant : kPlantNames) {
        ASSERT_TRUE(ranking(plant).front().fit);
        EXPECT_EQ(ranking(plant).front().kind, TemplateKind::Nioptd2) << plant;
    }
}

TEST(Fit, NestedTemplatesNeverWorse) {
    for (const auto& plant : kPlantNames) {
        const auto& r = ranking(plant);
        EXPECT_LE(jf_of(r, TemplateKind::Nioptd2), jf_of(r, TemplateKind::Soptd) + 1e-3) << plant;
        EXPECT_LE(jf_of(r, TemplateKind::Nioptd1), jf_of(r, TemplateKind::Foptd) + 1e-3) << plant;
    }
}

TEST(Fit, RankingIsAscending) {
    const auto& r = ranking("P2");
    for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LE(r[i - 1].fit->j_f, r[i].fit->j_f);
}
