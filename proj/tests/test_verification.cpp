#include "lanarray/verification.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lanarray;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
    ParameterVector p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

} // namespace

TEST(AuditReport, VerdictRules) {
    AuditReport r;
    r.settle();
    EXPECT_EQ(r.verdict, Verdict::inconclusive);
    r.check("a", true, "");
    r.settle();
    EXPECT_EQ(r.verdict, Verdict::pass);
    r.check("b", false, "off by one");
    r.settle();
    EXPECT_EQ(r.verdict, Verdict::fail);
    EXPECT_TRUE(r.passed("a"));
    EXPECT_FALSE(r.passed("b"));
    r.mark_inconclusive("cap");
    r.settle();
    EXPECT_EQ(r.verdict, Verdict::inconclusive);
    const nlohmann::json j = r.to_json();
    EXPECT_EQ(j["verdict"], "inconclusive");
    EXPECT_EQ(j["checks"].size(), 2u);
    EXPECT_NE(r.summary().find("off by one"), std::string::npos);
}

TEST(AuditHelpers, FittedExponent) {
    const auto e = detail::fitted_exponent({10.0, 100.0, 1000.0}, {3.0, 0.3, 0.03});
    ASSERT_TRUE(e.has_value());
    EXPECT_NEAR(*e, -1.0, 1e-12);
    EXPECT_FALSE(detail::fitted_exponent({10.0, 100.0}, {1.0, 0.0}).has_value());
}

TEST(AuditHelpers, SpherePointsAreUnit) {
    const auto pts = detail::sphere_points(3, 20);
    ASSERT_EQ(pts.size(), 20u);
    for (const auto& p : pts) EXPECT_NEAR(p.norm(), 1.0, 1e-12);
}

TEST(Audits, Cond11WhiteNoisePasses) {
    // The ball sup decays like n^-1/2 and drops under 5% only near n = 4096.
    Cond11Settings s;
    s.n_grid = {1024, 4096};
    s.ball_points = 8;
    const AuditReport r = audit_cond_1_1(white_noise_model(), vec({1.0}), s);
    EXPECT_EQ(r.verdict, Verdict::pass) << r.summary();
}

TEST(Audits, Cond11ToleranceIsMonotone) {
    // A tolerance that passes stays passing when loosened; one that fails stays failing when tightened.
    Cond11Settings s;
    s.n_grid = {256, 512};
    s.ball_points = 8;
    const auto m = MildAr1Model::power_rule(0.15);
    s.tolerance = 1e-6;
    EXPECT_EQ(audit_cond_1_1(m, vec({1.0, 1.0}), s).verdict, Verdict::fail);
    s.tolerance = 10.0;
    EXPECT_TRUE(audit_cond_1_1(m, vec({1.0, 1.0}), s).passed("sup distance at largest n <= tolerance"));
}

TEST(Audits, Cond12WhiteNoiseRate) {
    Cond12Settings s;
    s.n_grid = {256, 1024, 4096};
    const AuditReport r = audit_cond_1_2(white_noise_model(), vec({1.0}), s);
    EXPECT_EQ(r.verdict, Verdict::pass) << r.summary();
    EXPECT_NEAR(r.measured["exponent"].get<double>(), -1.0, 0.05);
}

TEST(Audits, TraceWithDensitySymbolIsExact) {
    TraceSettings s;
    s.n_grid = {64, 128, 256};
    const AuditReport r = audit_trace_theorem({white_noise_model(), vec({1.0}), "density"}, s);
    EXPECT_EQ(r.verdict, Verdict::pass) << r.summary();
    EXPECT_TRUE(r.measured["error_identically_small"].get<bool>());
}

TEST(Audits, TraceOverCapIsInconclusive) {
    TraceSettings s;
    s.n_grid = {64, 128};
    s.dense_cap = 64;
    const AuditReport r = audit_trace_theorem({white_noise_model(), vec({1.0}), "density"}, s);
    EXPECT_EQ(r.verdict, Verdict::inconclusive);
    ASSERT_TRUE(r.inconclusive_reason.has_value());
}

TEST(Audits, CltWhiteNoise) {
    CltSettings s;
    s.n = 256;
    s.replications = 300;
    const AuditReport r = audit_clt(white_noise_model(), vec({1.0}), s);
    EXPECT_EQ(r.verdict, Verdict::pass) << r.summary();
}

TEST(Audits, LanResidualVanishesAtZeroDirection) {
    LanSettings s;
    s.n_grid = {128, 256};
    s.replications = 10;
    s.a_grid = {Eigen::VectorXd::Zero(1)};
    const AuditReport r = audit_lan(white_noise_model(), vec({1.0}), s);
    for (const auto& row : r.measured["per_n"]) EXPECT_NEAR(row["residual_median"].get<double>(), 0.0, 1e-12);
}

TEST(Audits, EnvelopesWhiteNoisePass) {
    EnvelopeSettings s;
    s.n_grid = {1 << 10, 1 << 14};
    s.coefficient_n_grid = {1 << 8, 1 << 12, 1 << 16, 1 << 20};
    s.lambda_points = 100;
    s.theta_points = 2;
    const AuditReport r = audit_envelopes(white_noise_model(), vec({1.0}), s);
    EXPECT_EQ(r.verdict, Verdict::pass) << r.summary();
}

TEST(Audits, DahlhausExplicitRatio) {
    // The explicit density attains more than the erroneous rate.
    const double r1 = dahlhaus_explicit_ratio(64, 0.5, 2.0 / 3.0);
    const double r2 = dahlhaus_explicit_ratio(1024, 0.5, 2.0 / 3.0);
    const double slope = std::log(r2 / r1) / std::log(16.0);
    EXPECT_GT(slope, 1.0 / 6.0 + 0.05);
}

TEST(Audits, EfficiencyOutsideRangeIsInconclusive) {
    EfficiencySettings s;
    s.alpha = 0.3;
    s.n = 64;
    s.replications = 2;
    EXPECT_EQ(audit_efficiency_ar1(s).verdict, Verdict::inconclusive);
}

TEST(Audits, CubeGrid) {
    const auto g = cube_grid(2, {-1.0, 0.0, 1.0});
    EXPECT_EQ(g.size(), 9u);
}
