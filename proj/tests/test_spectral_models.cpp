#include "lanarray/envelopes.hpp"
#include "lanarray/spectral_models.hpp"
#include "lanarray/toeplitz.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lanarray;
using std::numbers::pi;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
    ParameterVector p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

double fgn_gamma(double H, int k) {
    auto p = [H](double x) { return std::pow(std::fabs(x), 2.0 * H); };
    return 0.5 * (p(k + 1.0) - 2.0 * p(k) + p(k - 1.0));
}

struct Case {
    ModelPtr model;
    ParameterVector theta;
    int n;
};

std::vector<Case> cases() {
    return {{white_noise_model(), vec({1.7}), 128},
            {MildAr1Model::power_rule(0.15), vec({1.2, 0.8}), 256},
            {MildAr1Model::constant_rule(0.5), vec({1.0, 1.0}), 64},
            {fou_model(1.0, 0.5), vec({1.5, 0.3, 0.9}), 512},
            {fou_model(2.0, 1.0), vec({0.7, 0.7, 1.3}), 64},
            {mixed_fbm_model(1.0), vec({0.15, 1.1, 0.3, 0.6}), 256}};
}

} // namespace

TEST(SpectralModels, WhiteNoiseIsFlat) {
    const auto m = white_noise_model();
    for (double l : {0.01, 1.0, 3.0}) EXPECT_DOUBLE_EQ(m->density(vec({2.0}), 10, l), 2.0 / (2.0 * pi));
}

TEST(SpectralModels, HalfHurstIncrementIsWhite) {
    for (double l : {1e-6, 0.3, 1.5, 3.1}) EXPECT_NEAR(fbm_increment_density(0.5, l), 1.0 / (2.0 * pi), 1e-12);
}

TEST(SpectralModels, FgnDensityIntegratesToAutocovariance) {
    for (double H : {0.1, 0.35, 0.8}) {
        const Symbol f{[H](double l) { return fbm_increment_density(H, l); }, 2.0 * H - 1.0, "fGN"};
        const Eigen::VectorXd g = fourier_coefficients(f, 20).gamma;
        for (int k = 0; k < 20; ++k) EXPECT_NEAR(g[k], fgn_gamma(H, k), 1e-9) << "H=" << H << " k=" << k;
    }
}

TEST(SpectralModels, Ar1DensityMatchesGeometricAutocovariance) {
    const auto m = MildAr1Model::power_rule(0.3);
    const ParameterVector th = vec({1.5, 2.0});
    const int n = 100;
    const double phi = 1.0 - 1.5 * m->drift_scale(n);
    const ModelStage st = m->stage(n);
    const Symbol f{[&](double l) {
                       double v = 0.0;
                       m->evaluate(th, st, l, 0, &v);
                       return v;
                   },
                   0.0, "f"};
    const Eigen::VectorXd g = fourier_coefficients(f, 30).gamma;
    for (int k = 0; k < 30; ++k) EXPECT_NEAR(g[k], std::pow(phi, k) * 2.0 / (1.0 - phi * phi), 1e-8 * g[0]);
}

TEST(SpectralModels, MixedFbmScalesEachComponentByMesh) {
    const auto m = mixed_fbm_model(2.0);
    const ParameterVector th = vec({0.2, 1.5, 0.4, 0.5});
    const int n = 50;
    const double d = 2.0 / n;
    for (double l : {0.05, 1.0, 2.5}) {
        const double expect = 1.5 * std::pow(d, 0.4) * fbm_increment_density(0.2, l) +
                              0.5 * std::pow(d, 0.8) * fbm_increment_density(0.4, l);
        EXPECT_NEAR(m->density(th, n, l), expect, 1e-12 * expect);
    }
}

TEST(SpectralModels, GradientMatchesFiniteDifferences) {
    for (const auto& c : cases()) {
        const int M = c.model->dimension();
        for (double l : {0.02, 0.7, 2.9}) {
            const Eigen::VectorXd g = c.model->gradient(c.theta, c.n, l);
            const Eigen::MatrixXd H = c.model->hessian(c.theta, c.n, l);
            for (int j = 0; j < M; ++j) {
                const double h = 1e-6 * (1.0 + std::fabs(c.theta[j]));
                ParameterVector p = c.theta, q = c.theta;
                p[j] += h;
                q[j] -= h;
                const double fd = (c.model->density(p, c.n, l) - c.model->density(q, c.n, l)) / (2.0 * h);
                EXPECT_NEAR(g[j], fd, 1e-6 * (std::fabs(fd) + c.model->density(c.theta, c.n, l)))
                    << c.model->id() << " j=" << j << " l=" << l;
                const Eigen::VectorXd dg = (c.model->gradient(p, c.n, l) - c.model->gradient(q, c.n, l)) / (2.0 * h);
                for (int k = 0; k < M; ++k)
                    EXPECT_NEAR(H(k, j), dg[k], 1e-5 * (dg.cwiseAbs().maxCoeff() + std::fabs(g[k]) + 1e-12))
                        << c.model->id() << " (" << k << "," << j << ") l=" << l;
            }
            EXPECT_TRUE(H.isApprox(H.transpose(), 1e-12));
        }
    }
}

TEST(SpectralModels, DensitiesArePositive) {
    for (const auto& c : cases())
        for (int i = 1; i <= 50; ++i) EXPECT_GT(c.model->density(c.theta, c.n, pi * i / 50.0), 0.0) << c.model->id();
}

TEST(SpectralModels, FrequencyZeroIsRejected) {
    EXPECT_THROW(white_noise_model()->density(vec({1.0}), 4, 0.0), DomainError);
}

TEST(SpectralModels, ParameterSpaces) {
    const auto ar = MildAr1Model::constant_rule(0.5);
    EXPECT_TRUE(ar->contains(vec({1.9, 1.0}), 10));
    EXPECT_FALSE(ar->contains(vec({2.0, 1.0}), 10));
    EXPECT_FALSE(ar->contains(vec({-0.1, 1.0})));
    const auto mf = mixed_fbm_model();
    EXPECT_TRUE(mf->contains(vec({0.1, 1.0, 0.3, 1.0})));
    EXPECT_FALSE(mf->contains(vec({0.3, 1.0, 0.1, 1.0})));
    EXPECT_FALSE(mf->contains(vec({0.1, 1.0, 0.4, 1.0})));
    const auto fou = fou_model();
    EXPECT_FALSE(fou->contains(vec({1.0, 1.0, 1.0})));
    EXPECT_FALSE(fou->contains(vec({0.0, 0.5, 1.0})));
    EXPECT_THROW(fou->require(vec({1.0, 0.5})), Error);
    EXPECT_THROW(MildAr1Model::power_rule(1.5), ContractError);
}

TEST(SpectralModels, PowerRuleStageNeedsGrowingHorizon) {
    const auto ar = MildAr1Model::power_rule(0.15);
    EXPECT_NEAR(ar->drift_scale(1024), std::pow(1024.0, -0.15), 1e-15);
    EXPECT_THROW(ar->stage(1), ContractError);
}

TEST(SpectralModels, LimitingFisherValues) {
    EXPECT_NEAR(white_noise_model()->limiting_fisher(vec({2.0}))(0, 0), 0.125, 1e-15);
    const Eigen::MatrixXd I = MildAr1Model::power_rule(0.15)->limiting_fisher(vec({1.0, 1.0}));
    EXPECT_TRUE(I.isApprox(Eigen::Vector2d(0.5, 0.5).asDiagonal().toDenseMatrix()));
    for (const auto& c : cases()) {
        const Eigen::MatrixXd L = c.model->limiting_fisher(c.theta);
        EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(L).info(), Eigen::Success) << c.model->id();
    }
}

TEST(SpectralModels, FouSpanCondition) {
    const auto fou = std::dynamic_pointer_cast<const FouModel>(fou_model(1.0, 0.5));
    ASSERT_TRUE(fou);
    EXPECT_TRUE(fou->span_condition(0.2));
    EXPECT_FALSE(fou->span_condition(0.3));
}

TEST(SpectralModels, WhiteNoiseEnvelopeTable) {
    const EnvelopeTable t = envelope_table_for(white_noise_model(), vec({2.0}), 64);
    EXPECT_EQ(t.m, 1);
    EXPECT_DOUBLE_EQ(t.c(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(t.alpha(0, 0), 0.0);
    // Memberships hold up to a constant; for white noise every ratio is flat in lambda and n.
    const EnvelopeTable big = envelope_table_for(white_noise_model(), vec({2.0}), 4096);
    ASSERT_EQ(t.memberships.size(), big.memberships.size());
    for (std::size_t i = 0; i < t.memberships.size(); ++i) {
        const auto& a = t.memberships[i];
        const auto& b = big.memberships[i];
        const double r0 = std::fabs(a.h(0.1)) / (a.coef * std::pow(0.1, -a.exponent));
        for (double l : {1.0, 3.0}) {
            EXPECT_NEAR(std::fabs(a.h(l)) / (a.coef * std::pow(l, -a.exponent)), r0, 1e-12) << a.name;
            EXPECT_NEAR(std::fabs(b.h(l)) / (b.coef * std::pow(l, -b.exponent)), r0, 1e-12) << b.name;
        }
    }
}

TEST(SpectralModels, EnvelopeTablesHaveValidIndices) {
    for (const auto& c : cases()) {
        const EnvelopeTable t = envelope_table_for(c.model, c.theta, c.n);
        EXPECT_NO_THROW(detail::check_indices(t)) << c.model->id();
        EXPECT_GT(t.memberships.size(), 0u);
    }
}
