#include "lanarray/simulation.hpp"
#include "lanarray/spectral_models.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

using namespace lanarray;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
    ParameterVector p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

using Block = std::array<std::uint32_t, 4>;

} // namespace

// Known-answer vectors of the Random123 distribution for philox4x32-10.
TEST(Philox, KnownAnswers) {
    EXPECT_EQ(Philox4x32(0).generate({0, 0, 0, 0}), (Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32(0xffffffffffffffffULL).generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}),
              (Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32(0x299f31d0a4093822ULL).generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}),
              (Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamWalksCounters) {
    Philox4x32 a(42);
    const Block first = a.generate({0, 0, 0, 0}), second = a.generate({1, 0, 0, 0});
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a(), first[i]);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a(), second[i]);
}

TEST(Simulation, SamplersReproduceCovariance) {
    const auto m = mixed_fbm_model();
    const ParameterVector th = vec({0.2, 1.0, 0.4, 1.0});
    const int n = 24, R = 6000;
    const ModelStage st = m->stage(n);
    const Symbol f{[&](double l) {
                       double v = 0.0;
                       m->evaluate(th, st, l, 0, &v);
                       return v;
                   },
                   m->alpha_hint(th, n), "f"};
    const Eigen::MatrixXd S = toeplitz_dense(fourier_coefficients(f, n).gamma);
    for (SamplerKind kind : {SamplerKind::cholesky, SamplerKind::circulant}) {
        const GaussianSampler s(m, th, n, kind);
        EXPECT_FALSE(s.fallback_used());
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
        for (int r = 0; r < R; ++r) {
            const Eigen::VectorXd x = s.sample(1000 + r);
            acc += x * x.transpose();
        }
        acc /= R;
        EXPECT_LT((acc - S).norm() / S.norm(), 0.06) << to_string(kind);
    }
}

TEST(Simulation, SameSeedSamePath) {
    const auto m = fou_model();
    const ParameterVector th = vec({1.0, 0.3, 1.0});
    EXPECT_EQ(sample_path(m, th, 100, 5), sample_path(m, th, 100, 5));
    EXPECT_NE(sample_path(m, th, 100, 5), sample_path(m, th, 100, 6));
}

TEST(Simulation, RecordsAreOrderedAndIndependentOfWorkers) {
    const auto m = MildAr1Model::power_rule(0.15);
    SimulationPlan plan{m, vec({1.0, 1.0}), {32, 64}, 5, 123, SamplerKind::circulant, 1};
    auto first = [](const Eigen::VectorXd& x, const PathContext&) { return x[0]; };
    const auto a = run_monte_carlo<double>(plan, first);
    plan.workers = 4;
    const auto b = run_monte_carlo<double>(plan, first);
    ASSERT_EQ(a.size(), 10u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].n, i < 5 ? 32 : 64);
        EXPECT_EQ(a[i].replication, static_cast<int>(i % 5));
        EXPECT_EQ(a[i].seed, replication_seed(123, i % 5));
        EXPECT_EQ(a[i].value, b[i].value);
    }
}

TEST(Simulation, FailuresAreCapturedPerRecord) {
    SimulationPlan plan{white_noise_model(), vec({1.0}), {8}, 3, 0, SamplerKind::cholesky, 1};
    const auto recs = run_monte_carlo<int>(plan, [](const Eigen::VectorXd&, const PathContext& c) {
        if (c.replication == 1) throw DegenerateDataError("boom");
        return c.replication;
    });
    EXPECT_FALSE(recs[0].failed);
    EXPECT_TRUE(recs[1].failed);
    EXPECT_EQ(recs[1].error, "boom");
    EXPECT_EQ(recs[2].value, 2);
}

TEST(Simulation, PlanValidation) {
    SimulationPlan plan{white_noise_model(), vec({1.0}), {}, 1, 0, SamplerKind::circulant, 1};
    EXPECT_THROW(plan.validate(), ContractError);
    plan.n_list = {8};
    plan.theta0 = vec({-1.0});
    EXPECT_THROW(plan.validate(), ParameterError);
}
