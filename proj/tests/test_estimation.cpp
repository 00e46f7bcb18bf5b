#include "lanarray/estimation.hpp"
#include "lanarray/simulation.hpp"
#include "lanarray/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lanarray;

namespace {

ParameterVector vec(std::initializer_list<double> v) {
    ParameterVector p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

} // namespace

TEST(Estimation, StandardizeSolvesRate) {
    Eigen::MatrixXd R(2, 2);
    R << 0.5, 0.0, 0.25, 0.1;
    const ParameterVector th0 = vec({1.0, 2.0});
    const Eigen::Vector2d z(0.3, -1.2);
    EXPECT_TRUE(standardize(th0 + R * z, th0, R).isApprox(z, 1e-12));
    Eigen::MatrixXd full(2, 2);
    full << 0.5, 0.2, 0.25, 0.3;
    EXPECT_TRUE(standardize(th0 + full * z, th0, full).isApprox(z, 1e-10));
    EXPECT_THROW(standardize(th0, th0, Eigen::MatrixXd::Zero(2, 2)), ContractError);
}

TEST(Estimation, WhiteNoiseMleIsMeanSquare) {
    const auto m = white_noise_model();
    const Eigen::VectorXd x = sample_path(m, vec({1.5}), 300, 4);
    LikelihoodWorkspace ws(m, x);
    const EstimationResult r = solve_mle(ws, vec({0.7}));
    ASSERT_TRUE(r.converged) << r.status;
    EXPECT_NEAR(r.theta_hat[0], x.squaredNorm() / 300.0, 1e-8);
}

TEST(Estimation, Ar1MleZeroesScore) {
    const auto m = MildAr1Model::power_rule(0.15);
    const ParameterVector th0 = vec({1.0, 1.0});
    const int n = 512;
    LikelihoodWorkspace ws(m, sample_path(m, th0, n, 21));
    const EstimationResult r = solve_mle(ws, perturbed_init(m, th0, n, 0.5, 21), {}, th0);
    ASSERT_TRUE(r.converged) << r.status;
    const Eigen::VectorXd s = m->rate_matrix(th0, n).transpose() * score(ws, r.theta_hat);
    EXPECT_LT(s.norm(), 1e-6);
    ASSERT_TRUE(r.standardized_error.has_value());
    EXPECT_LT(r.standardized_error->cwiseAbs().maxCoeff(), 5.0);
}

TEST(Estimation, OlsRecoversDrift) {
    // phi = 0.7 path built by the recursion; OLS phi-hat maps back to c = (1 - phi) / a.
    std::mt19937 rng(3);
    std::normal_distribution<double> z;
    const int n = 20000;
    Eigen::VectorXd x(n);
    x[0] = z(rng) / std::sqrt(1.0 - 0.49);
    for (int i = 1; i < n; ++i) x[i] = 0.7 * x[i - 1] + z(rng);
    EXPECT_NEAR(ols_mild_ar1(x, 0.5), 0.6, 0.03);
    EXPECT_THROW(ols_mild_ar1(Eigen::VectorXd::Zero(5), 0.5), DegenerateDataError);
    EXPECT_THROW(ols_mild_ar1(x, 0.0), ContractError);
}

TEST(Estimation, PerturbedInitStaysInside) {
    const auto m = MildAr1Model::power_rule(0.15);
    const ParameterVector th0 = vec({1.0, 1.0});
    for (std::uint64_t s = 0; s < 50; ++s) EXPECT_TRUE(m->contains(perturbed_init(m, th0, 64, 5.0, s), 64));
}

TEST(Estimation, MonteCarloIsDeterministicAcrossWorkers) {
    const auto m = white_noise_model();
    SimulationPlan plan{m, vec({1.0}), {64, 128}, 6, 77, SamplerKind::circulant, 1};
    const auto a = mle_monte_carlo(plan, {});
    plan.workers = 3;
    const auto b = mle_monte_carlo(plan, {});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].n, b[i].n);
        EXPECT_EQ(a[i].replication, b[i].replication);
        EXPECT_EQ(a[i].value.theta_hat[0], b[i].value.theta_hat[0]);
    }
}

TEST(Estimation, JsonRecordCarriesEstimate) {
    EstimationResult r;
    r.theta_hat = vec({1.0, 2.0});
    r.converged = true;
    r.status = "converged";
    const nlohmann::json j = to_json(r);
    EXPECT_EQ(j["theta_hat"][1].get<double>(), 2.0);
    EXPECT_TRUE(j["converged"].get<bool>());
}

TEST(Stats, BasicSummaries) {
    EXPECT_DOUBLE_EQ(stats::mean({1.0, 2.0, 3.0}), 2.0);
    EXPECT_DOUBLE_EQ(stats::variance({1.0, 2.0, 3.0}), 1.0);
    EXPECT_DOUBLE_EQ(stats::median({5.0, 1.0, 3.0, 2.0}), 2.5);
    const auto fit = stats::loglog_fit({1.0, 10.0, 100.0}, {2.0, 0.2, 0.02});
    EXPECT_NEAR(fit.slope, -1.0, 1e-12);
}
