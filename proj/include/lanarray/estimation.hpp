#pragma once

// Maximum likelihood by damped Newton iterations preconditioned with the rate
// matrix, plus the OLS benchmark for the mildly integrated AR(1).

#include "lanarray/errors.hpp"
#include "lanarray/likelihood.hpp"
#include "lanarray/simulation.hpp"
#include "lanarray/spectral_models.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace lanarray {

struct MleOptions {
    double tolerance = 1e-8;  // on ||R' score||
    int max_iterations = 100;
    int max_halvings = 30;
    std::optional<Curvature> curvature;  // default: observed up to n = 1024, observed_whittle above
    double levenberg_start = 1e-4;
};

struct EstimationResult {
    ParameterVector theta_hat;
    double score_norm_exit = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
    std::string status;  // "converged", or why the iterations stopped
    std::optional<Eigen::VectorXd> standardized_error;
    Eigen::MatrixXd asymptotic_cov;  // R I(theta_hat)^{-1} R'; empty if I is singular
    std::optional<std::uint64_t> seed;
};

/// R^{-1} (theta_hat - theta0).
inline Eigen::VectorXd standardize(const ParameterVector& theta_hat, const ParameterVector& theta0,
                                   const Eigen::MatrixXd& R) {
    if (R.rows() != R.cols() || R.rows() != theta_hat.size() || theta0.size() != theta_hat.size())
        throw ContractError("standardize: dimension mismatch");
    const double scale = R.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw ContractError("standardize: rate matrix is singular");
    const Eigen::VectorXd diff = theta_hat - theta0;
    if (R.isLowerTriangular(0.0)) {
        if ((R.diagonal().cwiseAbs().array() <= 1e-300).any()) throw ContractError("standardize: rate matrix is singular");
        return R.triangularView<Eigen::Lower>().solve(diff);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
    if (!lu.isInvertible()) throw ContractError("standardize: rate matrix is singular");
    return lu.solve(diff);
}

namespace detail {

inline Eigen::MatrixXd fisher_curvature(const StageCovariance& sc) {
    return sc.n <= 1024 ? fisher_exact(sc) : fisher_whittle(sc.model, sc.theta, sc.n);
}

inline bool positive_definite(const Eigen::MatrixXd& A, Eigen::LLT<Eigen::MatrixXd>& llt) {
    if (!A.allFinite()) return false;
    llt.compute(0.5 * (A + A.transpose()));
    return llt.info() == Eigen::Success;
}

} // namespace detail

inline EstimationResult solve_mle(LikelihoodWorkspace& ws, const ParameterVector& theta_init, const MleOptions& opts = {},
                                  const std::optional<ParameterVector>& theta0 = {}) {
    const ModelPtr& model = ws.model();
    const int n = ws.n();
    model->require(theta_init, n);
    const Curvature curvature =
        opts.curvature.value_or(n <= 1024 ? Curvature::observed : Curvature::observed_whittle);
    const Eigen::MatrixXd R = model->rate_matrix(theta0.value_or(theta_init), n);
    const double eps = std::numeric_limits<double>::epsilon();

    EstimationResult res;
    ParameterVector theta = theta_init;
    res.status = "iteration limit";
    try {
        auto sc = ws.stage(theta, 2);
        LikelihoodValue cur = evaluate_likelihood(*sc, ws.data(), 1);
        for (int it = 0;; ++it) {
            const Eigen::VectorXd g = R.transpose() * cur.score;
            res.score_norm_exit = g.norm();
            res.iterations = it;
            if (res.score_norm_exit <= opts.tolerance) {
                res.converged = true;
                res.status = "converged";
                break;
            }
            if (it >= opts.max_iterations) break;

            const Eigen::MatrixXd H = evaluate_likelihood(*sc, ws.data(), 2, curvature).hessian;
            Eigen::LLT<Eigen::MatrixXd> llt;
            Eigen::MatrixXd A = R.transpose() * (-H) * R;
            if (!detail::positive_definite(A, llt)) {
                A = R.transpose() * detail::fisher_curvature(*sc) * R;
                double damping = opts.levenberg_start * std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
                while (!detail::positive_definite(A, llt) && damping < 1e12) {
                    A.diagonal().array() += damping;
                    damping *= 10.0;
                }
            }
            const Eigen::VectorXd step = R * llt.solve(g);

            bool accepted = false;
            double t = 1.0;
            for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
                const ParameterVector trial = theta + t * step;
                if (!model->contains(trial, n)) continue;
                std::shared_ptr<const StageCovariance> tsc;
                try {
                    tsc = ws.stage(trial, 2);
                } catch (const FactorizationError&) {
                    continue;
                }
                LikelihoodValue next = evaluate_likelihood(*tsc, ws.data(), 1);
                const double slack = 64.0 * eps * (1.0 + std::fabs(cur.loglik));
                const bool better = next.loglik > cur.loglik;
                const bool flat = next.loglik >= cur.loglik - slack &&
                                  (R.transpose() * next.score).norm() < res.score_norm_exit;
                if (better || flat) {
                    theta = trial;
                    sc = tsc;
                    cur = std::move(next);
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                res.status = "line search failed";
                break;
            }
        }
    } catch (const Error& e) {
        res.converged = false;
        res.status = std::string("error: ") + e.what();
    }

    res.theta_hat = theta;
    if (theta0) res.standardized_error = standardize(theta, *theta0, R);
    try {
        const Eigen::MatrixXd I = model->limiting_fisher(theta);
        Eigen::LLT<Eigen::MatrixXd> llt(I);
        if (llt.info() == Eigen::Success) {
            const Eigen::MatrixXd Iinv = llt.solve(Eigen::MatrixXd::Identity(I.rows(), I.cols()));
            res.asymptotic_cov = R * Iinv * R.transpose();
        }
    } catch (const Error&) {
    }
    return res;
}

/// theta0 + scale R z with z standard normal from its own stream; the
/// perturbation is halved until the start lies in the parameter space.
inline ParameterVector perturbed_init(const ModelPtr& model, const ParameterVector& theta0, int n, double scale,
                                      std::uint64_t seed) {
    const Eigen::MatrixXd R = model->rate_matrix(theta0, n);
    Philox4x32 rng(seed ^ 0x9E3779B97F4A7C15ULL);
    const Eigen::VectorXd z = standard_normals(rng, theta0.size());
    ParameterVector theta = theta0 + scale * (R * z);
    for (int h = 0; h < 60 && !model->contains(theta, n); ++h) {
        scale *= 0.5;
        theta = theta0 + scale * (R * z);
    }
    if (!model->contains(theta, n)) theta = theta0;
    return theta;
}

struct MleStudy {
    MleOptions options;
    double init_scale = 0.5;  // 0 starts at the truth
};

/// One MLE per simulated path of the plan, started at perturbed_init.
inline std::vector<McRecord<EstimationResult>> mle_monte_carlo(const SimulationPlan& plan, const MleStudy& study) {
    return run_monte_carlo<EstimationResult>(plan, [&](const Eigen::VectorXd& x, const PathContext& ctx) {
        LikelihoodWorkspace ws(plan.model, x);
        const ParameterVector init = study.init_scale > 0.0
                                         ? perturbed_init(plan.model, plan.theta0, ctx.n, study.init_scale, ctx.seed)
                                         : plan.theta0;
        EstimationResult r = solve_mle(ws, init, study.options, plan.theta0);
        r.seed = ctx.seed;
        return r;
    });
}

/// c_hat = (1 - phi_hat) / a_n with the least squares autoregression coefficient.
inline double ols_mild_ar1(const Eigen::VectorXd& x, double a_n) {
    if (x.size() < 2) throw ContractError("ols_mild_ar1: need at least two observations");
    if (!(a_n > 0.0)) throw ContractError("ols_mild_ar1: a_n must be positive");
    const Eigen::Index n = x.size();
    const double den = x.head(n - 1).squaredNorm();
    if (!(den > 0.0)) throw DegenerateDataError("ols_mild_ar1: lagged sum of squares is zero");
    const double phi = x.head(n - 1).dot(x.tail(n - 1)) / den;
    return (1.0 - phi) / a_n;
}

inline nlohmann::json to_json_vector(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline nlohmann::json to_json_matrix(const Eigen::MatrixXd& m) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json_vector(m.row(i).transpose()));
    return a;
}

inline nlohmann::json to_json(const EstimationResult& r) {
    nlohmann::json j;
    j["theta_hat"] = to_json_vector(r.theta_hat);
    j["score_norm_exit"] = r.score_norm_exit;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["status"] = r.status;
    j["standardized_error"] = r.standardized_error ? to_json_vector(*r.standardized_error) : nlohmann::json();
    j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json();
    return j;
}

} // namespace lanarray
