#pragma once

// Exact Gaussian log-likelihood of X_n ~ N(0, T_n(f_n^theta)) with its score,
// Hessian and Fisher matrices, plus the quadratic forms Z_n and phi_n.

#include "lanarray/errors.hpp"
#include "lanarray/quadrature.hpp"
#include "lanarray/spectral_models.hpp"
#include "lanarray/toeplitz.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <deque>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lanarray {

/// Autocovariances of f and its parameter derivatives on one shared panel grid,
/// with the factorization of T_n(f). Column layout follows symbol_count().
struct StageCovariance {
    ModelPtr model;
    ParameterVector theta;
    int n = 0;
    int order = 0;
    Eigen::MatrixXd gammas;  // n x symbol_count(M, order)
    std::shared_ptr<const ToeplitzFactor> factor;

    int dimension() const { return model->dimension(); }
    Eigen::VectorXd gamma() const { return gammas.col(0); }
    Eigen::VectorXd gradient_gamma(int j) const { return gammas.col(1 + j); }
    Eigen::VectorXd hessian_gamma(int j, int k) const { return gammas.col(hessian_slot(dimension(), j, k)); }
};

inline ToeplitzBackend default_backend(int n) {
    return n <= 1024 ? ToeplitzBackend::dense_cholesky : ToeplitzBackend::levinson;
}

inline std::shared_ptr<const StageCovariance> make_stage_covariance(const ModelPtr& model, const ParameterVector& theta,
                                                                    int n, int order,
                                                                    std::optional<ToeplitzBackend> backend = {}) {
    model->require(theta, n);
    const PanelGrid grid = panel_grid(n, model->alpha_hint(theta, n));
    const Eigen::MatrixXd values = model->evaluate_on(theta, n, grid.nodes, order);
    auto sc = std::make_shared<StageCovariance>();
    sc->model = model;
    sc->theta = theta;
    sc->n = n;
    sc->order = order;
    sc->gammas = cosine_moments(grid, values, n);
    sc->factor = factorize(sc->gammas.col(0), backend.value_or(default_backend(n)));
    return sc;
}

enum class Curvature {
    observed,          // exact -Hessian
    observed_whittle,  // -Hessian with tr(T^-1 T_j T^-1 T_k) replaced by its Whittle limit
    fisher_exact,
    fisher_whittle,
};

inline const char* to_string(Curvature c) {
    switch (c) {
    case Curvature::observed: return "observed";
    case Curvature::observed_whittle: return "observed_whittle";
    case Curvature::fisher_exact: return "fisher_exact";
    case Curvature::fisher_whittle: return "fisher_whittle";
    }
    return "?";
}

struct LikelihoodValue {
    double loglik = 0.0;
    Eigen::VectorXd score;    // empty unless requested
    Eigen::MatrixXd hessian;  // empty unless requested
};

// ---------------------------------------------------------------------------
// Stage-level evaluation for one data vector.

inline double log_likelihood(const StageCovariance& sc, const Eigen::VectorXd& x) {
    if (x.size() != sc.n) throw ContractError("log_likelihood: data length differs from n");
    const Eigen::VectorXd u = sc.factor->solve(x);
    return -0.5 * sc.n * std::log(2.0 * std::numbers::pi) - 0.5 * sc.factor->logdet() - 0.5 * x.dot(u);
}

inline Eigen::VectorXd score(const StageCovariance& sc, const Eigen::VectorXd& x) {
    if (sc.order < 1) throw ContractError("score needs first-order symbols");
    const Eigen::VectorXd u = sc.factor->solve(x);
    const Eigen::VectorXd r = lag_products(u);
    const Eigen::VectorXd S = sc.factor->inverse_diagonal_sums();
    const int M = sc.dimension();
    Eigen::VectorXd s(M);
    for (int j = 0; j < M; ++j) {
        const Eigen::VectorXd gj = sc.gradient_gamma(j);
        s[j] = -0.5 * toeplitz_contract(gj, S) + 0.5 * toeplitz_contract(gj, r);
    }
    return s;
}

/// (1/2) tr(T^-1 T_j T^-1 T_k) from a dense T^-1. With B_j = T_j T^-1 (FFT products, T_j is Toeplitz)
/// the trace is sum(B_j o B_k').
inline Eigen::MatrixXd fisher_exact(const StageCovariance& sc) {
    if (sc.order < 1) throw ContractError("fisher_exact needs first-order symbols");
    const int M = sc.dimension();
    const Eigen::MatrixXd Tinv = sc.factor->inverse();
    std::vector<Eigen::VectorXd> g(M);
    for (int j = 0; j < M; ++j) g[j] = sc.gradient_gamma(j);
    const std::vector<Eigen::MatrixXd> B = toeplitz_multiply_columns(g, Tinv);
    Eigen::MatrixXd I(M, M);
    for (int j = 0; j < M; ++j)
        for (int k = j; k < M; ++k) I(j, k) = I(k, j) = 0.5 * (B[j].array() * B[k].transpose().array()).sum();
    return I;
}

/// (n / 4 pi) int_{-pi}^{pi} d_j f d_k f / f^2.
inline Eigen::MatrixXd fisher_whittle(const ModelPtr& model, const ParameterVector& theta, int n, double tol = 1e-10) {
    model->require(theta, n);
    const int M = model->dimension();
    const ModelStage st = model->stage(n);
    const int S = symbol_count(M, 1);
    std::vector<double> buf(S);
    const auto q = integrate_half_circle(
        [&](double l, double* out) {
            model->evaluate(theta, st, l, 1, buf.data());
            int c = 0;
            for (int j = 0; j < M; ++j)
                for (int k = j; k < M; ++k) out[c++] = buf[1 + j] * buf[1 + k] / (buf[0] * buf[0]);
        },
        M * (M + 1) / 2, model->fisher_alpha_hint(theta), tol);
    Eigen::MatrixXd I(M, M);
    int c = 0;
    for (int j = 0; j < M; ++j)
        for (int k = j; k < M; ++k, ++c) I(j, k) = I(k, j) = n * q[c].value / (2.0 * std::numbers::pi);
    return I;
}

/// Log-likelihood, score and the requested Hessian variant at one stage.
inline LikelihoodValue evaluate_likelihood(const StageCovariance& sc, const Eigen::VectorXd& x, int order,
                                           Curvature curvature = Curvature::observed) {
    if (x.size() != sc.n) throw ContractError("likelihood: data length differs from n");
    if (sc.order < order) throw ContractError("likelihood: stage covariance lacks derivative symbols");
    LikelihoodValue out;
    const Eigen::VectorXd u = sc.factor->solve(x);
    out.loglik = -0.5 * sc.n * std::log(2.0 * std::numbers::pi) - 0.5 * sc.factor->logdet() - 0.5 * x.dot(u);
    if (order < 1) return out;

    const int M = sc.dimension();
    const Eigen::VectorXd r = lag_products(u);
    const Eigen::VectorXd S = sc.factor->inverse_diagonal_sums();
    out.score.resize(M);
    for (int j = 0; j < M; ++j) {
        const Eigen::VectorXd gj = sc.gradient_gamma(j);
        out.score[j] = -0.5 * toeplitz_contract(gj, S) + 0.5 * toeplitz_contract(gj, r);
    }
    if (order < 2) return out;

    if (curvature == Curvature::fisher_exact) {
        out.hessian = -fisher_exact(sc);
        return out;
    }
    if (curvature == Curvature::fisher_whittle) {
        out.hessian = -fisher_whittle(sc.model, sc.theta, sc.n);
        return out;
    }
    std::vector<Eigen::VectorXd> Tu(M), TinvTu(M);
    for (int j = 0; j < M; ++j) {
        Tu[j] = toeplitz_multiply(sc.gradient_gamma(j), u);
        TinvTu[j] = sc.factor->solve(Tu[j]);
    }
    const Eigen::MatrixXd trace_pair =
        curvature == Curvature::observed ? Eigen::MatrixXd(fisher_exact(sc))
                                         : Eigen::MatrixXd(fisher_whittle(sc.model, sc.theta, sc.n));
    out.hessian.resize(M, M);
    for (int j = 0; j < M; ++j)
        for (int k = j; k < M; ++k) {
            const Eigen::VectorXd gjk = sc.hessian_gamma(j, k);
            const double h = -0.5 * toeplitz_contract(gjk, S) + trace_pair(j, k) + 0.5 * toeplitz_contract(gjk, r) -
                             Tu[j].dot(TinvTu[k]);
            out.hessian(j, k) = out.hessian(k, j) = h;
        }
    return out;
}

// ---------------------------------------------------------------------------

/// Data plus a cache of stage covariances keyed by the exact bit pattern of theta.
class LikelihoodWorkspace {
public:
    LikelihoodWorkspace(ModelPtr model, Eigen::VectorXd data, std::optional<ToeplitzBackend> backend = {},
                        bool cache = true)
        : model_(std::move(model)), data_(std::move(data)), backend_(backend), cache_enabled_(cache) {
        if (data_.size() < 1) throw ContractError("workspace: empty data");
    }

    const ModelPtr& model() const { return model_; }
    const Eigen::VectorXd& data() const { return data_; }
    int n() const { return static_cast<int>(data_.size()); }
    ToeplitzBackend backend() const { return backend_.value_or(default_backend(n())); }

    std::shared_ptr<const StageCovariance> stage(const ParameterVector& theta, int order) {
        if (cache_enabled_)
            for (const auto& e : cache_)
                if (e->order >= order && same_bits(e->theta, theta)) return e;
        auto sc = make_stage_covariance(model_, theta, n(), order, backend());
        if (cache_enabled_) {
            cache_.push_front(sc);
            if (cache_.size() > kCacheEntries) cache_.pop_back();
        }
        return sc;
    }

private:
    static constexpr std::size_t kCacheEntries = 4;
    static bool same_bits(const ParameterVector& a, const ParameterVector& b) {
        return a.size() == b.size() &&
               std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
    }

    ModelPtr model_;
    Eigen::VectorXd data_;
    std::optional<ToeplitzBackend> backend_;
    bool cache_enabled_;
    std::deque<std::shared_ptr<const StageCovariance>> cache_;
};

inline double log_likelihood(LikelihoodWorkspace& ws, const ParameterVector& theta) {
    return log_likelihood(*ws.stage(theta, 0), ws.data());
}
inline Eigen::VectorXd score(LikelihoodWorkspace& ws, const ParameterVector& theta) {
    return score(*ws.stage(theta, 1), ws.data());
}
inline Eigen::MatrixXd hessian(LikelihoodWorkspace& ws, const ParameterVector& theta,
                               Curvature curvature = Curvature::observed) {
    return evaluate_likelihood(*ws.stage(theta, 2), ws.data(), 2, curvature).hessian;
}
inline Eigen::MatrixXd fisher_exact(LikelihoodWorkspace& ws, const ParameterVector& theta) {
    return fisher_exact(*ws.stage(theta, 1));
}
inline Eigen::MatrixXd fisher_exact(const ModelPtr& model, const ParameterVector& theta, int n) {
    return fisher_exact(*make_stage_covariance(model, theta, n, 1, ToeplitzBackend::dense_cholesky));
}

/// l_n(theta0 + R a) - l_n(theta0).
inline double llr(LikelihoodWorkspace& ws, const ParameterVector& theta0, const Eigen::VectorXd& a,
                  const Eigen::MatrixXd& R) {
    const ParameterVector theta = theta0 + R * a;
    if (auto why = ws.model()->violation(theta, ws.n())) {
        std::ostringstream os;
        os << "llr: theta0 + R a = (" << theta.transpose() << ") leaves the parameter space: " << *why;
        throw DomainError(os.str());
    }
    if (a.isZero(0.0)) return 0.0;
    return log_likelihood(ws, theta) - log_likelihood(ws, theta0);
}

// ---------------------------------------------------------------------------
// Quadratic forms of the CLT for products of Toeplitz matrices.

namespace detail {
inline void check_palindrome(const std::vector<Eigen::VectorXd>& g) {
    const std::size_t p = g.size();
    for (std::size_t l = 0; l < p / 2; ++l) {
        const double scale = std::max(g[l].cwiseAbs().maxCoeff(), g[p - 1 - l].cwiseAbs().maxCoeff());
        if ((g[l] - g[p - 1 - l]).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
            throw ContractError("quadratic_form_Z: symbols must satisfy g_l = g_{p-l+1}");
    }
}
} // namespace detail

/// Z = x' T^-1 prod_l [T(g_l) T^-1] x - tr(prod_l [T(g_l) T^-1]) from the
/// Toeplitz columns of the g_l.
inline double quadratic_form_Z(const StageCovariance& sc, const Eigen::VectorXd& x,
                               const std::vector<Eigen::VectorXd>& g_columns) {
    if (g_columns.empty()) throw ContractError("quadratic_form_Z: need at least one symbol");
    detail::check_palindrome(g_columns);
    const Eigen::VectorXd u = sc.factor->solve(x);
    if (g_columns.size() == 1) {
        return toeplitz_contract(g_columns[0], lag_products(u)) -
               toeplitz_contract(g_columns[0], sc.factor->inverse_diagonal_sums());
    }
    // x' T^-1 T(g_1) T^-1 ... T(g_p) T^-1 x, then the trace densely.
    Eigen::VectorXd v = u;
    for (std::size_t l = 0; l + 1 < g_columns.size(); ++l) v = sc.factor->solve(toeplitz_multiply(g_columns[l], v));
    const double quad = v.dot(toeplitz_multiply(g_columns.back(), u));
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(sc.n, sc.n);
    for (const auto& g : g_columns) P = sc.factor->solve(Eigen::MatrixXd(toeplitz_dense(g) * P));
    return quad - P.trace();
}

inline double quadratic_form_Z(LikelihoodWorkspace& ws, const ParameterVector& theta, const std::vector<Symbol>& g) {
    std::vector<Eigen::VectorXd> cols;
    for (const auto& s : g) cols.push_back(fourier_coefficients(s, ws.n()).gamma);
    return quadratic_form_Z(*ws.stage(theta, 0), ws.data(), cols);
}

/// phi_n = [ (n/pi) int_{-pi}^{pi} prod_l (g_l / f)^2 ]^{1/2}.
inline double phi_n(const ModelPtr& model, const ParameterVector& theta0, int n, const std::vector<Symbol>& g,
                    double tol = 1e-10) {
    model->require(theta0, n);
    const ModelStage st = model->stage(n);
    double alpha = 0.0;
    for (const auto& s : g) alpha += 2.0 * (s.alpha_hint - model->alpha_hint(theta0, n));
    if (!(alpha < 1.0)) throw DomainError("phi_n: non-integrable integrand");
    const auto q = integrate_half_circle(
        [&](double l) {
            double f = 0.0;
            model->evaluate(theta0, st, l, 0, &f);
            double r = 1.0;
            for (const auto& s : g) {
                const double ratio = s(l) / f;
                r *= ratio * ratio;
            }
            return r;
        },
        alpha, tol);
    return std::sqrt(2.0 * n * q.value / std::numbers::pi);
}

/// g = (1/2) a' R' grad f, for which Z_n = a' R' score.
inline Symbol score_direction_symbol(const ModelPtr& model, const ParameterVector& theta0, int n,
                                     const Eigen::VectorXd& a, const Eigen::MatrixXd& R) {
    const Eigen::VectorXd w = 0.5 * (R * a);
    const ModelStage st = model->stage(n);
    const int M = model->dimension();
    return Symbol{[model, theta0, st, w, M](double l) {
                      std::vector<double> buf(symbol_count(M, 1));
                      model->evaluate(theta0, st, l, 1, buf.data());
                      double s = 0.0;
                      for (int j = 0; j < M; ++j) s += w[j] * buf[1 + j];
                      return s;
                  },
                  model->alpha_hint(theta0, n), "score direction"};
}

} // namespace lanarray
