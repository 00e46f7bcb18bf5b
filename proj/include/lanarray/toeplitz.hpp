#pragma once

// Toeplitz matrices T_n(f) = (int e^{i(k-j)lambda} f(lambda) dlambda)_{jk} built
// from spectral symbols, their factorizations, and the trace, norm and
// fractional-programming primitives used by the audits.

#include "lanarray/errors.hpp"
#include "lanarray/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace lanarray {

/// An even symbol evaluated on (0, pi], with the exponent of its pole at 0.
struct Symbol {
    std::function<double(double)> fn;
    double alpha_hint = 0.0;
    std::string name;

    double operator()(double lambda) const { return fn(lambda); }
};

struct AutocovarianceSequence {
    Eigen::VectorXd gamma;  // lags 0..n-1
    std::string source;
    double abs_error = std::numeric_limits<double>::quiet_NaN();  // NaN: not estimated

    int size() const { return static_cast<int>(gamma.size()); }
};

namespace detail {
inline Eigen::MatrixXd sample_symbol(const PanelGrid& grid, const std::function<double(double)>& fn) {
    Eigen::MatrixXd v(grid.size(), 1);
    for (Eigen::Index i = 0; i < grid.size(); ++i) v(i, 0) = fn(grid.nodes[i]);
    return v;
}
} // namespace detail

/// gamma_k = int_{-pi}^{pi} e^{ik lambda} f(lambda) d lambda, k < n. The error
/// estimate compares two successive panel refinements.
inline AutocovarianceSequence fourier_coefficients(const Symbol& f, int n, int level = 0) {
    if (n < 1) throw ContractError("fourier_coefficients: n must be positive");
    const PanelGrid g0 = panel_grid(n, f.alpha_hint, level);
    const PanelGrid g1 = panel_grid(n, f.alpha_hint, level + 1);
    AutocovarianceSequence out;
    out.gamma = cosine_moments(g1, detail::sample_symbol(g1, f.fn), n).col(0);
    const Eigen::VectorXd coarse = cosine_moments(g0, detail::sample_symbol(g0, f.fn), n).col(0);
    out.abs_error = (out.gamma - coarse).cwiseAbs().maxCoeff();
    out.source = f.name;
    return out;
}

// ---------------------------------------------------------------------------
// Structured products with symmetric Toeplitz matrices given by their first column.

inline Eigen::MatrixXd toeplitz_dense(const Eigen::VectorXd& gamma) {
    const Eigen::Index n = gamma.size();
    Eigen::MatrixXd T(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) T(i, j) = gamma[std::abs(i - j)];
    return T;
}

/// T v in O(n^2) without forming T.
inline Eigen::VectorXd toeplitz_multiply(const Eigen::VectorXd& gamma, const Eigen::VectorXd& v) {
    const Eigen::Index n = gamma.size();
    if (v.size() != n) throw ContractError("toeplitz_multiply: size mismatch");
    Eigen::VectorXd out = gamma[0] * v;
    for (Eigen::Index d = 1; d < n; ++d) {
        out.head(n - d).noalias() += gamma[d] * v.tail(n - d);
        out.tail(n - d).noalias() += gamma[d] * v.head(n - d);
    }
    return out;
}

/// T(g) X for each g in gammas through a circulant embedding of size 2n. The embedding has a real
/// spectrum, so two real columns ride in one complex transform and the forward pass is shared.
inline std::vector<Eigen::MatrixXd> toeplitz_multiply_columns(const std::vector<Eigen::VectorXd>& gammas,
                                                              const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows();
    const Eigen::Index N = 2 * n;
    const Eigen::Index cols = X.cols();
    const Eigen::Index pairs = (cols + 1) / 2;
    Eigen::FFT<double> fft;
    std::vector<Eigen::VectorXcd> spectra(static_cast<std::size_t>(pairs));
    Eigen::VectorXcd pad(N);
    for (Eigen::Index p = 0; p < pairs; ++p) {
        pad.setZero();
        pad.head(n).real() = X.col(2 * p);
        if (2 * p + 1 < cols) pad.head(n).imag() = X.col(2 * p + 1);
        fft.fwd(spectra[static_cast<std::size_t>(p)], pad);
    }
    std::vector<Eigen::MatrixXd> out;
    out.reserve(gammas.size());
    Eigen::VectorXd c(N), eig(N);
    Eigen::VectorXcd spec(N), back(N), ceig;
    for (const auto& g : gammas) {
        if (g.size() != n) throw ContractError("toeplitz_multiply_columns: size mismatch");
        c.setZero();
        c.head(n) = g;
        for (Eigen::Index d = 1; d < n; ++d) c[N - d] = g[d];
        fft.fwd(ceig, c);
        eig = ceig.real();
        Eigen::MatrixXd Y(n, cols);
        for (Eigen::Index p = 0; p < pairs; ++p) {
            spec = spectra[static_cast<std::size_t>(p)].array() * eig.array();
            fft.inv(back, spec);
            Y.col(2 * p) = back.head(n).real();
            if (2 * p + 1 < cols) Y.col(2 * p + 1) = back.head(n).imag();
        }
        out.push_back(std::move(Y));
    }
    return out;
}

/// r_d = sum_t u_t u_{t+d}, so that u' T(g) u = g_0 r_0 + 2 sum_{d>0} g_d r_d.
inline Eigen::VectorXd lag_products(const Eigen::VectorXd& u) {
    const Eigen::Index n = u.size();
    Eigen::VectorXd r(n);
    for (Eigen::Index d = 0; d < n; ++d) r[d] = u.head(n - d).dot(u.tail(n - d));
    return r;
}

/// sum_{ij} gamma_{|i-j|} A_{ij} given the diagonal sums S_d of a symmetric A.
inline double toeplitz_contract(const Eigen::VectorXd& gamma, const Eigen::VectorXd& diag_sums) {
    const Eigen::Index n = gamma.size();
    return gamma[0] * diag_sums[0] + 2.0 * gamma.tail(n - 1).dot(diag_sums.tail(n - 1));
}

/// S_d = sum_i A_{i+d,i} for a dense symmetric A.
inline Eigen::VectorXd diagonal_sums(const Eigen::MatrixXd& A) {
    const Eigen::Index n = A.rows();
    Eigen::VectorXd s(n);
    for (Eigen::Index d = 0; d < n; ++d) s[d] = A.diagonal(-d).sum();
    return s;
}

// ---------------------------------------------------------------------------

enum class ToeplitzBackend { dense_cholesky, levinson };

inline const char* to_string(ToeplitzBackend b) {
    return b == ToeplitzBackend::dense_cholesky ? "dense_cholesky" : "levinson";
}

/// Factorization of a symmetric positive definite Toeplitz matrix.
class ToeplitzFactor {
public:
    virtual ~ToeplitzFactor() = default;
    virtual int n() const = 0;
    virtual double logdet() const = 0;
    virtual Eigen::VectorXd solve(const Eigen::VectorXd& b) const = 0;
    virtual Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const {
        Eigen::MatrixXd X(B.rows(), B.cols());
        for (Eigen::Index j = 0; j < B.cols(); ++j) X.col(j) = solve(Eigen::VectorXd(B.col(j)));
        return X;
    }
    /// Diagonal sums S_d of T^{-1}; tr(T^{-1} T(g)) = toeplitz_contract(g, S).
    virtual Eigen::VectorXd inverse_diagonal_sums() const = 0;
    virtual Eigen::MatrixXd inverse() const = 0;
    virtual ToeplitzBackend backend() const = 0;
};

namespace detail {

/// Dense T^{-1} from the Gohberg-Semencul vectors: M(i,j) = M(i-1,j-1) + (x_i x_j - w_i w_j) / x_0.
inline Eigen::MatrixXd gs_inverse(const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index i = 0; i < n; ++i) M(i, 0) = M(0, i) = x[i];
    for (Eigen::Index j = 1; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i) M(i, j) = M(j, i) = M(i - 1, j - 1) + (x[i] * x[j] - w[i] * w[j]) / x[0];
    return M;
}

/// Durbin-Levinson first column of T^{-1}; empty on breakdown.
inline Eigen::VectorXd levinson_first_column(const Eigen::VectorXd& gamma, double* logdet = nullptr) {
    const Eigen::Index n = gamma.size();
    if (!(gamma[0] > 0.0)) return {};
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);  // predictor coefficients a_1..a_k in a[0..k-1]
    Eigen::VectorXd tmp(n);
    double v = gamma[0];
    double ld = std::log(v);
    for (Eigen::Index k = 1; k < n; ++k) {
        double acc = gamma[k];
        if (k > 1) acc -= a.head(k - 1).dot(gamma.segment(1, k - 1).reverse());
        const double kappa = acc / v;
        if (k > 1) {
            tmp.head(k - 1) = a.head(k - 1).reverse();
            a.head(k - 1) -= kappa * tmp.head(k - 1);
        }
        a[k - 1] = kappa;
        v *= (1.0 - kappa) * (1.0 + kappa);
        if (!(v > 0.0)) return {};
        ld += std::log(v);
    }
    Eigen::VectorXd x(n);
    x[0] = 1.0 / v;
    for (Eigen::Index j = 1; j < n; ++j) x[j] = -a[j - 1] / v;
    if (logdet) *logdet = ld;
    return x;
}

inline Eigen::VectorXd gs_reversed(const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 1; j < n; ++j) w[j] = x[n - j];
    return w;
}

} // namespace detail

class DenseCholeskyFactor final : public ToeplitzFactor {
public:
    explicit DenseCholeskyFactor(const Eigen::VectorXd& gamma) : n_(static_cast<int>(gamma.size())), gamma_(gamma) {
        llt_.compute(toeplitz_dense(gamma));
        if (llt_.info() != Eigen::Success) {
            Eigen::LDLT<Eigen::MatrixXd> ldlt(toeplitz_dense(gamma));
            const Eigen::VectorXd D = ldlt.vectorD();
            Eigen::Index at = 0;
            const double pivot = D.minCoeff(&at);
            throw FactorizationError("Toeplitz matrix is not positive definite (nonpositive symbol or quadrature error)",
                                     pivot, static_cast<long>(at));
        }
        const auto& L = llt_.matrixLLT();
        logdet_ = 2.0 * L.diagonal().array().log().sum();
    }
    int n() const override { return n_; }
    double logdet() const override { return logdet_; }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const override { return llt_.solve(b); }
    Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const override { return llt_.solve(B); }
    // The inverse comes from the O(n^2) Gohberg-Semencul form, one refinement step against the
    // Cholesky factor, and falls back to a full dense solve when Levinson breaks down.
    Eigen::VectorXd inverse_diagonal_sums() const override {
        build_inverse();
        return inv_sums_;
    }
    Eigen::MatrixXd inverse() const override {
        build_inverse();
        return inv_;
    }
    ToeplitzBackend backend() const override { return ToeplitzBackend::dense_cholesky; }
    const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

private:
    void build_inverse() const {
        std::call_once(inv_once_, [this] {
            Eigen::VectorXd x = detail::levinson_first_column(gamma_);
            if (x.size() == n_) {
                // Refine the first column against the Cholesky solve before expanding it.
                Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n_);
                e0[0] = 1.0;
                x += llt_.solve(e0 - toeplitz_multiply(gamma_, x));
                if (x[0] > 0.0) inv_ = detail::gs_inverse(x, detail::gs_reversed(x));
            }
            if (inv_.size() == 0) inv_ = llt_.solve(Eigen::MatrixXd::Identity(n_, n_));
            inv_sums_ = diagonal_sums(inv_);
        });
    }

    int n_;
    Eigen::VectorXd gamma_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double logdet_ = 0.0;
    mutable std::once_flag inv_once_;
    mutable Eigen::MatrixXd inv_;
    mutable Eigen::VectorXd inv_sums_;
};

/// Durbin-Levinson recursion for T x = e_0 plus the Gohberg-Semencul form
/// T^{-1} = (1/x_0) [L(x) L(x)' - L(w) L(w)'], w = (0, x_{n-1}, ..., x_1),
/// with L(v) lower triangular Toeplitz with first column v. O(n^2) throughout.
class LevinsonFactor final : public ToeplitzFactor {
public:
    explicit LevinsonFactor(const Eigen::VectorXd& gamma) : n_(static_cast<int>(gamma.size())) {
        const int n = n_;
        if (!(gamma[0] > 0.0)) throw FactorizationError("Toeplitz matrix is not positive definite", gamma[0], 0);
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);  // predictor coefficients a_1..a_k in a[0..k-1]
        Eigen::VectorXd tmp(n);
        double v = gamma[0];
        logdet_ = std::log(v);
        for (int k = 1; k < n; ++k) {
            // kappa = (gamma_k - sum_{j=1}^{k-1} a_j gamma_{k-j}) / v
            double acc = gamma[k];
            if (k > 1) acc -= a.head(k - 1).dot(gamma.segment(1, k - 1).reverse());
            const double kappa = acc / v;
            if (k > 1) {
                tmp.head(k - 1) = a.head(k - 1).reverse();
                a.head(k - 1) -= kappa * tmp.head(k - 1);
            }
            a[k - 1] = kappa;
            v *= (1.0 - kappa) * (1.0 + kappa);
            if (!(v > 0.0))
                throw FactorizationError("Toeplitz matrix is not positive definite (Levinson breakdown)", v, k);
            logdet_ += std::log(v);
        }
        x_.resize(n);
        x_[0] = 1.0 / v;
        for (int j = 1; j < n; ++j) x_[j] = -a[j - 1] / v;
        w_ = Eigen::VectorXd::Zero(n);
        for (int j = 1; j < n; ++j) w_[j] = x_[n - j];
    }

    int n() const override { return n_; }
    double logdet() const override { return logdet_; }
    ToeplitzBackend backend() const override { return ToeplitzBackend::levinson; }
    const Eigen::VectorXd& first_column() const { return x_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const override {
        if (b.size() != n_) throw ContractError("LevinsonFactor::solve: size mismatch");
        Eigen::VectorXd out = lower_mul(x_, upper_mul(x_, b));
        out -= lower_mul(w_, upper_mul(w_, b));
        return out / x_[0];
    }

    Eigen::VectorXd inverse_diagonal_sums() const override {
        const int n = n_;
        Eigen::VectorXd s(n);
        Eigen::VectorXd weight(n);
        for (int d = 0; d < n; ++d) {
            const int len = n - d;
            // sum_{t<len} (len - t) (x_{t+d} x_t - w_{t+d} w_t)
            weight.head(len) = Eigen::VectorXd::LinSpaced(len, len, 1);
            s[d] = (weight.head(len).array() *
                    (x_.segment(d, len).array() * x_.head(len).array() - w_.segment(d, len).array() * w_.head(len).array()))
                       .sum();
        }
        return s / x_[0];
    }

    Eigen::MatrixXd inverse() const override { return detail::gs_inverse(x_, w_); }

private:
    // L(v) b and L(v)' b for lower triangular Toeplitz L(v).
    static Eigen::VectorXd lower_mul(const Eigen::VectorXd& v, const Eigen::VectorXd& b) {
        const Eigen::Index n = v.size();
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
        for (Eigen::Index d = 0; d < n; ++d)
            if (v[d] != 0.0) out.tail(n - d).noalias() += v[d] * b.head(n - d);
        return out;
    }
    static Eigen::VectorXd upper_mul(const Eigen::VectorXd& v, const Eigen::VectorXd& b) {
        const Eigen::Index n = v.size();
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
        for (Eigen::Index d = 0; d < n; ++d)
            if (v[d] != 0.0) out.head(n - d).noalias() += v[d] * b.tail(n - d);
        return out;
    }

    int n_;
    double logdet_ = 0.0;
    Eigen::VectorXd x_;
    Eigen::VectorXd w_;
};

inline std::shared_ptr<const ToeplitzFactor> factorize(const Eigen::VectorXd& gamma, ToeplitzBackend backend) {
    if (gamma.size() < 1) throw ContractError("factorize: empty autocovariance");
    if (backend == ToeplitzBackend::levinson) return std::make_shared<LevinsonFactor>(gamma);
    return std::make_shared<DenseCholeskyFactor>(gamma);
}

/// Symmetric Toeplitz matrix with a lazily computed, internally synchronized factorization.
class ToeplitzMatrix {
public:
    ToeplitzMatrix() = default;
    explicit ToeplitzMatrix(AutocovarianceSequence column, ToeplitzBackend backend = ToeplitzBackend::dense_cholesky)
        : column_(std::move(column)), backend_(backend), state_(std::make_shared<State>()) {
        if (column_.size() < 1) throw ContractError("ToeplitzMatrix: empty first column");
    }

    int n() const { return column_.size(); }
    const AutocovarianceSequence& first_column() const { return column_; }
    const Eigen::VectorXd& gamma() const { return column_.gamma; }
    double operator()(int i, int j) const { return column_.gamma[std::abs(i - j)]; }
    Eigen::MatrixXd dense() const { return toeplitz_dense(column_.gamma); }
    Eigen::VectorXd multiply(const Eigen::VectorXd& v) const { return toeplitz_multiply(column_.gamma, v); }

    const ToeplitzFactor& factor() const {
        std::lock_guard<std::mutex> lock(state_->mu);
        if (!state_->factor) state_->factor = factorize(column_.gamma, backend_);
        return *state_->factor;
    }
    double logdet() const { return factor().logdet(); }
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return factor().solve(b); }

    /// Writes "# schema=1" then lag,gamma,abs_error rows.
    void write_csv(std::ostream& os) const {
        os << "# schema=1\nlag,gamma,abs_error\n";
        os.precision(17);
        for (int k = 0; k < n(); ++k) {
            os << k << ',' << column_.gamma[k] << ',';
            if (std::isnan(column_.abs_error)) os << "";
            else os << column_.abs_error;
            os << '\n';
        }
    }

private:
    struct State {
        std::mutex mu;
        std::shared_ptr<const ToeplitzFactor> factor;
    };
    AutocovarianceSequence column_;
    ToeplitzBackend backend_ = ToeplitzBackend::dense_cholesky;
    std::shared_ptr<State> state_;
};

inline ToeplitzMatrix build(const Symbol& f, int n, ToeplitzBackend backend = ToeplitzBackend::dense_cholesky) {
    return ToeplitzMatrix(fourier_coefficients(f, n), backend);
}

// ---------------------------------------------------------------------------

using SymbolPair = std::pair<Symbol, Symbol>;  // (g_l, f_l)

/// tr(prod_l T(g_l) T(f_l)^{-1}) by dense linear algebra.
inline double trace_product(const std::vector<SymbolPair>& pairs, int n) {
    if (pairs.empty()) throw ContractError("trace_product: empty product");
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
    for (const auto& [g, f] : pairs) {
        const ToeplitzMatrix Tf = build(f, n);
        const Eigen::MatrixXd Tg = build(g, n).dense();
        const auto& chol = dynamic_cast<const DenseCholeskyFactor&>(Tf.factor()).llt();
        // P <- P T(g) T(f)^{-1}; T(f)^{-1} symmetric, so right-multiply via a solve on the transpose.
        const Eigen::MatrixXd PG = P * Tg;
        P = chol.solve(PG.transpose()).transpose();
    }
    return P.trace();
}

/// (1/2pi) int_{-pi}^{pi} prod g_l / f_l.
inline QuadratureValue whittle_integral(const std::vector<SymbolPair>& pairs, double tol = 1e-10) {
    if (pairs.empty()) throw ContractError("whittle_integral: empty product");
    double alpha = 0.0;
    for (const auto& [g, f] : pairs) alpha += g.alpha_hint - f.alpha_hint;
    if (!(alpha < 1.0))
        throw DomainError("whittle_integral: integrand has a non-integrable pole (exponent " + std::to_string(alpha) + ")");
    auto q = integrate_half_circle(
        [&](double l) {
            double r = 1.0;
            for (const auto& [g, f] : pairs) r *= g(l) / f(l);
            return r;
        },
        alpha, tol);
    q.value /= std::numbers::pi;
    q.abs_error /= std::numbers::pi;
    return q;
}

/// Largest generalized eigenvalue of T(g) v = mu T(f) v, i.e. ||T(g)^{1/2} T(f)^{-1/2}||^2.
inline double half_norm_squared(const Symbol& g, const Symbol& f, int n, double tol = 1e-10) {
    const ToeplitzMatrix Tf = build(f, n);
    const auto& chol = dynamic_cast<const DenseCholeskyFactor&>(Tf.factor()).llt();
    const Eigen::MatrixXd Tg = build(g, n).dense();
    const Eigen::MatrixXd Linv_Tg = chol.matrixL().solve(Tg);
    Eigen::MatrixXd B = chol.matrixL().solve(Linv_Tg.transpose());
    B = 0.5 * (B + B.transpose()).eval();

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    double mu = 0.0;
    for (int it = 0; it < 20000; ++it) {
        const Eigen::VectorXd w = B * v;
        mu = v.dot(w);
        const double resid = (w - mu * v).norm();
        if (resid <= tol * std::max(1.0, std::fabs(mu))) return mu;
        const double nw = w.norm();
        if (!(nw > 0.0)) return 0.0;
        v = w / nw;
    }
    // Slow spectral gap: fall back to a full symmetric eigensolve.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

// ---------------------------------------------------------------------------
// sup over densities 0 <= h <= cap on (0, pi) of int g h / int f h.

/// Piecewise description of g, f on cells partitioning (0, pi): per-cell
/// integrals of g and f and the cell width.
struct CellGrid {
    Eigen::ArrayXd g_int;
    Eigen::ArrayXd f_int;
    Eigen::ArrayXd width;

    Eigen::Index size() const { return width.size(); }
};

/// Cells for power laws g = lambda^{-b}, f = lambda^{-a} with exact cell
/// integrals: `points` log-spaced edges on (lo, pi) plus the stub [0, lo].
/// Extra edges in (0, pi) are merged in, so step functions with those
/// breakpoints are cell-constant.
inline CellGrid power_law_cells(double b, double a, int points = 1 << 15, double lo = 1e-10,
                                const std::vector<double>& extra_edges = {}) {
    using std::numbers::pi;
    if (!(a < 1.0 && b < 1.0)) throw DomainError("power_law_cells: exponents must be < 1");
    auto prim = [](double p, double x) { return std::pow(x, 1.0 - p) / (1.0 - p); };
    std::vector<double> edges{0.0};
    for (int i = 0; i < points; ++i) edges.push_back(lo * std::pow(pi / lo, static_cast<double>(i) / (points - 1)));
    edges.back() = pi;
    for (double e : extra_edges)
        if (e > 0.0 && e < pi) edges.push_back(e);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    CellGrid c;
    const Eigen::Index m = static_cast<Eigen::Index>(edges.size()) - 1;
    c.g_int.resize(m);
    c.f_int.resize(m);
    c.width.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double x0 = edges[i], x1 = edges[i + 1];
        c.width[i] = x1 - x0;
        c.g_int[i] = prim(b, x1) - prim(b, x0);
        c.f_int[i] = prim(a, x1) - prim(a, x0);
    }
    return c;
}

namespace detail {

/// max over cell-constant 0 <= h <= cap, sum h w = 1 of sum h (g - t f):
/// fill cells greedily by value density (g - t f)/w.
inline double greedy_value(const CellGrid& c, double t, double cap, std::vector<Eigen::Index>& order) {
    const Eigen::ArrayXd gain = c.g_int - t * c.f_int;  // value of h = 1 on the cell
    order.resize(static_cast<std::size_t>(c.size()));
    for (Eigen::Index i = 0; i < c.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        return gain[x] / c.width[x] > gain[y] / c.width[y];
    });
    double mass = 0.0, value = 0.0;
    for (Eigen::Index i : order) {
        if (mass >= 1.0) break;
        const double full = cap * c.width[i];
        const double take = std::min(full, 1.0 - mass);  // mass placed on the cell
        value += gain[i] / c.width[i] * take;
        mass += take;
    }
    return value;
}

} // namespace detail

/// Exact (on the cell partition) supremum of int g h / int f h over densities
/// on (0, pi) bounded by cap; bisection on t with a greedy inner solve.
inline double sup_ratio_bounded_density(const CellGrid& c, double cap, int iterations = 60) {
    using std::numbers::pi;
    if (!(cap * pi >= 1.0)) throw DomainError("sup_ratio_bounded_density: cap * pi < 1 admits no density");
    if (!(c.f_int.sum() > 0.0)) throw DomainError("sup_ratio_bounded_density: f vanishes");
    // The ratio of cell averages bounds the optimum from above.
    double hi = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i)
        if (c.f_int[i] > 0.0) hi = std::max(hi, c.g_int[i] / c.f_int[i]);
    double lo = 0.0;
    std::vector<Eigen::Index> order;
    for (int it = 0; it < iterations; ++it) {
        const double t = 0.5 * (lo + hi);
        if (detail::greedy_value(c, t, cap, order) > 0.0) lo = t;
        else hi = t;
    }
    return lo;
}

/// Grid-sampled variant: g, f sampled at nodes with quadrature weights as cell widths.
inline double sup_ratio_bounded_density(const Eigen::ArrayXd& g, const Eigen::ArrayXd& f, const Eigen::ArrayXd& widths,
                                        double cap, int iterations = 60) {
    if (g.size() != f.size() || g.size() != widths.size()) throw ContractError("sup_ratio: grid size mismatch");
    if ((g < 0.0).any() || (f < 0.0).any()) throw DomainError("sup_ratio: g and f must be nonnegative");
    CellGrid c{g * widths, f * widths, widths};
    return sup_ratio_bounded_density(c, cap, iterations);
}

} // namespace lanarray
