#pragma once

// Parametric spectral-density families (theta, n) -> f_n^theta on (-pi, pi)
// together with their parameter derivatives, rate matrices and limiting Fisher
// information. All models are immutable and safe to share across threads.

#include "lanarray/errors.hpp"
#include "lanarray/quadrature.hpp"
#include "lanarray/special.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lanarray {

using ParameterVector = Eigen::VectorXd;

/// Sample-size dependent design quantities. Each model fills only what it uses.
struct ModelStage {
    int n = 0;
    std::optional<double> mesh;         // Delta_n
    std::optional<double> span;         // T_n
    std::optional<double> drift_scale;  // a_n
};

/// Symbols are packed as [f, grad f (M entries), upper triangle of D^2 f row-wise].
inline int symbol_count(int M, int order) {
    if (order <= 0) return 1;
    if (order == 1) return 1 + M;
    return 1 + M + M * (M + 1) / 2;
}
inline int hessian_slot(int M, int j, int k) {
    if (j > k) std::swap(j, k);
    return 1 + M + j * M - j * (j - 1) / 2 + (k - j);
}

class SpectralModel {
public:
    virtual ~SpectralModel() = default;

    virtual std::string id() const = 0;
    virtual int dimension() const = 0;
    virtual std::vector<std::string> parameter_names() const = 0;
    virtual ModelStage stage(int n) const = 0;

    /// Reason theta lies outside the open parameter space, if it does. Stage
    /// dependent constraints (e.g. stationarity at sample size n) are included
    /// when n is given.
    virtual std::optional<std::string> violation(const ParameterVector& theta,
                                                 std::optional<int> n = std::nullopt) const = 0;

    bool contains(const ParameterVector& theta, std::optional<int> n = std::nullopt) const {
        return !violation(theta, n).has_value();
    }
    void require(const ParameterVector& theta, std::optional<int> n = std::nullopt) const {
        if (auto why = violation(theta, n)) throw ParameterError(id() + ": " + *why);
    }

    /// Writes symbol_count(M, order) packed values at frequency lambda in (0, pi].
    virtual void evaluate(const ParameterVector& theta, const ModelStage& st, double lambda, int order,
                          double* out) const = 0;

    /// Exponent alpha of the |lambda|^{-alpha} behaviour of f at the origin.
    virtual double alpha_hint(const ParameterVector& theta, int n) const = 0;
    /// Exponent for the Whittle Fisher integrand (grad f / f)^2 at the origin.
    virtual double fisher_alpha_hint(const ParameterVector&) const { return 0.0; }

    virtual Eigen::MatrixXd rate_matrix(const ParameterVector& theta0, int n) const = 0;
    virtual Eigen::MatrixXd limiting_fisher(const ParameterVector& theta) const = 0;

    // Convenience wrappers over evaluate(); lambda may be any nonzero frequency.
    double density(const ParameterVector& theta, int n, double lambda) const {
        double v = 0.0;
        evaluate(theta, stage(n), checked_frequency(lambda), 0, &v);
        return v;
    }
    Eigen::VectorXd gradient(const ParameterVector& theta, int n, double lambda) const {
        const int M = dimension();
        Eigen::VectorXd buf(symbol_count(M, 1));
        evaluate(theta, stage(n), checked_frequency(lambda), 1, buf.data());
        return buf.segment(1, M);
    }
    Eigen::MatrixXd hessian(const ParameterVector& theta, int n, double lambda) const {
        const int M = dimension();
        Eigen::VectorXd buf(symbol_count(M, 2));
        evaluate(theta, stage(n), checked_frequency(lambda), 2, buf.data());
        Eigen::MatrixXd h(M, M);
        for (int j = 0; j < M; ++j)
            for (int k = 0; k < M; ++k) h(j, k) = buf[hessian_slot(M, j, k)];
        return h;
    }

    /// nodes x symbol_count matrix of packed symbols, row per node.
    Eigen::MatrixXd evaluate_on(const ParameterVector& theta, int n, const Eigen::ArrayXd& lambdas, int order) const {
        const ModelStage st = stage(n);
        const int S = symbol_count(dimension(), order);
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(lambdas.size(), S);
        for (Eigen::Index i = 0; i < lambdas.size(); ++i) evaluate(theta, st, lambdas[i], order, out.row(i).data());
        return out;
    }

protected:
    static double checked_frequency(double lambda) {
        const double x = fold_frequency(lambda);
        if (!(x > 0.0)) throw DomainError("spectral densities are evaluated away from frequency 0");
        return x;
    }
    void check_size(const ParameterVector& theta) const {
        if (theta.size() != dimension())
            throw ContractError(id() + ": parameter vector has length " + std::to_string(theta.size()) +
                                ", expected " + std::to_string(dimension()));
    }
};

using ModelPtr = std::shared_ptr<const SpectralModel>;

namespace detail {
inline constexpr double kBoundaryMargin = 1e-10;
inline bool open_positive(double x) { return std::isfinite(x) && x > kBoundaryMargin; }
inline bool open_unit(double x) { return x > kBoundaryMargin && x < 1.0 - kBoundaryMargin; }
} // namespace detail

/// Unit-variance fGN spectral density f_H(lambda).
inline double fbm_increment_density(double H, double lambda) { return fgn_density_jet(H, lambda).v; }

/// d^order/dH^order of f_H(lambda), order 1 or 2, by jet differentiation.
inline double fbm_increment_density_dH(double H, double lambda, int order) {
    const Jet2 j = fgn_density_jet(H, lambda);
    if (order == 1) return j.d;
    if (order == 2) return j.dd;
    throw DomainError("derivative order must be 1 or 2");
}

// ---------------------------------------------------------------------------

class WhiteNoiseModel final : public SpectralModel {
public:
    std::string id() const override { return "white_noise"; }
    int dimension() const override { return 1; }
    std::vector<std::string> parameter_names() const override { return {"sigma2"}; }
    ModelStage stage(int n) const override {
        if (n < 1) throw ContractError("sample size must be positive");
        return {n, {}, {}, {}};
    }
    std::optional<std::string> violation(const ParameterVector& theta, std::optional<int>) const override {
        check_size(theta);
        if (!detail::open_positive(theta[0])) return "variance must be positive";
        return std::nullopt;
    }
    void evaluate(const ParameterVector& theta, const ModelStage&, double, int order, double* out) const override {
        using std::numbers::pi;
        out[0] = theta[0] / (2.0 * pi);
        if (order >= 1) out[1] = 1.0 / (2.0 * pi);
        if (order >= 2) out[2] = 0.0;
    }
    double alpha_hint(const ParameterVector&, int) const override { return 0.0; }
    Eigen::MatrixXd rate_matrix(const ParameterVector&, int n) const override {
        return Eigen::MatrixXd::Constant(1, 1, 1.0 / std::sqrt(static_cast<double>(n)));
    }
    Eigen::MatrixXd limiting_fisher(const ParameterVector& theta) const override {
        return Eigen::MatrixXd::Constant(1, 1, 0.5 / (theta[0] * theta[0]));
    }
};

// ---------------------------------------------------------------------------

/// AR(1) with coefficient phi_n = 1 - c a_n; theta = (c, sigma^2).
class MildAr1Model final : public SpectralModel {
public:
    using Rule = std::function<double(int)>;

    /// a_n = n^{-alpha}.
    static std::shared_ptr<MildAr1Model> power_rule(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("a_n = n^-alpha needs alpha in (0,1)");
        std::ostringstream d;
        d << "n^-" << alpha;
        return std::make_shared<MildAr1Model>([alpha](int n) { return std::pow(static_cast<double>(n), -alpha); },
                                              d.str(), alpha);
    }
    /// a_n = a for every n: an ordinary stationary AR(1) with phi = 1 - c a.
    static std::shared_ptr<MildAr1Model> constant_rule(double a) {
        if (!(a > 0.0 && a < 1.0)) throw ContractError("constant drift scale must lie in (0,1)");
        std::ostringstream d;
        d << "const " << a;
        return std::make_shared<MildAr1Model>([a](int) { return a; }, d.str(), 0.0);
    }

    MildAr1Model(Rule a_rule, std::string description, double alpha)
        : a_rule_(std::move(a_rule)), description_(std::move(description)), alpha_(alpha) {}

    std::string id() const override { return "ar1_mild"; }
    int dimension() const override { return 2; }
    std::vector<std::string> parameter_names() const override { return {"c", "sigma2"}; }
    const std::string& rule_description() const { return description_; }
    /// Exponent of a power rule, 0 for a constant rule.
    double rule_exponent() const { return alpha_; }

    double drift_scale(int n) const { return a_rule_(n); }

    ModelStage stage(int n) const override {
        if (n < 1) throw ContractError("sample size must be positive");
        const double a = a_rule_(n);
        if (!(a > 0.0 && a < 1.0)) throw ContractError("drift scale a_n must lie in (0,1)");
        if (alpha_ > 0.0 && !(n * a > 1.0)) throw ContractError("mildly integrated stage needs n a_n > 1");
        return {n, {}, {}, a};
    }
    std::optional<std::string> violation(const ParameterVector& theta, std::optional<int> n) const override {
        check_size(theta);
        if (!detail::open_positive(theta[0])) return "drift c must be positive";
        if (!detail::open_positive(theta[1])) return "innovation variance must be positive";
        if (n && !(theta[0] * a_rule_(*n) < 1.0 - detail::kBoundaryMargin))
            return "c a_n >= 1 makes the autoregression nonstationary";
        return std::nullopt;
    }
    void evaluate(const ParameterVector& theta, const ModelStage& st, double lambda, int order,
                  double* out) const override {
        using std::numbers::pi;
        const double c = theta[0];
        const double s2 = theta[1];
        const double a = *st.drift_scale;
        const double one_minus_phi = c * a;
        const double phi = 1.0 - one_minus_phi;
        const double h = std::sin(0.5 * lambda);
        const double two_h2 = 2.0 * h * h;  // 1 - cos(lambda)
        const double D = one_minus_phi * one_minus_phi + 2.0 * phi * two_h2;
        const double base = 1.0 / (2.0 * pi * D);
        out[0] = s2 * base;
        if (order < 1) return;
        const double pmc = two_h2 - one_minus_phi;  // phi - cos(lambda)
        out[1] = s2 * base * 2.0 * a * pmc / D;
        out[2] = base;
        if (order < 2) return;
        out[3] = s2 * base * (-2.0 * a * a / D + 8.0 * a * a * pmc * pmc / (D * D));
        out[4] = base * 2.0 * a * pmc / D;
        out[5] = 0.0;
    }
    double alpha_hint(const ParameterVector&, int) const override { return 0.0; }
    Eigen::MatrixXd rate_matrix(const ParameterVector&, int n) const override {
        const double a = a_rule_(n);
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 2);
        R(0, 0) = 1.0 / std::sqrt(n * a);
        R(1, 1) = 1.0 / std::sqrt(static_cast<double>(n));
        return R;
    }
    Eigen::MatrixXd limiting_fisher(const ParameterVector& theta) const override {
        Eigen::MatrixXd I = Eigen::MatrixXd::Zero(2, 2);
        I(0, 0) = 0.5 / theta[0];
        I(1, 1) = 0.5 / (theta[1] * theta[1]);
        return I;
    }

private:
    Rule a_rule_;
    std::string description_;
    double alpha_;
};

// ---------------------------------------------------------------------------

/// Increments of sigma1 B^{H1} + sigma2 B^{H2} on a grid of mesh T/n;
/// theta = (H1, sigma1^2, H2, sigma2^2).
class MixedFbmModel final : public SpectralModel {
public:
    explicit MixedFbmModel(double horizon = 1.0) : horizon_(horizon) {
        if (!(horizon > 0.0)) throw ContractError("time horizon must be positive");
    }

    std::string id() const override { return "mixed_fbm"; }
    int dimension() const override { return 4; }
    std::vector<std::string> parameter_names() const override { return {"H1", "sigma1_2", "H2", "sigma2_2"}; }
    double horizon() const { return horizon_; }

    ModelStage stage(int n) const override {
        if (n < 1) throw ContractError("sample size must be positive");
        return {n, horizon_ / n, horizon_, {}};
    }
    std::optional<std::string> violation(const ParameterVector& theta, std::optional<int>) const override {
        check_size(theta);
        const double H1 = theta[0], H2 = theta[2];
        if (!detail::open_unit(H1) || !detail::open_unit(H2)) return "Hurst exponents must lie in (0,1)";
        if (!(H2 - H1 > detail::kBoundaryMargin)) return "requires H1 < H2";
        if (!(H2 - H1 < 0.25 - detail::kBoundaryMargin)) return "requires H2 - H1 < 1/4";
        if (!detail::open_positive(theta[1]) || !detail::open_positive(theta[3])) return "variances must be positive";
        return std::nullopt;
    }
    void evaluate(const ParameterVector& theta, const ModelStage& st, double lambda, int order,
                  double* out) const override {
        const double delta = *st.mesh;
        const double L = -std::log(delta);  // log Delta^{-1}
        const Jet2 F1 = fgn_density_jet(theta[0], lambda);
        const Jet2 F2 = fgn_density_jet(theta[2], lambda);
        const double P1 = std::pow(delta, 2.0 * theta[0]);
        const double P2 = std::pow(delta, 2.0 * theta[2]);
        out[0] = theta[1] * P1 * F1.v + theta[3] * P2 * F2.v;
        if (order < 1) return;
        out[1] = theta[1] * P1 * (F1.d - 2.0 * L * F1.v);
        out[2] = P1 * F1.v;
        out[3] = theta[3] * P2 * (F2.d - 2.0 * L * F2.v);
        out[4] = P2 * F2.v;
        if (order < 2) return;
        for (int s = 5; s < symbol_count(4, 2); ++s) out[s] = 0.0;
        out[hessian_slot(4, 0, 0)] = theta[1] * P1 * (F1.dd - 4.0 * L * F1.d + 4.0 * L * L * F1.v);
        out[hessian_slot(4, 0, 1)] = P1 * (F1.d - 2.0 * L * F1.v);
        out[hessian_slot(4, 2, 2)] = theta[3] * P2 * (F2.dd - 4.0 * L * F2.d + 4.0 * L * L * F2.v);
        out[hessian_slot(4, 2, 3)] = P2 * (F2.d - 2.0 * L * F2.v);
    }
    // The H2 component carries the stronger pole at frequency 0.
    double alpha_hint(const ParameterVector& theta, int) const override { return 2.0 * theta[2] - 1.0; }
    double fisher_alpha_hint(const ParameterVector& theta) const override { return 4.0 * (theta[2] - theta[0]); }

    Eigen::MatrixXd rate_matrix(const ParameterVector& theta0, int n) const override {
        const double delta = horizon_ / n;
        const double L = -std::log(delta);
        const double r = std::sqrt(delta);
        const double scale2 = std::pow(delta, -2.0 * (theta0[2] - theta0[0]));
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(4, 4);
        R(0, 0) = r;
        R(1, 0) = 2.0 * theta0[1] * r * L;
        R(1, 1) = r;
        R(2, 2) = r * scale2;
        R(3, 2) = 2.0 * theta0[3] * r * L * scale2;
        R(3, 3) = r * scale2;
        return R;
    }

    Eigen::MatrixXd limiting_fisher(const ParameterVector& theta) const override {
        require(theta);
        using std::numbers::pi;
        Eigen::MatrixXd I(4, 4);
        const double s1 = theta[1], s2 = theta[3];
        const auto q = integrate_half_circle(
            [&](double lambda, double* out) {
                const Jet2 F1 = fgn_density_jet(theta[0], lambda);
                const Jet2 F2 = fgn_density_jet(theta[2], lambda);
                const double w[4] = {s1 * F1.d / F1.v, 1.0, s2 * F2.d / F1.v, F2.v / F1.v};
                int c = 0;
                for (int j = 0; j < 4; ++j)
                    for (int k = j; k < 4; ++k) out[c++] = w[j] * w[k];
            },
            10, fisher_alpha_hint(theta), 1e-11);
        int c = 0;
        for (int j = 0; j < 4; ++j)
            for (int k = j; k < 4; ++k, ++c)
                // (T / (4 pi sigma1^4)) * int_{-pi}^{pi} = (T / (2 pi sigma1^4)) * int_0^pi
                I(j, k) = I(k, j) = horizon_ * q[c].value / (2.0 * pi * s1 * s1);
        return I;
    }

private:
    double horizon_;
};

// ---------------------------------------------------------------------------

/// Stationary fractional OU process sampled at mesh Delta_n with span
/// T_n = C Delta_n^{-beta}, so n = T_n / Delta_n; theta = (kappa, H, sigma^2).
class FouModel final : public SpectralModel {
public:
    explicit FouModel(double span_constant = 1.0, double span_exponent = 0.5)
        : C_(span_constant), beta_(span_exponent) {
        if (!(C_ > 0.0 && beta_ > 0.0)) throw ContractError("span rule needs C > 0 and beta > 0");
    }

    std::string id() const override { return "fou"; }
    int dimension() const override { return 3; }
    std::vector<std::string> parameter_names() const override { return {"kappa", "H", "sigma2"}; }
    double span_constant() const { return C_; }
    double span_exponent() const { return beta_; }

    /// Sufficient condition 1 + beta/4 - 5H + 2H^2 > 0 for the LAN result.
    bool span_condition(double H) const { return 1.0 + 0.25 * beta_ - 5.0 * H + 2.0 * H * H > 0.0; }

    ModelStage stage(int n) const override {
        if (n < 1) throw ContractError("sample size must be positive");
        const double delta = std::pow(C_ / n, 1.0 / (1.0 + beta_));
        return {n, delta, n * delta, {}};
    }
    std::optional<std::string> violation(const ParameterVector& theta, std::optional<int>) const override {
        check_size(theta);
        if (!detail::open_positive(theta[0])) return "mean reversion kappa must be positive";
        if (!detail::open_unit(theta[1])) return "Hurst exponent must lie in (0,1)";
        if (!detail::open_positive(theta[2])) return "variance must be positive";
        return std::nullopt;
    }
    void evaluate(const ParameterVector& theta, const ModelStage& st, double lambda, int order,
                  double* out) const override {
        using std::numbers::pi;
        const double kappa = theta[0], H = theta[1], s2 = theta[2];
        const double delta = *st.mesh;
        const OuFold G = ou_fold_sum(H, kappa * delta, lambda);
        const Jet2 pre = gamma_sin_constant(H) * exp(Jet2{2.0 * H, 2.0, 0.0} * std::log(delta)) / (2.0 * pi);
        const Jet2 base = pre * G.value;  // f / sigma^2 as a jet in H
        out[0] = s2 * base.v;
        if (order < 1) return;
        const Jet2 dk = pre * G.d_a * delta;  // d/dkappa of f / sigma^2, jet in H
        out[1] = s2 * dk.v;
        out[2] = s2 * base.d;
        out[3] = base.v;
        if (order < 2) return;
        out[hessian_slot(3, 0, 0)] = s2 * pre.v * G.d_aa * delta * delta;
        out[hessian_slot(3, 0, 1)] = s2 * dk.d;
        out[hessian_slot(3, 0, 2)] = dk.v;
        out[hessian_slot(3, 1, 1)] = s2 * base.dd;
        out[hessian_slot(3, 1, 2)] = base.d;
        out[hessian_slot(3, 2, 2)] = 0.0;
    }
    double alpha_hint(const ParameterVector& theta, int) const override {
        return std::max(0.0, 2.0 * theta[1] - 1.0);
    }
    Eigen::MatrixXd rate_matrix(const ParameterVector& theta0, int n) const override {
        const ModelStage st = stage(n);
        const double T = *st.span, delta = *st.mesh;
        const double r = 1.0 / std::sqrt(T / delta);
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(3, 3);
        R(0, 0) = 1.0 / std::sqrt(T);
        R(1, 1) = r;
        R(2, 1) = 2.0 * theta0[2] * r * std::log(1.0 / delta);
        R(2, 2) = r;
        return R;
    }
    /// F_H(lambda) = d/dH log(C(H) sum_k |lambda + 2 pi k|^{-1-2H}), the infill limit
    /// of the H-score after the rate-matrix rotation removes the 2 log Delta term.
    static double score_limit(double H, double lambda) {
        const Jet2 f = fgn_density_jet(H, lambda);
        return f.d / f.v;
    }
    Eigen::MatrixXd limiting_fisher(const ParameterVector& theta) const override {
        require(theta);
        using std::numbers::pi;
        const double H = theta[1], s2 = theta[2];
        const auto q = integrate_half_circle(
            [&](double l, double* out) {
                out[0] = score_limit(H, l);
                out[1] = out[0] * out[0];
            },
            2, 0.0, 1e-11);
        Eigen::MatrixXd I = Eigen::MatrixXd::Zero(3, 3);
        I(0, 0) = 0.5 / theta[0];
        // (1 / 4 pi) int_{-pi}^{pi} = (1 / 2 pi) int_0^pi
        I(1, 1) = q[1].value / (2.0 * pi);
        I(1, 2) = I(2, 1) = q[0].value / (2.0 * pi * s2);
        I(2, 2) = 0.5 / (s2 * s2);
        return I;
    }

private:
    double C_;
    double beta_;
};

// ---------------------------------------------------------------------------

inline ModelPtr white_noise_model() { return std::make_shared<WhiteNoiseModel>(); }
inline ModelPtr mixed_fbm_model(double horizon = 1.0) { return std::make_shared<MixedFbmModel>(horizon); }
inline ModelPtr fou_model(double span_constant = 1.0, double span_exponent = 0.5) {
    return std::make_shared<FouModel>(span_constant, span_exponent);
}
inline ModelPtr mildly_integrated_ar1_model(double alpha = 0.15) { return MildAr1Model::power_rule(alpha); }

} // namespace lanarray
