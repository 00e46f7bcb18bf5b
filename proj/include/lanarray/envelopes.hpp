#pragma once

// Power-law envelope tables for the trace-approximation machinery: for each
// model, exponents and coefficients with f in sum_i cap_k Gamma_1(c_ik, alpha_ik, L)
// and 1/f in sum_k cap_i Gamma_1(1/cbar_ik, -alphabar_ik, L), plus the index
// selections and the rates delta_n, delta_n^*, delta_n^star built from them.

#include "lanarray/errors.hpp"
#include "lanarray/spectral_models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace lanarray {

/// One declared class membership |h| + |lambda h'| <= coef |lambda|^{-exponent-eps} L(eps).
struct EnvelopeMembership {
    std::string name;
    std::function<double(double)> h;
    double coef = 1.0;
    double exponent = 0.0;
};

struct EnvelopeTable {
    std::string model_id;
    int m = 1;
    int q = 1;
    Eigen::MatrixXd alpha, alpha_bar, beta;  // m x q
    Eigen::MatrixXd c, c_bar, d;             // m x q
    // 0-based index selections, m x q each.
    Eigen::MatrixXi i_prime, i_ast, i_star, k_prime, k_ast, k_star;
    std::function<double(double)> L = [](double) { return 1.0; };
    double z = 0.0;  // interpolation exponent, where the model uses one
    std::vector<EnvelopeMembership> memberships;

    void resize(int m_, int q_) {
        m = m_;
        q = q_;
        for (auto* M : {&alpha, &alpha_bar, &beta, &c, &c_bar, &d}) M->setZero(m, q);
        for (auto* M : {&i_prime, &i_ast, &i_star, &k_prime, &k_ast, &k_star}) M->setZero(m, q);
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < q; ++k) {
                i_prime(i, k) = i_ast(i, k) = i_star(i, k) = i;
                k_prime(i, k) = k_ast(i, k) = k_star(i, k) = k;
            }
    }
};

namespace detail {

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

/// alpha'_i = max_k alphabar_{i',k} 1{alphabar_{i',k} < 1}.
inline double alpha_prime(const EnvelopeTable& t, int i) {
    double a = 0.0;
    bool any = false;
    for (int k = 0; k < t.q; ++k) {
        const double ab = t.alpha_bar(t.i_prime(i, k), k);
        const double v = ab < 1.0 ? ab : 0.0;
        a = any ? std::max(a, v) : v;
        any = true;
    }
    return a;
}

inline void check_indices(const EnvelopeTable& t) {
    auto in = [](const Eigen::MatrixXi& M, int hi) { return M.size() == 0 || (M.minCoeff() >= 0 && M.maxCoeff() < hi); };
    if (!in(t.i_prime, t.m) || !in(t.i_ast, t.m) || !in(t.i_star, t.m) || !in(t.k_prime, t.q) ||
        !in(t.k_ast, t.q) || !in(t.k_star, t.q))
        throw ContractError("envelope table index maps out of range");
    for (int i = 0; i < t.m; ++i)
        if (!(t.alpha.row(i).minCoeff() < 1.0)) throw ContractError("envelope table needs min_k alpha_ik < 1");
}

} // namespace detail

/// Conditions on the selections required by the trace theorem for products of
/// p factors; returns human readable descriptions of every violated one.
inline std::vector<std::string> trace_condition_violations(const EnvelopeTable& t, int p, double eta) {
    detail::check_indices(t);
    std::vector<std::string> bad;
    auto note = [&](bool ok, const std::string& what, int i, int k) {
        if (!ok) bad.push_back(what + " at (i,k)=(" + std::to_string(i + 1) + "," + std::to_string(k + 1) + ")");
    };
    for (int i = 0; i < t.m; ++i) {
        double max_gap = -std::numeric_limits<double>::infinity();
        double min_ab = std::numeric_limits<double>::infinity();
        for (int k = 0; k < t.q; ++k) {
            const int ip = t.i_prime(i, k);
            max_gap = std::max(max_gap, detail::positive_part(t.beta(i, t.k_prime(i, k)) - t.alpha_bar(ip, k)));
            min_ab = std::min(min_ab, t.alpha_bar(ip, k));
        }
        note(max_gap + min_ab < 1.0 - eta, "max_k (beta - alphabar)_+ + min_k alphabar < 1 - eta", i, 0);
        note(detail::alpha_prime(t, i) < 1.0 - eta, "alpha'_i < 1 - eta", i, 0);
        for (int k = 0; k < t.q; ++k) {
            const int ip = t.i_prime(i, k), ia = t.i_ast(i, k), is = t.i_star(i, k);
            const int kp = t.k_prime(i, k), ka = t.k_ast(i, k), ks = t.k_star(i, k);
            note(t.beta(i, kp) - t.alpha_bar(ip, k) < 1.0 - eta, "beta_{i,k'} - alphabar_{i',k} < 1 - eta", i, k);
            note(p * detail::positive_part(t.beta(i, ka) - t.alpha_bar(ia, k)) < 1.0 - eta,
                 "p (beta_{i,k*} - alphabar_{i*,k})_+ < 1 - eta", i, k);
            note(p * detail::positive_part(t.alpha(i, ks) - t.alpha_bar(is, k)) < 1.0 - eta,
                 "p (alpha_{i,k star} - alphabar_{i star,k})_+ < 1 - eta", i, k);
            note(t.beta(i, ka) < 1.0 - eta, "beta_{i,k*} < 1 - eta", i, k);
            note(t.alpha(i, ks) < 1.0 - eta, "alpha_{i,k star} < 1 - eta", i, k);
            note(t.alpha_bar(ia, k) > -1.0 + eta, "alphabar_{i*,k} > -1 + eta", i, k);
            note(t.alpha_bar(is, k) > -1.0 + eta, "alphabar_{i star,k} > -1 + eta", i, k);
        }
    }
    return bad;
}

struct DeltaBounds {
    double delta_n = 0.0;
    double delta_ast_n = 0.0;   // delta_n^*
    double delta_star_n = 1.0;  // delta_n^star
    Eigen::MatrixXd R;          // R_{i,k}
    double epsilon = 0.0;
    double eta = 0.0;
    int n = 0;

    /// (1/n) delta_star [delta_ast^p + (delta_star delta)^p], without the constant K.
    double trace_bound(int p) const {
        return delta_star_n * (std::pow(delta_ast_n, p) + std::pow(delta_star_n * delta_n, p)) / n;
    }
};

/// The three rates of the trace theorem evaluated literally from a table.
inline DeltaBounds delta_rates(const EnvelopeTable& t, int n, double epsilon, double eta) {
    detail::check_indices(t);
    if (n < 1) throw ContractError("delta_rates: n must be positive");
    if (!(epsilon > 0.0) || !(eta > 0.0 && eta < 1.0)) throw ContractError("delta_rates: need epsilon > 0, eta in (0,1)");
    DeltaBounds out;
    out.n = n;
    out.epsilon = epsilon;
    out.eta = eta;
    out.R = Eigen::MatrixXd::Ones(t.m, t.q);
    const double dn = static_cast<double>(n);
    double star_sum = 0.0;
    for (int i = 0; i < t.m; ++i) {
        const double ap = detail::positive_part(detail::alpha_prime(t, i));
        for (int k = 0; k < t.q; ++k) {
            const int ip = t.i_prime(i, k), ia = t.i_ast(i, k), is = t.i_star(i, k);
            const int kp = t.k_prime(i, k), ka = t.k_ast(i, k), ks = t.k_star(i, k);
            const double gap = t.beta(i, kp) - t.alpha_bar(ip, k);

            double Rik = 1.0;
            if (gap + eta >= 0.0) {
                double best = -std::numeric_limits<double>::infinity();  // max over empty set
                bool any_k2 = false;
                for (int k1 = 0; k1 < t.q; ++k1) {
                    const int i1 = t.i_prime(i, k1);
                    if (!(t.alpha_bar(i1, k1) + gap >= 1.0 - eta)) continue;
                    double lo = std::numeric_limits<double>::infinity();
                    for (int k2 = 0; k2 < t.q; ++k2) {
                        const int i2 = t.i_prime(i, k2);
                        if (!(t.alpha_bar(i2, k2) + gap < 1.0 - eta)) continue;
                        any_k2 = true;
                        lo = std::min(lo, t.c_bar(i2, k2) / t.c_bar(i1, k1));
                    }
                    if (!any_k2)
                        throw ContractError("envelope table: no admissible k2 in the R_{i,k} minimum (i=" +
                                            std::to_string(i + 1) + ", k=" + std::to_string(k + 1) + ")");
                    best = std::max(best, lo);
                }
                Rik = std::max(1.0, best);
            }
            out.R(i, k) = Rik;

            out.delta_n += t.d(i, kp) / t.c_bar(ip, k) *
                           std::pow(Rik * dn, detail::positive_part(gap) / (1.0 - ap) + epsilon);
            out.delta_ast_n += t.d(i, ka) / t.c_bar(ia, k) *
                               std::pow(dn, detail::positive_part(t.beta(i, ka) - t.alpha_bar(ia, k)) + epsilon);
            star_sum += t.c(i, ks) / t.c_bar(is, k) *
                        std::pow(dn, detail::positive_part(t.alpha(i, ks) - t.alpha_bar(is, k)) + epsilon);
        }
    }
    out.delta_star_n = std::max(1.0, star_sum);
    return out;
}

namespace detail {

inline EnvelopeTable white_noise_table(const ParameterVector& theta) {
    EnvelopeTable t;
    t.model_id = "white_noise";
    t.resize(1, 1);
    t.c(0, 0) = t.c_bar(0, 0) = t.d(0, 0) = theta[0];
    t.L = [](double) { return 1.0; };
    const double s2 = theta[0];
    t.memberships.push_back({"f", [s2](double) { return s2 / (2.0 * std::numbers::pi); }, s2, 0.0});
    t.memberships.push_back({"1/f", [s2](double) { return 2.0 * std::numbers::pi / s2; }, 1.0 / s2, 0.0});
    t.memberships.push_back({"grad f", [](double) { return 1.0 / (2.0 * std::numbers::pi); }, s2, 0.0});
    return t;
}

inline void add_density_memberships(EnvelopeTable& t, const ModelPtr& model, const ParameterVector& theta, int n,
                                    const std::vector<int>& component_of_parameter) {
    const int M = model->dimension();
    auto st = std::make_shared<ModelStage>(model->stage(n));
    for (int j = 0; j < M; ++j) {
        const int i = component_of_parameter.empty() ? 0 : component_of_parameter[j];
        for (int k = 0; k < t.q; ++k) {
            t.memberships.push_back({"d f / d " + model->parameter_names()[j] + " [k=" + std::to_string(k + 1) + "]",
                                     [model, theta, st, j, M](double l) {
                                         std::vector<double> buf(symbol_count(M, 1));
                                         model->evaluate(theta, *st, l, 1, buf.data());
                                         return buf[1 + j];
                                     },
                                     t.d(i, k), t.beta(i, k)});
        }
    }
}

inline EnvelopeTable ar1_table(const MildAr1Model& model, const ModelPtr& ptr, const ParameterVector& theta, int n,
                               double eta) {
    using std::numbers::pi;
    EnvelopeTable t;
    t.model_id = "ar1_mild";
    t.resize(1, 3);
    const double c = theta[0], s2 = theta[1];
    const double ca = c * model.drift_scale(n);
    const double z = 0.5 + eta / 10.0;
    t.z = z;
    t.alpha << 0.0, 2.0, 2.0 * (1.0 - z);
    t.alpha_bar << 0.0, 2.0, 2.0;
    t.c << s2 / (ca * ca), s2, s2 * std::pow(ca, -2.0 * z);
    t.c_bar << s2 / (ca * ca), s2, s2;
    t.beta = t.alpha;
    t.d = t.c;
    t.k_prime << 0, 1, 1;
    t.k_ast << 0, 2, 2;
    t.k_star << 0, 2, 2;
    t.L = [](double) { return 1.0; };

    const double phi = 1.0 - ca;
    auto f = [s2, phi, ca](double l) {
        const double h = std::sin(0.5 * l);
        return s2 / (2.0 * pi * (ca * ca + 4.0 * phi * h * h));
    };
    for (int k = 0; k < 3; ++k) t.memberships.push_back({"f [k=" + std::to_string(k + 1) + "]", f, t.c(0, k), t.alpha(0, k)});
    t.memberships.push_back({"1/f piece 1", [s2, ca](double) { return 2.0 * pi * ca * ca / s2; }, 1.0 / t.c_bar(0, 0),
                             -t.alpha_bar(0, 0)});
    t.memberships.push_back({"1/f piece 2",
                             [s2, phi](double l) {
                                 const double h = std::sin(0.5 * l);
                                 return 2.0 * pi * 4.0 * phi * h * h / s2;
                             },
                             1.0 / t.c_bar(0, 1), -t.alpha_bar(0, 1)});
    add_density_memberships(t, ptr, theta, n, {});
    return t;
}

inline EnvelopeTable fou_table(const FouModel& model, const ModelPtr& ptr, const ParameterVector& theta, int n,
                               double eta) {
    EnvelopeTable t;
    t.model_id = "fou";
    t.resize(1, 3);
    const double kappa = theta[0], H = theta[1], s2 = theta[2];
    const double delta = *model.stage(n).mesh;
    const double C = gamma_sin_constant(H).v;
    const double lg3 = std::pow(std::fabs(std::log(delta)), 3);
    const double z = H + eta / 10.0;
    t.z = z;
    t.alpha << 2.0 * H - 1.0, 2.0 * H + 1.0, 2.0 * H + 1.0 - 2.0 * z;
    t.alpha_bar << 2.0 * H - 1.0, 2.0 * H + 1.0, 2.0 * H + 1.0;
    t.c << s2 * C / (kappa * kappa * std::pow(delta, 2.0 - 2.0 * H)) * lg3, s2 * C * std::pow(delta, 2.0 * H) * lg3,
        s2 * C * std::pow(kappa, -2.0 * z) * std::pow(delta, 1.0 - 3.0 * z + 2.0 * H * z) * lg3;
    t.c_bar << s2 * C / (kappa * kappa * std::pow(delta, 2.0 - 2.0 * H)), s2 * C * std::pow(delta, 2.0 * H),
        s2 * C * std::pow(delta, 2.0 * H);
    t.beta = t.alpha;
    t.d = t.c;
    t.k_prime << 0, 1, 1;
    t.k_ast << 0, 2, 2;
    t.k_star << 0, 2, 2;
    t.L = [](double) { return 1.0; };

    const int nn = n;
    const double a2 = kappa * kappa * delta * delta;
    auto f = [ptr, theta, nn](double l) { return ptr->density(theta, nn, l); };
    for (int k = 0; k < 3; ++k) t.memberships.push_back({"f [k=" + std::to_string(k + 1) + "]", f, t.c(0, k), t.alpha(0, k)});
    t.memberships.push_back({"1/f piece 1", [f, a2](double l) { return a2 / ((a2 + l * l) * f(l)); },
                             1.0 / t.c_bar(0, 0), -t.alpha_bar(0, 0)});
    t.memberships.push_back({"1/f piece 2", [f, a2](double l) { return l * l / ((a2 + l * l) * f(l)); },
                             1.0 / t.c_bar(0, 1), -t.alpha_bar(0, 1)});
    add_density_memberships(t, ptr, theta, n, {});
    return t;
}

inline EnvelopeTable mixed_fbm_table(const MixedFbmModel& model, const ParameterVector& theta, int n) {
    using std::numbers::pi;
    EnvelopeTable t;
    t.model_id = "mixed_fbm";
    t.resize(2, 1);
    const double K = 1.0;
    const double delta = *model.stage(n).mesh;
    const double logd = std::log(1.0 / delta);
    for (int i = 0; i < 2; ++i) {
        const double H = theta[2 * i], s2 = theta[2 * i + 1];
        const double CH = fgn_constant(H).v;
        t.alpha(i, 0) = t.alpha_bar(i, 0) = t.beta(i, 0) = 2.0 * H - 1.0;
        t.c(i, 0) = K * CH * s2 * std::pow(delta, 2.0 * H);
        t.c_bar(i, 0) = CH * s2 * std::pow(delta, 2.0 * H) / K;
        t.d(i, 0) = K * CH * std::max(s2, 1.0) * std::pow(delta, 2.0 * H) * logd;
    }
    t.L = [K](double eps) { return 2.0 * std::pow(K, 4) * std::max(1.0 / (std::numbers::e * eps * eps * eps), std::pow(pi, eps)); };

    for (int i = 0; i < 2; ++i) {
        const double H = theta[2 * i], s2 = theta[2 * i + 1];
        const double scale = s2 * std::pow(delta, 2.0 * H);
        t.memberships.push_back({"f component " + std::to_string(i + 1),
                                 [H, scale](double l) { return scale * fbm_increment_density(H, l); }, t.c(i, 0),
                                 t.alpha(i, 0)});
    }
    auto ptr = std::make_shared<MixedFbmModel>(model);
    for (int i = 0; i < 2; ++i)
        t.memberships.push_back({"1/f [i=" + std::to_string(i + 1) + "]",
                                 [ptr, theta, n](double l) { return 1.0 / ptr->density(theta, n, l); },
                                 1.0 / t.c_bar(i, 0), -t.alpha_bar(i, 0)});
    add_density_memberships(t, ptr, theta, n, {0, 0, 1, 1});
    return t;
}

} // namespace detail

/// Published envelope choices for the supported models at (theta, n); eta
/// sets the interpolation exponent z just above its lower bound.
inline EnvelopeTable envelope_table_for(const ModelPtr& model, const ParameterVector& theta, int n, double eta = 0.05) {
    model->require(theta, n);
    if (model->id() == "white_noise") return detail::white_noise_table(theta);
    if (auto* ar = dynamic_cast<const MildAr1Model*>(model.get())) return detail::ar1_table(*ar, model, theta, n, eta);
    if (auto* fou = dynamic_cast<const FouModel*>(model.get())) return detail::fou_table(*fou, model, theta, n, eta);
    if (auto* mix = dynamic_cast<const MixedFbmModel*>(model.get())) return detail::mixed_fbm_table(*mix, theta, n);
    throw UnsupportedError("no envelope table for model '" + model->id() + "'");
}

} // namespace lanarray
