#pragma once

// Panel quadrature on (0, pi] for even spectral symbols with an integrable
// power-law singularity |lambda|^{-alpha} at the origin.
//
// Panels are dyadic, [pi 2^{-j-1}, pi 2^{-j}], down to about 1e-12; each is
// split so that one subpanel spans at most kRadiansPerSubpanel radians of the
// fastest cosine, and carries a 32-point Gauss-Legendre rule. The stub
// [0, lambda_min] is integrated in closed form from the power-law hint.

#include "lanarray/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace lanarray {

struct PanelGrid {
    Eigen::ArrayXd nodes;
    Eigen::ArrayXd weights;  // integrate over (0, pi]
    int level = 0;
    double alpha_hint = 0.0;
    int max_lag = 0;

    Eigen::Index size() const { return nodes.size(); }
};

namespace detail {
inline constexpr int kDyadicPanels = 41;  // pi 2^-41 ~ 1.4e-12
inline constexpr double kRadiansPerSubpanel = 24.0;
inline constexpr int kMaxLevel = 8;
} // namespace detail

/// Nodes and weights for integrals of g(lambda) cos(k lambda), k <= max_lag.
inline PanelGrid panel_grid(int max_lag, double alpha_hint, int level = 0) {
    using std::numbers::pi;
    if (!(alpha_hint < 1.0)) throw DomainError("pole exponent alpha must be < 1 for integrability");
    if (max_lag < 0 || level < 0) throw ContractError("panel_grid: negative lag or level");

    using Rule = boost::math::quadrature::gauss<double, 32>;
    const auto& abs = Rule::abscissa();
    const auto& wts = Rule::weights();

    std::vector<double> x;
    std::vector<double> w;
    const double per_sub = detail::kRadiansPerSubpanel / std::ldexp(1.0, level);
    for (int j = 0; j < detail::kDyadicPanels; ++j) {
        const double hi = pi * std::ldexp(1.0, -j);
        const double lo = 0.5 * hi;
        const double width = hi - lo;
        const long subs = std::max<long>(std::lround(std::ceil(width * max_lag / per_sub)),
                                         1L << std::min(level, 20));
        const double h = width / static_cast<double>(subs);
        for (long s = 0; s < subs; ++s) {
            const double c = lo + (static_cast<double>(s) + 0.5) * h;
            for (std::size_t i = 0; i < abs.size(); ++i) {
                const double off = 0.5 * h * abs[i];
                const double wt = 0.5 * h * wts[i];
                if (off == 0.0) {
                    x.push_back(c);
                    w.push_back(wt);
                } else {
                    x.push_back(c - off);
                    w.push_back(wt);
                    x.push_back(c + off);
                    w.push_back(wt);
                }
            }
        }
    }
    // Stub: int_0^e lambda^{-alpha} = e^{1-alpha}/(1-alpha), represented as one
    // node at e carrying weight e/(1-alpha) so g(e) * weight reproduces it.
    const double e = pi * std::ldexp(1.0, -detail::kDyadicPanels);
    x.push_back(e);
    w.push_back(e / (1.0 - alpha_hint));

    PanelGrid g;
    g.nodes = Eigen::Map<Eigen::ArrayXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    g.weights = Eigen::Map<Eigen::ArrayXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    g.level = level;
    g.alpha_hint = alpha_hint;
    g.max_lag = max_lag;
    return g;
}

/// Columns of `values` are symbols sampled at the grid nodes. Returns the
/// matrix of full-circle cosine moments int_{-pi}^{pi} g(lambda) cos(k lambda)
/// for k = 0..nlags-1, one column per symbol.
inline Eigen::MatrixXd cosine_moments(const PanelGrid& grid, const Eigen::MatrixXd& values, int nlags) {
    if (values.rows() != grid.size()) throw ContractError("cosine_moments: value rows must match grid size");
    const Eigen::Index m = grid.size();
    const Eigen::MatrixXd wf = values.array().colwise() * (2.0 * grid.weights);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nlags, values.cols());

    // Slabs of nodes keep the cosine block in cache between the rotation and the product.
    constexpr int kBlock = 64;
    constexpr Eigen::Index kSlab = 1024;
    Eigen::MatrixXd C(kSlab, kBlock);
    Eigen::ArrayXd c(kSlab), s(kSlab), cn(kSlab);
    for (Eigen::Index r0 = 0; r0 < m; r0 += kSlab) {
        const Eigen::Index rb = std::min(kSlab, m - r0);
        const auto nodes = grid.nodes.segment(r0, rb);
        const Eigen::ArrayXd cw = nodes.cos();
        const Eigen::ArrayXd sw = nodes.sin();
        for (int k0 = 0; k0 < nlags; k0 += kBlock) {
            const int b = std::min(kBlock, nlags - k0);
            // Re-seed from libm each block so rotation drift stays O(64 eps).
            c.head(rb) = (nodes * static_cast<double>(k0)).cos();
            s.head(rb) = (nodes * static_cast<double>(k0)).sin();
            C.col(0).head(rb) = c.head(rb).matrix();
            for (int t = 1; t < b; ++t) {
                cn.head(rb) = c.head(rb) * cw - s.head(rb) * sw;
                s.head(rb) = s.head(rb) * cw + c.head(rb) * sw;
                c.head(rb) = cn.head(rb);
                C.col(t).head(rb) = c.head(rb).matrix();
            }
            out.middleRows(k0, b).noalias() += C.topLeftCorner(rb, b).transpose() * wf.middleRows(r0, rb);
        }
    }
    return out;
}

struct QuadratureValue {
    double value = 0.0;
    double abs_error = 0.0;
    int level = 0;
};

/// int_0^pi g(lambda) d lambda with level doubling until successive panel
/// refinements agree to tol (relative to max(1, |value|)).
inline QuadratureValue integrate_half_circle(const std::function<double(double)>& g, double alpha_hint,
                                             double tol = 1e-10) {
    auto eval = [&](int level) {
        const PanelGrid grid = panel_grid(0, alpha_hint, level);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < grid.size(); ++i) acc += grid.weights[i] * g(grid.nodes[i]);
        return acc;
    };
    QuadratureValue r;
    double prev = eval(0);
    for (int level = 1; level <= detail::kMaxLevel; ++level) {
        const double cur = eval(level);
        r.value = cur;
        r.abs_error = std::fabs(cur - prev);
        r.level = level;
        if (r.abs_error <= tol * std::max(1.0, std::fabs(cur))) break;
        prev = cur;
    }
    return r;
}

/// Componentwise int_0^pi of a vector-valued integrand g(lambda, out[dim]),
/// sharing node evaluations across components.
inline std::vector<QuadratureValue> integrate_half_circle(const std::function<void(double, double*)>& g, int dim,
                                                          double alpha_hint, double tol = 1e-10) {
    std::vector<double> buf(static_cast<std::size_t>(dim));
    auto eval = [&](int level) {
        const PanelGrid grid = panel_grid(0, alpha_hint, level);
        std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            g(grid.nodes[i], buf.data());
            for (int c = 0; c < dim; ++c) acc[c] += grid.weights[i] * buf[c];
        }
        return acc;
    };
    std::vector<QuadratureValue> r(static_cast<std::size_t>(dim));
    std::vector<double> prev = eval(0);
    for (int level = 1; level <= detail::kMaxLevel; ++level) {
        const std::vector<double> cur = eval(level);
        bool done = true;
        for (int c = 0; c < dim; ++c) {
            r[c] = {cur[c], std::fabs(cur[c] - prev[c]), level};
            if (r[c].abs_error > tol * std::max(1.0, std::fabs(cur[c]))) done = false;
        }
        if (done) break;
        prev = cur;
    }
    return r;
}

} // namespace lanarray
