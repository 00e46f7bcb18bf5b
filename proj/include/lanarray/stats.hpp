#pragma once

// Small descriptive statistics used by the Monte Carlo audits.

#include "lanarray/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace lanarray::stats {

inline double mean(const std::vector<double>& x) {
    if (x.empty()) throw ContractError("mean of an empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance(const std::vector<double>& x) {
    if (x.size() < 2) throw ContractError("variance needs two observations");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double median(std::vector<double> x) {
    if (x.empty()) throw ContractError("median of an empty sample");
    const std::size_t h = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<long>(h), x.end());
    const double hi = x[h];
    if (x.size() % 2 == 1) return hi;
    return 0.5 * (hi + *std::max_element(x.begin(), x.begin() + static_cast<long>(h)));
}

/// Rows are observations.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& rows) {
    if (rows.rows() < 2) throw ContractError("covariance needs two observations");
    const Eigen::RowVectorXd mu = rows.colwise().mean();
    const Eigen::MatrixXd c = rows.rowwise() - mu;
    return c.transpose() * c / static_cast<double>(rows.rows() - 1);
}

inline double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / b.norm();
}

inline double normal_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }

/// max |F_emp(q_p) - p| over the standard normal quantiles q_p at the 21
/// levels p = i/22.
inline double quantile_distance(std::vector<double> x) {
    if (x.empty()) throw ContractError("quantile_distance: empty sample");
    std::sort(x.begin(), x.end());
    double worst = 0.0;
    for (int i = 1; i <= 21; ++i) {
        const double p = static_cast<double>(i) / 22.0;
        const double q = boost::math::quantile(boost::math::normal(), p);
        const double emp = static_cast<double>(std::upper_bound(x.begin(), x.end(), q) - x.begin()) /
                           static_cast<double>(x.size());
        worst = std::max(worst, std::fabs(emp - p));
    }
    return worst;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least squares fit of log y on log x.
inline LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ContractError("loglog_fit: need two matching points");
    const std::size_t m = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("loglog_fit: nonpositive value");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    LineFit f;
    f.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / static_cast<double>(m);
    return f;
}

} // namespace lanarray::stats
