#pragma once

// Scalar special functions shared by the spectral models: a second-order
// jet type for exact H-derivatives, the fBm normalizing constant, and the
// aliasing fold sums sum_k |lambda + 2 pi k|^{-s} with an Euler-Maclaurin tail.

#include "lanarray/errors.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include <array>
#include <cmath>
#include <numbers>

namespace lanarray {

/// Value plus first and second derivative with respect to one scalar variable.
struct Jet2 {
    double v = 0.0;
    double d = 0.0;
    double dd = 0.0;

    static constexpr Jet2 constant(double x) { return {x, 0.0, 0.0}; }
    static constexpr Jet2 variable(double x) { return {x, 1.0, 0.0}; }

    Jet2& operator+=(const Jet2& o) {
        v += o.v;
        d += o.d;
        dd += o.dd;
        return *this;
    }
    Jet2& operator-=(const Jet2& o) {
        v -= o.v;
        d -= o.d;
        dd -= o.dd;
        return *this;
    }
};

inline Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
inline Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
inline Jet2 operator-(const Jet2& a) { return {-a.v, -a.d, -a.dd}; }
inline Jet2 operator+(Jet2 a, double c) { a.v += c; return a; }
inline Jet2 operator+(double c, Jet2 a) { a.v += c; return a; }
inline Jet2 operator-(Jet2 a, double c) { a.v -= c; return a; }
inline Jet2 operator-(double c, const Jet2& a) { return {c - a.v, -a.d, -a.dd}; }
inline Jet2 operator*(const Jet2& a, double c) { return {a.v * c, a.d * c, a.dd * c}; }
inline Jet2 operator*(double c, const Jet2& a) { return a * c; }
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}
inline Jet2 inverse(const Jet2& a) {
    const double r = 1.0 / a.v;
    return {r, -a.d * r * r, (2.0 * a.d * a.d * r - a.dd) * r * r};
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * inverse(b); }
inline Jet2 operator/(const Jet2& a, double c) { return a * (1.0 / c); }
inline Jet2 exp(const Jet2& a) {
    const double e = std::exp(a.v);
    return {e, e * a.d, e * (a.dd + a.d * a.d)};
}
inline Jet2 log(const Jet2& a) {
    const double r = 1.0 / a.v;
    return {std::log(a.v), a.d * r, (a.dd - a.d * a.d * r) * r};
}
/// x^a for a constant base x > 0 and jet exponent a.
inline Jet2 pow(double x, const Jet2& a) { return exp(a * std::log(x)); }

/// Gamma(2H+1) sin(pi H) as a jet in H; the fOU normalization. Dividing by pi
/// gives the fGN constant C_H.
inline Jet2 gamma_sin_constant(double H) {
    using std::numbers::pi;
    const double s = std::sin(pi * H);
    const double logc = std::lgamma(2.0 * H + 1.0) + std::log(s);
    const double d1 = 2.0 * boost::math::digamma(2.0 * H + 1.0) + pi * std::cos(pi * H) / s;
    const double d2 = 4.0 * boost::math::trigamma(2.0 * H + 1.0) - pi * pi / (s * s);
    return exp(Jet2{logc, d1, d2});
}

inline Jet2 fgn_constant(double H) { return gamma_sin_constant(H) / std::numbers::pi; }

namespace detail {

// Bernoulli numbers B_2..B_12 divided by their factorial index (2p)!.
inline constexpr std::array<double, 6> kBernoulliOverFactorial = {
    (1.0 / 6.0) / 2.0,
    (-1.0 / 30.0) / 24.0,
    (1.0 / 42.0) / 720.0,
    (-1.0 / 30.0) / 40320.0,
    (5.0 / 66.0) / 3628800.0,
    (-691.0 / 2730.0) / 479001600.0,
};

inline constexpr int kDirectTerms = 10;

} // namespace detail

/// sum_{m >= 0} (x0 + h m)^{-s} for x0 well beyond h, by Euler-Maclaurin.
inline Jet2 power_tail(const Jet2& s, double x0, double h) {
    const double lx = std::log(x0);
    const Jet2 xs = exp(-s * lx);  // x0^{-s}
    Jet2 total = xs * x0 / (h * (s - 1.0)) + xs * 0.5;
    Jet2 rising = s;       // (s)_{2p-1}
    double hp = h;         // h^{2p-1}
    double xp = 1.0 / x0;  // x0^{-(2p-1)}
    for (std::size_t p = 0; p < detail::kBernoulliOverFactorial.size(); ++p) {
        total += rising * xs * (detail::kBernoulliOverFactorial[p] * hp * xp);
        rising = rising * (s + static_cast<double>(2 * p + 1)) * (s + static_cast<double>(2 * p + 2));
        hp *= h * h;
        xp /= x0 * x0;
    }
    return total;
}

/// sum over all integers k of |lambda + 2 pi k|^{-s}, s > 1, lambda in (0, pi].
inline Jet2 fold_sum(const Jet2& s, double lambda) {
    using std::numbers::pi;
    const double two_pi = 2.0 * pi;
    Jet2 total = exp(-s * std::log(lambda));
    for (int k = 1; k < detail::kDirectTerms; ++k) {
        total += exp(-s * std::log(two_pi * k + lambda));
        total += exp(-s * std::log(two_pi * k - lambda));
    }
    const double K = detail::kDirectTerms;
    total += power_tail(s, two_pi * K + lambda, two_pi);
    total += power_tail(s, two_pi * K - lambda, two_pi);
    return total;
}

/// Reduce a frequency to (0, pi] using evenness and 2 pi periodicity.
inline double fold_frequency(double lambda) {
    using std::numbers::pi;
    double x = std::fabs(std::remainder(lambda, 2.0 * pi));
    return x;
}

/// Spectral density of unit-variance fractional Gaussian noise as a jet in H.
inline Jet2 fgn_density_jet(double H, double lambda) {
    if (!(H > 0.0 && H < 1.0)) throw DomainError("Hurst exponent must lie in (0,1)");
    const double x = fold_frequency(lambda);
    if (!(x > 0.0)) throw DomainError("fGN density is singular at frequency 0");
    const double half = std::sin(0.5 * x);
    const Jet2 s{1.0 + 2.0 * H, 2.0, 0.0};
    return fgn_constant(H) * (2.0 * half * half) * fold_sum(s, x);
}

/// fOU fold sum G = sum_k |x_k|^{1-2H} / (a^2 + x_k^2), x_k = lambda + 2 pi k,
/// as a jet in H, with its first two derivatives in a.
struct OuFold {
    Jet2 value;
    Jet2 d_a;        // d/da, still a jet in H
    double d_aa = 0.0;
};

inline OuFold ou_fold_sum(double H, double a, double lambda) {
    using std::numbers::pi;
    const double two_pi = 2.0 * pi;
    const Jet2 e{1.0 - 2.0 * H, -2.0, 0.0};  // exponent 1-2H
    const double a2 = a * a;

    OuFold out;
    auto direct = [&](double x) {
        const double q = a2 + x * x;
        const Jet2 p = exp(e * std::log(x));
        out.value += p / q;
        out.d_a += p * (-2.0 * a / (q * q));
        out.d_aa += p.v * (-2.0 / (q * q) + 8.0 * a2 / (q * q * q));
    };

    int K = detail::kDirectTerms;
    // The tail expansion in (a/x)^2 needs x0 comfortably above a.
    while (two_pi * K - pi < 3.0 * a) K *= 2;
    direct(lambda);
    for (int k = 1; k < K; ++k) {
        direct(two_pi * k + lambda);
        direct(two_pi * k - lambda);
    }
    // Beyond K: |x|^{1-2H}/(a^2+x^2) = sum_j (-a^2)^j x^{-(1+2H+2j)}.
    for (double x0 : {two_pi * K + lambda, two_pi * K - lambda}) {
        const double ratio2 = (a / x0) * (a / x0);
        double decay = 1.0;  // (a/x0)^{2j}, bounds the relative size of term j
        for (int j = 0; j < 60 && (j < 2 || decay > 1e-22); ++j, decay *= ratio2) {
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            const double c0 = sign * std::pow(a, 2 * j);
            const double c1 = (j >= 1) ? sign * 2.0 * j * std::pow(a, 2 * j - 1) : 0.0;
            const double c2 = (j >= 1) ? sign * 2.0 * j * (2.0 * j - 1.0) * std::pow(a, 2 * j - 2) : 0.0;
            const Jet2 s{1.0 + 2.0 * H + 2.0 * j, 2.0, 0.0};
            const Jet2 t = power_tail(s, x0, two_pi);
            out.value += c0 * t;
            out.d_a += c1 * t;
            out.d_aa += c2 * t.v;
        }
    }
    return out;
}

} // namespace lanarray
