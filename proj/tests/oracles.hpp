#pragma once

// Independent reference computations for the tests. Deliberately naive.

#include <cmath>
#include <complex>
#include <numbers>
#include <algorithm>
#include <span>
#include <vector>

namespace oracle {

/// Direct O(N) evaluation of one DFT bin, X[k] = Σ x[n]·e^{-2πikn/N}.
inline std::complex<double> dft_bin(std::span<const double> x, long k) {
    const auto n = static_cast<long>(x.size());
    long double re = 0, im = 0;
    for (long i = 0; i < n; ++i) {
        const long double ph = 2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * i) % n) /
                               static_cast<long double>(n);
        re += x[static_cast<std::size_t>(i)] * std::cos(ph);
        im -= x[static_cast<std::size_t>(i)] * std::sin(ph);
    }
    return {static_cast<double>(re), static_cast<double>(im)};
}

/// |DFT| at bin k of a 0/1 square wave with k whole cycles in N samples and
/// N/(2k) samples high per half period: k·|Σ_{n<L/2} e^{-2πin/L}| = k / sin(π/L).
inline double square_bin_magnitude(long n, long k) {
    const double L = static_cast<double>(n) / static_cast<double>(k);
    return static_cast<double>(k) / std::sin(std::numbers::pi / L);
}

inline double max_abs_rel_error(std::span<const double> got, std::span<const double> want) {
    double peak = 0;
    for (double w : want) peak = std::max(peak, std::abs(w));
    double err = 0;
    for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
    return peak > 0 ? err / peak : err;
}

inline std::vector<double> normalize(std::vector<double> v) {
    double peak = 0;
    for (double x : v) peak = std::max(peak, x);
    if (peak > 0) {
        for (double& x : v) x /= peak;
    }
    return v;
}

/// Piecewise-linear curve value, 0 outside the knots.
inline double linear_at(std::span<const double> x, std::span<const double> y, double t) {
    if (x.empty() || t < x.front() || t > x.back()) return 0;
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    if (it == x.end()) return y.back();
    const auto i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return y.front();
    const double u = (t - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + u * (y[i] - y[i - 1]);
}

/// Exact ∫ a·b of two piecewise-linear curves: on each interval between the
/// merged knots the product is quadratic, so Simpson's rule has no error.
inline double product_integral(std::span<const double> ax, std::span<const double> ay, std::span<const double> bx,
                               std::span<const double> by) {
    if (ax.empty() || bx.empty()) return 0;
    const double lo = std::max(ax.front(), bx.front());
    const double hi = std::min(ax.back(), bx.back());
    if (!(hi > lo)) return 0;
    std::vector<double> knots{lo, hi};
    for (double t : ax) if (t > lo && t < hi) knots.push_back(t);
    for (double t : bx) if (t > lo && t < hi) knots.push_back(t);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    long double sum = 0;
    auto f = [&](double t) { return linear_at(ax, ay, t) * linear_at(bx, by, t); };
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const double l = knots[i - 1], r = knots[i], m = 0.5 * (l + r);
        sum += (r - l) / 6.0 * (f(l) + 4.0 * f(m) + f(r));
    }
    return static_cast<double>(sum);
}

}  // namespace oracle
