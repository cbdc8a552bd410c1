#ifndef AREL_DIAGNOSTICS_HPP
#define AREL_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "arel/model.hpp"

namespace arel {

struct degenerate_series_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// d = sum_{t>=2} (e_t - e_{t-1})^2 / sum_t e_t^2.
inline double durbin_watson(const Vector& e) {
    if (e.size() < 2) throw dimension_error("durbin_watson: need at least 2 residuals");
    const double denom = e.squaredNorm();
    if (denom == 0.0) throw degenerate_series_error("durbin_watson: zero residual vector");
    const double num = (e.tail(e.size() - 1) - e.head(e.size() - 1)).squaredNorm();
    return num / denom;
}

/// Sample autocorrelations for lags 1..max_lag with the lag-0 denominator.
inline Vector acf(const Vector& x, Eigen::Index max_lag) {
    const auto n = x.size();
    if (max_lag >= n) throw dimension_error("acf: max_lag must be < n");
    const double mean = x.mean();
    const Vector c = x.array() - mean;
    const double c0 = c.squaredNorm();
    if (c0 == 0.0) throw degenerate_series_error("acf: constant series");
    Vector r(max_lag);
    for (Eigen::Index k = 1; k <= max_lag; ++k)
        r(k - 1) = c.tail(n - k).dot(c.head(n - k)) / c0;
    return r;
}

/// Partial autocorrelations via the Durbin-Levinson recursion on the acf.
inline Vector pacf(const Vector& x, Eigen::Index max_lag) {
    const Vector r = acf(x, max_lag);
    Vector out(max_lag);
    std::vector<double> phi_prev(max_lag + 1, 0.0), phi_cur(max_lag + 1, 0.0);
    double v = 1.0;
    for (Eigen::Index k = 1; k <= max_lag; ++k) {
        double num = r(k - 1);
        for (Eigen::Index j = 1; j < k; ++j) num -= phi_prev[j] * r(k - 1 - j);
        const double a = num / v;
        phi_cur[k] = a;
        for (Eigen::Index j = 1; j < k; ++j) phi_cur[j] = phi_prev[j] - a * phi_prev[k - j];
        v *= (1.0 - a * a);
        out(k - 1) = a;
        phi_prev = phi_cur;
    }
    return out;
}

struct DiagnosticsReport {
    double dw = 0.0;
    Vector acf;
    Vector pacf;
    Eigen::Index n = 0;
};

inline DiagnosticsReport residual_diagnostics(const Vector& e, Eigen::Index max_lag) {
    DiagnosticsReport rep;
    rep.n = e.size();
    rep.dw = durbin_watson(e);
    rep.acf = acf(e, max_lag);
    rep.pacf = pacf(e, max_lag);
    return rep;
}

inline double normal_quantile(double u);

/**
 * Normal quantile-quantile pairs: (theoretical quantile, ordered residual)
 * using the (i - 0.5)/n plotting positions.
 */
inline std::vector<std::pair<double, double>> qq_pairs(const Vector& e) {
    const auto n = e.size();
    std::vector<double> sorted(e.data(), e.data() + n);
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        // Acklam-style rational approximation of the standard normal quantile
        out.emplace_back(normal_quantile(u), sorted[static_cast<std::size_t>(i)]);
    }
    return out;
}

/// Inverse standard normal CDF (Peter Acklam's rational approximation).
inline double normal_quantile(double u) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (u < plow) {
        q = std::sqrt(-2.0 * std::log(u));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (u > 1.0 - plow) {
        q = std::sqrt(-2.0 * std::log(1.0 - u));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = u - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace arel

#endif  // AREL_DIAGNOSTICS_HPP
