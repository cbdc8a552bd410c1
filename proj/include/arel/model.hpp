#ifndef AREL_MODEL_HPP
#define AREL_MODEL_HPP

#include <cmath>
#include <complex>
#include <stdexcept>

#include "arel/dataset.hpp"

namespace arel {

struct dimension_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct insufficient_data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Model parameters: regression coefficients, AR coefficients for the error
 * process e_t = phi_1 e_{t-1} + ... + phi_p e_{t-p} + a_t, and the
 * innovation variance of a_t.
 */
struct ArModelParams {
    Vector beta;
    Vector phi;
    double sigma2 = 1.0;

    Eigen::Index p() const { return phi.size(); }
};

/// True when all roots of 1 - phi_1 z - ... - phi_p z^p lie outside the unit circle.
inline bool is_stationary(const Vector& phi, double margin = 0.0) {
    const Eigen::Index p = phi.size();
    if (p == 0) return true;
    // Companion-matrix eigenvalues are the reciprocal polynomial roots.
    Matrix C = Matrix::Zero(p, p);
    C.row(0) = phi.transpose();
    if (p > 1) C.block(1, 0, p - 1, p - 1).setIdentity();
    Eigen::EigenSolver<Matrix> es(C, /*computeEigenvectors=*/false);
    for (Eigen::Index i = 0; i < p; ++i)
        if (std::abs(es.eigenvalues()(i)) >= 1.0 - margin) return false;
    return true;
}

/**
 * Lag-filtered sample: row t (t = p+1..N in model indexing) carries the
 * filtered response, filtered design row, and the p lagged residuals
 * (e_{t-1}, ..., e_{t-p}).
 */
struct FilteredSample {
    Vector fy;       // (N-p)
    Matrix fX;       // (N-p) x M
    Matrix e_lags;   // (N-p) x p

    Eigen::Index rows() const { return fy.size(); }
};

/// Ordinary least squares via QR on the design matrix.
inline Vector ls_fit(const RegressionDataset& data) {
    if (!full_column_rank(data.X))
        throw singular_design_error("ls_fit: design matrix is rank deficient");
    return data.X.colPivHouseholderQr().solve(data.y);
}

/// Raw residuals e_t = y_t - x_t' beta over the full sample.
inline Vector residual_series(const RegressionDataset& data, const Vector& beta) {
    if (beta.size() != data.m())
        throw dimension_error("residual_series: beta length does not match design");
    return data.y - data.X * beta;
}

/**
 * Apply the lag filter 1 - phi_1 B - ... - phi_p B^p to the response and to
 * every design column, and collect the lagged residual matrix from beta's
 * residual series. Output rows correspond to t = p+1..N.
 */
inline FilteredSample apply_backshift(const RegressionDataset& data, const Vector& phi,
                                      const Vector& beta) {
    const Eigen::Index N = data.n();
    const Eigen::Index p = phi.size();
    if (p < 1) throw dimension_error("apply_backshift: p must be >= 1");
    if (p >= N) throw insufficient_data_error("apply_backshift: p >= N");

    const Vector e = residual_series(data, beta);
    FilteredSample f;
    f.fy = data.y.tail(N - p);
    f.fX = data.X.bottomRows(N - p);
    f.e_lags.resize(N - p, p);
    for (Eigen::Index j = 1; j <= p; ++j) {
        f.fy -= phi(j - 1) * data.y.segment(p - j, N - p);
        f.fX -= phi(j - 1) * data.X.middleRows(p - j, N - p);
        f.e_lags.col(j - 1) = e.segment(p - j, N - p);
    }
    return f;
}

/// Filtered innovations a_t = fy_t - fx_t' beta.
inline Vector filtered_residuals(const FilteredSample& f, const Vector& beta) {
    return f.fy - f.fX * beta;
}

}  // namespace arel

#endif  // AREL_MODEL_HPP
