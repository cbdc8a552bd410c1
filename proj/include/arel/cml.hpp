#ifndef AREL_CML_HPP
#define AREL_CML_HPP

#include <cmath>

#include "arel/model.hpp"

namespace arel {

struct degenerate_residual_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uncentered lagged cross products of a residual series.
struct AutocovMatrices {
    Matrix R;    // p x p, R(j,k) = sum_{t>p} e_{t-j} e_{t-k}
    Vector R0;   // p,     R0(j)  = sum_{t>p} e_t e_{t-j}
};

inline AutocovMatrices build_autocov(const Vector& e, Eigen::Index p) {
    const Eigen::Index N = e.size();
    if (N <= 2 * p) throw insufficient_data_error("build_autocov: need N > 2p");
    AutocovMatrices a;
    a.R = Matrix::Zero(p, p);
    a.R0 = Vector::Zero(p);
    for (Eigen::Index j = 1; j <= p; ++j) {
        a.R0(j - 1) = e.segment(p, N - p).dot(e.segment(p - j, N - p));
        for (Eigen::Index k = j; k <= p; ++k) {
            const double v = e.segment(p - j, N - p).dot(e.segment(p - k, N - p));
            a.R(j - 1, k - 1) = v;
            a.R(k - 1, j - 1) = v;
        }
    }
    return a;
}

/// Generalized LS step on the filtered sample.
inline Vector cml_beta_update(const FilteredSample& f) {
    if (!full_column_rank(f.fX))
        throw singular_design_error("cml_beta_update: filtered design is rank deficient");
    return f.fX.colPivHouseholderQr().solve(f.fy);
}

inline double cml_sigma2_update(const FilteredSample& f, const Vector& beta) {
    const Vector a = filtered_residuals(f, beta);
    return a.squaredNorm() / static_cast<double>(a.size());
}

/**
 * AR coefficient step: solve R phi = R0 on the residual cross products.
 * A near-singular R is ridged once by 1e-10 tr(R)/p before failing.
 */
inline Vector cml_phi_update(const Vector& e, Eigen::Index p) {
    AutocovMatrices a = build_autocov(e, p);
    Eigen::FullPivLU<Matrix> lu(a.R);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
        const double ridge = 1e-10 * a.R.trace() / static_cast<double>(p);
        Matrix Rr = a.R + ridge * Matrix::Identity(p, p);
        Eigen::FullPivLU<Matrix> lur(Rr);
        lur.setThreshold(1e-12);
        if (!lur.isInvertible())
            throw degenerate_residual_error("cml_phi_update: singular lag matrix");
        return lur.solve(a.R0);
    }
    return lu.solve(a.R0);
}

/// Conditional log-likelihood with the additive constant dropped.
inline double conditional_loglik(const RegressionDataset& data, const ArModelParams& params) {
    const FilteredSample f = apply_backshift(data, params.phi, params.beta);
    const Vector a = filtered_residuals(f, params.beta);
    const double np = static_cast<double>(a.size());
    return -0.5 * np * std::log(params.sigma2) - a.squaredNorm() / (2.0 * params.sigma2);
}

struct CmlFitResult {
    ArModelParams params;
    int iterations = 0;
    bool converged = false;
    double conditional_loglik = 0.0;
};

/// Default initial values: LS beta, lag-regression phi on LS residuals, residual variance.
inline ArModelParams ls_initial_params(const RegressionDataset& data, Eigen::Index p) {
    ArModelParams init;
    init.beta = ls_fit(data);
    const Vector e = residual_series(data, init.beta);
    init.phi = cml_phi_update(e, p);
    init.sigma2 = e.squaredNorm() / static_cast<double>(e.size());
    return init;
}

/**
 * Conditional maximum likelihood by iterative reweighting: alternate the
 * filtered-GLS beta step, the lag-regression phi step, and the variance
 * step until the stacked parameter change drops below tol.
 */
inline CmlFitResult cml_fit(const RegressionDataset& data, Eigen::Index p,
                            const ArModelParams& init, double tol = 1e-8,
                            int max_iter = 500) {
    if (data.n() < data.m() + p + 2)
        throw insufficient_data_error("cml_fit: need N >= M + p + 2");
    CmlFitResult r;
    r.params = init;
    for (int it = 1; it <= max_iter; ++it) {
        const Vector beta_old = r.params.beta;
        const Vector phi_old = r.params.phi;
        const double s2_old = r.params.sigma2;

        FilteredSample f = apply_backshift(data, r.params.phi, r.params.beta);
        r.params.beta = cml_beta_update(f);
        const Vector e = residual_series(data, r.params.beta);
        r.params.phi = cml_phi_update(e, p);
        f = apply_backshift(data, r.params.phi, r.params.beta);
        r.params.sigma2 = cml_sigma2_update(f, r.params.beta);

        r.iterations = it;
        double delta = (r.params.beta - beta_old).cwiseAbs().maxCoeff();
        delta = std::max(delta, (r.params.phi - phi_old).cwiseAbs().maxCoeff());
        delta = std::max(delta, std::abs(r.params.sigma2 - s2_old));
        if (delta < tol) {
            r.converged = true;
            break;
        }
    }
    r.conditional_loglik = conditional_loglik(data, r.params);
    return r;
}

inline CmlFitResult cml_fit(const RegressionDataset& data, Eigen::Index p,
                            double tol = 1e-8, int max_iter = 500) {
    return cml_fit(data, p, ls_initial_params(data, p), tol, max_iter);
}

}  // namespace arel

#endif  // AREL_CML_HPP
