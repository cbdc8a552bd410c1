#ifndef AREL_CEL_HPP
#define AREL_CEL_HPP

#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "arel/cml.hpp"
#include "arel/el.hpp"

namespace arel {

/**
 * Stacked estimating functions for the filtered model at the given
 * parameters. Row t = [ a_t * fx_t , a_t * (e_{t-1},...,e_{t-p}) , a_t^2 - sigma2 ]
 * where a_t is the filtered residual and e the raw residual series. When
 * e_for_lags is given, the lagged residuals are taken from that series
 * instead of being recomputed from the current beta.
 */
inline EstimatingFunctionMatrix build_psi(const RegressionDataset& data,
                                          const ArModelParams& params,
                                          const Vector* e_for_lags = nullptr) {
    FilteredSample f = apply_backshift(data, params.phi, params.beta);
    const auto N = data.n();
    const auto p = params.p();
    if (e_for_lags)
        for (Eigen::Index j = 1; j <= p; ++j)
            f.e_lags.col(j - 1) = e_for_lags->segment(p - j, N - p);
    const Vector a = filtered_residuals(f, params.beta);
    const auto M = data.m();
    EstimatingFunctionMatrix em;
    em.G.resize(N - p, M + p + 1);
    em.G.leftCols(M) = f.fX.array().colwise() * a.array();
    em.G.middleCols(M, p) = f.e_lags.array().colwise() * a.array();
    em.G.col(M + p) = a.array().square() - params.sigma2;
    return em;
}

/// Gradient/Hessian of the fixed-lambda criterion with respect to each parameter block.
struct CelBlockDerivs {
    Vector grad_beta;
    Matrix hess_beta;
    Vector grad_phi;
    Matrix hess_phi;
    double grad_sigma2 = 0.0;
    double hess_sigma2 = 0.0;
};

/**
 * Analytic derivatives of l(lambda fixed; beta, phi, sigma2) = -sum log D_t,
 * D_t = n + lambda' Psi_t, blockwise in beta, phi and sigma2.
 */
inline CelBlockDerivs cel_derivs(const RegressionDataset& data, const ArModelParams& params,
                                 const Vector& lambda, const Vector* e_for_lags = nullptr) {
    const auto N = data.n();
    const auto M = data.m();
    const auto p = params.p();
    FilteredSample f = apply_backshift(data, params.phi, params.beta);
    if (e_for_lags)
        for (Eigen::Index j = 1; j <= p; ++j)
            f.e_lags.col(j - 1) = e_for_lags->segment(p - j, N - p);
    const Vector a = filtered_residuals(f, params.beta);
    const double n = static_cast<double>(N - p);

    EstimatingFunctionMatrix em;
    em.G.resize(N - p, M + p + 1);
    em.G.leftCols(M) = f.fX.array().colwise() * a.array();
    em.G.middleCols(M, p) = f.e_lags.array().colwise() * a.array();
    em.G.col(M + p) = a.array().square() - params.sigma2;

    const Vector D = (em.G * lambda).array() + n;
    const Vector lam1 = lambda.head(M);
    const Vector lam2 = lambda.segment(M, p);
    const double lam3 = lambda(M + p);
    // when the lagged residuals are frozen they carry no beta dependence
    const double lag_dep = e_for_lags ? 0.0 : 1.0;

    // x_{t-j} rows for t = p+1..N
    std::vector<Matrix> Xlag;
    Xlag.reserve(p);
    for (Eigen::Index j = 1; j <= p; ++j) Xlag.push_back(data.X.middleRows(p - j, N - p));

    CelBlockDerivs d;

    // beta block: rows u_t = d(lambda' Psi_t)/d beta
    // dPsi1/db = -fx fx'; dPsi2_j/db = -fx e_{t-j} - a x_{t-j}; dPsi3/db = -2 a fx
    Matrix gb = -(f.fX.array().colwise() * (f.fX * lam1).array()).matrix();
    for (Eigen::Index j = 0; j < p; ++j)
        gb += lam2(j) * (-(f.fX.array().colwise() * f.e_lags.col(j).array()).matrix() -
                         lag_dep * (Xlag[j].array().colwise() * a.array()).matrix());
    gb -= 2.0 * lam3 * (f.fX.array().colwise() * a.array()).matrix();
    {
        const Matrix gbD = (gb.array().colwise() / D.array()).matrix();
        d.grad_beta = -gbD.colwise().sum();
        Matrix Hb = gbD.transpose() * gbD;
        // lambda' d2Psi/db2: Psi2_j gives fx x_{t-j}' + x_{t-j} fx'; Psi3 gives 2 fx fx'
        for (Eigen::Index j = 0; j < p; ++j) {
            const Matrix A = f.fX.transpose() *
                             (Xlag[j].array().colwise() / D.array()).matrix();
            Hb -= lag_dep * lam2(j) * (A + A.transpose());
        }
        Hb -= 2.0 * lam3 *
              (f.fX.array().colwise() / D.array()).matrix().transpose() * f.fX;
        d.hess_beta = Hb;
    }

    // phi block: da/dphi_j = -e_{t-j} at the current beta, dfx/dphi_j = -x_{t-j}
    Matrix gp(N - p, p);
    const Vector e_raw = residual_series(data, params.beta);
    Matrix elag_raw(N - p, p);
    for (Eigen::Index j = 1; j <= p; ++j)
        elag_raw.col(j - 1) = e_raw.segment(p - j, N - p);
    for (Eigen::Index j = 0; j < p; ++j)
        gp.col(j) = (-(elag_raw.col(j).array() * (f.fX * lam1).array()) -
                     a.array() * (Xlag[j] * lam1).array() -
                     elag_raw.col(j).array() * (f.e_lags * lam2).array() -
                     2.0 * lam3 * a.array() * elag_raw.col(j).array())
                        .matrix();
    {
        const Matrix gpD = (gp.array().colwise() / D.array()).matrix();
        d.grad_phi = -gpD.colwise().sum();
        Matrix Hp = gpD.transpose() * gpD;
        // d2Psi1/dphi_j dphi_k = e_{t-j} x_{t-k}' + e_{t-k} x_{t-j}'; d2Psi3 = 2 e_{t-j} e_{t-k}
        for (Eigen::Index j = 0; j < p; ++j)
            for (Eigen::Index k = 0; k < p; ++k) {
                const double s1 =
                    ((elag_raw.col(j).array() * (Xlag[k] * lam1).array() +
                      elag_raw.col(k).array() * (Xlag[j] * lam1).array()) /
                     D.array())
                        .sum();
                const double s3 =
                    2.0 * lam3 *
                    (elag_raw.col(j).array() * elag_raw.col(k).array() / D.array()).sum();
                Hp(j, k) -= s1 + s3;
            }
        d.hess_phi = Hp;
    }

    // sigma2 block: d(lambda' Psi_t)/d sigma2 = -lam3, second derivative zero
    d.grad_sigma2 = lam3 * D.cwiseInverse().sum();
    d.hess_sigma2 = lam3 * lam3 * D.array().square().inverse().sum();
    return d;
}

struct CelOptions {
    double tol = 1e-6;          // max-norm of the stacked parameter change
    int max_outer = 300;
    ElSolverOptions solver;     // inner lambda solver settings
    std::array<char, 3> order = {'p', 'b', 's'};  // phi, beta, sigma2
    bool recompute_lagged_residuals = true;       // rebuild e lags from current beta
    int max_backtrack = 40;
};

struct CelFitResult {
    ArModelParams params;
    LagrangeState lagrange;
    double profile_logel = -std::numeric_limits<double>::infinity();
    int outer_iterations = 0;
    bool converged = false;
};

/**
 * Profile criterion: minimize the inner problem over lambda at fixed
 * parameters. Returns -infinity when no feasible multipliers exist.
 */
inline std::pair<double, LagrangeState> profile_logel(const RegressionDataset& data,
                                                      const ArModelParams& params,
                                                      const Vector* warm_lambda = nullptr,
                                                      const ElSolverOptions& opts = {},
                                                      const Vector* e_for_lags = nullptr) {
    if (params.sigma2 <= 1e-12)
        return {-std::numeric_limits<double>::infinity(), LagrangeState{}};
    const EstimatingFunctionMatrix em = build_psi(data, params, e_for_lags);
    const double n = static_cast<double>(em.n_obs());
    const Vector* init = warm_lambda;
    if (init) {
        const Vector D = (em.G * (*init)).array() + n;
        if (!((D.array() > opts.effective_bound()).all())) init = nullptr;
    }
    LagrangeState st = solve_lambda(em, init, opts);
    if (!st.converged && init) st = solve_lambda(em, nullptr, opts);
    if (!st.converged) return {-std::numeric_limits<double>::infinity(), st};
    return {st.inner_objective, st};
}

/**
 * Maximize the profile criterion over (beta, phi, sigma2) by block updates.
 * Each block takes a half-damped Newton step when the fixed-lambda Hessian
 * is negative definite, otherwise an ascent step along the gradient with a
 * curvature-informed length. Trial steps are halved until the profile value
 * (multipliers re-solved, warm-started) does not decrease, which keeps every
 * iterate feasible and the criterion monotone.
 */
inline CelFitResult cel_fit(const RegressionDataset& data, Eigen::Index p,
                            const ArModelParams& init, const CelOptions& opts = {}) {
    if (data.n() < data.m() + p + 2)
        throw insufficient_data_error("cel_fit: need N >= M + p + 2");
    CelFitResult r;
    r.params = init;

    // optionally freeze the lagged residuals at the initial beta
    Vector e_frozen;
    const Vector* e_ptr = nullptr;
    if (!opts.recompute_lagged_residuals) {
        e_frozen = residual_series(data, init.beta);
        e_ptr = &e_frozen;
    }

    auto [val, lag] = profile_logel(data, r.params, nullptr, opts.solver, e_ptr);
    // An LS start can leave zero outside the convex hull of the constraint
    // rows (common at small N). Advance the start along the conditional-ML
    // iteration until the inner problem becomes feasible.
    for (int k = 1; !std::isfinite(val) && k <= 50; ++k) {
        CmlFitResult adv = cml_fit(data, p, init, 1e-8, k);
        r.params = adv.params;
        if (!opts.recompute_lagged_residuals) {
            e_frozen = residual_series(data, r.params.beta);
        }
        std::tie(val, lag) = profile_logel(data, r.params, nullptr, opts.solver, e_ptr);
        if (adv.converged) break;
    }
    r.lagrange = lag;
    if (!std::isfinite(val)) return r;  // infeasible start

    for (int it = 1; it <= opts.max_outer; ++it) {
        r.outer_iterations = it;
        const Vector beta_old = r.params.beta;
        const Vector phi_old = r.params.phi;
        const double s2_old = r.params.sigma2;

        for (char blk : opts.order) {
            const CelBlockDerivs d = cel_derivs(data, r.params, r.lagrange.lambda, e_ptr);
            Vector g;
            Matrix H;
            if (blk == 'p') {
                g = d.grad_phi;
                H = d.hess_phi;
            } else if (blk == 'b') {
                g = d.grad_beta;
                H = d.hess_beta;
            } else {
                g = Vector::Constant(1, d.grad_sigma2);
                H = Matrix::Constant(1, 1, d.hess_sigma2);
            }
            const double gn = g.norm();
            if (gn < 1e-12) continue;

            Vector dir;
            Eigen::SelfAdjointEigenSolver<Matrix> es(H);
            if (es.eigenvalues().maxCoeff() < -1e-12) {
                dir = -0.5 * H.ldlt().solve(g);
            } else {
                // ascent direction with a curvature-informed trial length
                const double curv = std::abs(g.dot(H * g)) / (gn * gn);
                double alpha0 = 0.5 * gn / std::max(curv, 1e-10);
                double cap;
                if (blk == 'p')
                    cap = 1.0 + r.params.phi.cwiseAbs().maxCoeff();
                else if (blk == 'b')
                    cap = 1.0 + r.params.beta.cwiseAbs().maxCoeff();
                else
                    cap = 1.0 + std::abs(r.params.sigma2);
                alpha0 = std::min(alpha0, cap / gn);
                dir = alpha0 * g;
            }

            double s = 1.0;
            for (int k = 0; k < opts.max_backtrack; ++k) {
                ArModelParams cand = r.params;
                if (blk == 'p')
                    cand.phi += s * dir;
                else if (blk == 'b')
                    cand.beta += s * dir;
                else {
                    cand.sigma2 += s * dir(0);
                    if (cand.sigma2 <= 1e-12) {
                        s *= 0.5;
                        continue;
                    }
                }
                auto [v2, l2] = profile_logel(data, cand, &r.lagrange.lambda, opts.solver, e_ptr);
                if (v2 >= val) {
                    r.params = cand;
                    val = v2;
                    r.lagrange = l2;
                    break;
                }
                s *= 0.5;
            }
        }

        double delta = (r.params.beta - beta_old).cwiseAbs().maxCoeff();
        delta = std::max(delta, (r.params.phi - phi_old).cwiseAbs().maxCoeff());
        delta = std::max(delta, std::abs(r.params.sigma2 - s2_old));
        if (delta < opts.tol) {
            r.converged = true;
            break;
        }
    }
    r.profile_logel = val;
    return r;
}

inline CelFitResult cel_fit(const RegressionDataset& data, Eigen::Index p,
                            const CelOptions& opts = {}) {
    return cel_fit(data, p, ls_initial_params(data, p), opts);
}

}  // namespace arel

#endif  // AREL_CEL_HPP
