#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"

using namespace arel;
using arel::testing::make_vector;
using arel::testing::random_dataset;

TEST_CASE("build_autocov on degenerate series") {
    Vector z = Vector::Zero(6);
    AutocovMatrices a = build_autocov(z, 1);
    REQUIRE(a.R(0, 0) == 0.0);
    REQUIRE(a.R0(0) == 0.0);

    Vector ones = Vector::Ones(4);
    AutocovMatrices b = build_autocov(ones, 1);
    REQUIRE(b.R(0, 0) == Catch::Approx(3.0));
    REQUIRE(b.R0(0) == Catch::Approx(3.0));
}

TEST_CASE("build_autocov matches a brute-force double loop") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> norm;
    Vector e(8);
    for (int i = 0; i < 8; ++i) e(i) = norm(rng);
    const int p = 2, N = 8;
    AutocovMatrices a = build_autocov(e, p);
    for (int j = 1; j <= p; ++j) {
        double r0 = 0.0;
        for (int t = p; t < N; ++t) r0 += e(t) * e(t - j);
        REQUIRE(a.R0(j - 1) == Catch::Approx(r0).margin(1e-14));
        for (int k = 1; k <= p; ++k) {
            double r = 0.0;
            for (int t = p; t < N; ++t) r += e(t - j) * e(t - k);
            REQUIRE(a.R(j - 1, k - 1) == Catch::Approx(r).margin(1e-14));
        }
    }
    REQUIRE((a.R - a.R.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cml_beta_update reductions") {
    RegressionDataset d = random_dataset(9, 14, 2, make_vector({0.5}));
    Vector beta = make_vector({1.0, -1.0});
    SECTION("zero phi reduces to trailing-rows LS") {
        FilteredSample f = apply_backshift(d, Vector::Zero(1), beta);
        Vector b1 = cml_beta_update(f);
        RegressionDataset tail;
        tail.y = d.y.tail(13);
        tail.X = d.X.bottomRows(13);
        Vector b2 = ls_fit(tail);
        REQUIRE((b1 - b2).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("noiseless filtered system is exact") {
        Vector phi = make_vector({0.6});
        d.y = d.X * beta;  // so the filtered system is exact at beta too
        FilteredSample f = apply_backshift(d, phi, beta);
        REQUIRE((cml_beta_update(f) - beta).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("matches a normal-equation oracle") {
        Vector phi = make_vector({0.3});
        FilteredSample f = apply_backshift(d, phi, beta);
        Vector b1 = cml_beta_update(f);
        Vector b2 = (f.fX.transpose() * f.fX).ldlt().solve(f.fX.transpose() * f.fy);
        REQUIRE((b1 - b2).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("cml_sigma2_update") {
    RegressionDataset d = random_dataset(10, 10, 1, make_vector({0.5}));
    Vector beta = make_vector({2.0});
    SECTION("perfect fit gives zero") {
        d.y = d.X * beta;
        FilteredSample f = apply_backshift(d, Vector::Zero(1), beta);
        REQUIRE(cml_sigma2_update(f, beta) == Catch::Approx(0.0).margin(1e-20));
    }
    SECTION("hand value") {
        FilteredSample f;
        f.fy = make_vector({1.0, -1.0});
        f.fX = Matrix::Zero(2, 1);
        f.e_lags = Matrix::Zero(2, 1);
        REQUIRE(cml_sigma2_update(f, make_vector({0.0})) == Catch::Approx(1.0));
    }
    SECTION("matches an explicit sum oracle") {
        Vector phi = make_vector({0.4});
        FilteredSample f = apply_backshift(d, phi, beta);
        double s = 0.0;
        for (Eigen::Index t = 0; t < f.rows(); ++t) {
            const double a = f.fy(t) - f.fX.row(t).dot(beta);
            s += a * a;
        }
        REQUIRE(cml_sigma2_update(f, beta) ==
                Catch::Approx(s / static_cast<double>(f.rows())));
    }
    SECTION("invariant under predictor permutation") {
        RegressionDataset d2 = random_dataset(12, 12, 3, make_vector({0.2}));
        Vector b = make_vector({1.0, 2.0, 3.0});
        Vector phi = make_vector({0.5});
        double s1 = cml_sigma2_update(apply_backshift(d2, phi, b), b);
        RegressionDataset d3 = d2;
        d3.X.col(0).swap(d3.X.col(2));
        Vector b2 = make_vector({3.0, 2.0, 1.0});
        double s2 = cml_sigma2_update(apply_backshift(d3, phi, b2), b2);
        REQUIRE(s1 == Catch::Approx(s2).margin(1e-14));
    }
}

TEST_CASE("cml_phi_update") {
    SECTION("white noise gives small phi") {
        std::mt19937_64 rng(77);
        std::normal_distribution<double> norm;
        const int N = 4000;
        Vector e(N);
        for (int i = 0; i < N; ++i) e(i) = norm(rng);
        Vector phi = cml_phi_update(e, 1);
        REQUIRE(std::abs(phi(0)) < 3.0 / std::sqrt(static_cast<double>(N)));
    }
    SECTION("deterministic AR(1) decay is recovered exactly") {
        const double c = 0.73;
        Vector e(12);
        e(0) = 2.0;
        for (int t = 1; t < 12; ++t) e(t) = c * e(t - 1);
        Vector phi = cml_phi_update(e, 1);
        REQUIRE(phi(0) == Catch::Approx(c).margin(1e-12));
    }
    SECTION("p=2 matches a hand-coded Cramer oracle") {
        std::mt19937_64 rng(13);
        std::normal_distribution<double> norm;
        Vector e(15);
        for (int i = 0; i < 15; ++i) e(i) = norm(rng);
        AutocovMatrices a = build_autocov(e, 2);
        const double det = a.R(0, 0) * a.R(1, 1) - a.R(0, 1) * a.R(1, 0);
        const double p1 = (a.R0(0) * a.R(1, 1) - a.R(0, 1) * a.R0(1)) / det;
        const double p2 = (a.R(0, 0) * a.R0(1) - a.R0(0) * a.R(1, 0)) / det;
        Vector phi = cml_phi_update(e, 2);
        REQUIRE(phi(0) == Catch::Approx(p1).margin(1e-10));
        REQUIRE(phi(1) == Catch::Approx(p2).margin(1e-10));
    }
    SECTION("zero residuals are rejected") {
        REQUIRE_THROWS_AS(cml_phi_update(Vector::Zero(8), 1), degenerate_residual_error);
    }
}

TEST_CASE("cml_fit agrees with a dense grid search on a tiny instance") {
    RegressionDataset d = random_dataset(3, 12, 1, make_vector({0.5}), 0.5);
    CmlFitResult fit = cml_fit(d, 1);
    REQUIRE(fit.converged);

    // concentrated conditional loglik over (beta, phi); sigma2 profiled out
    auto value = [&](double beta, double phi) {
        FilteredSample f = apply_backshift(d, make_vector({phi}), make_vector({beta}));
        Vector a = f.fy - f.fX * beta;
        const double np = static_cast<double>(a.size());
        const double s2 = a.squaredNorm() / np;
        return -0.5 * np * std::log(s2) - np / 2.0;
    };
    double best_b = 0, best_p = 0, best_v = -1e300;
    const double db = 0.02, dp = 0.02;
    for (double b = fit.params.beta(0) - 1.0; b <= fit.params.beta(0) + 1.0; b += db)
        for (double ph = -1.2; ph <= 1.2; ph += dp) {
            const double v = value(b, ph);
            if (v > best_v) { best_v = v; best_b = b; best_p = ph; }
        }
    REQUIRE(std::abs(best_b - fit.params.beta(0)) <= db);
    REQUIRE(std::abs(best_p - fit.params.phi(0)) <= dp);
}

TEST_CASE("cml_fit from truth on near-noiseless data converges fast") {
    Vector beta = make_vector({1.0, 3.0});
    std::mt19937_64 rng(8);
    std::normal_distribution<double> norm;
    RegressionDataset d;
    d.X.resize(30, 2);
    d.y.resize(30);
    // errors: a decaying AR(1) transient plus 1e-9-scale innovations
    double e = 2.0;
    for (int t = 0; t < 30; ++t) {
        d.X(t, 0) = norm(rng);
        d.X(t, 1) = norm(rng);
        if (t > 0) e = 0.5 * e + 1e-9 * norm(rng);
        d.y(t) = d.X.row(t).dot(beta) + e;
    }
    ArModelParams init;
    init.beta = beta;
    init.phi = make_vector({0.5});
    init.sigma2 = 1e-18;
    CmlFitResult fit = cml_fit(d, 1, init, /*tol=*/1e-6);
    REQUIRE(fit.converged);
    REQUIRE(fit.iterations <= 3);
    REQUIRE((fit.params.beta - beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("converged fit satisfies its estimating equations") {
    RegressionDataset d = random_dataset(21, 60, 2, make_vector({0.6, -0.1}));
    const double tol = 1e-8;
    CmlFitResult fit = cml_fit(d, 2, tol);
    REQUIRE(fit.converged);
    FilteredSample f = apply_backshift(d, fit.params.phi, fit.params.beta);
    Vector beta2 = cml_beta_update(f);
    Vector e = residual_series(d, fit.params.beta);
    Vector phi2 = cml_phi_update(e, 2);
    double s22 = cml_sigma2_update(f, fit.params.beta);
    REQUIRE((beta2 - fit.params.beta).cwiseAbs().maxCoeff() < 10 * tol);
    REQUIRE((phi2 - fit.params.phi).cwiseAbs().maxCoeff() < 10 * tol);
    REQUIRE(std::abs(s22 - fit.params.sigma2) < 10 * tol);
}

TEST_CASE("conditional loglik is non-decreasing along the iteration") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        RegressionDataset d = random_dataset(seed, 40, 2, make_vector({0.7, -0.2}));
        ArModelParams cur = ls_initial_params(d, 2);
        double prev = conditional_loglik(d, cur);
        for (int it = 0; it < 30; ++it) {
            FilteredSample f = apply_backshift(d, cur.phi, cur.beta);
            cur.beta = cml_beta_update(f);
            Vector e = residual_series(d, cur.beta);
            cur.phi = cml_phi_update(e, 2);
            f = apply_backshift(d, cur.phi, cur.beta);
            cur.sigma2 = cml_sigma2_update(f, cur.beta);
            const double v = conditional_loglik(d, cur);
            REQUIRE(v >= prev - 1e-8 * std::abs(prev));
            prev = v;
        }
    }
}

TEST_CASE("replication means at n=100 match the reference study") {
    SimulationConfig cfg;
    cfg.n = 100;
    cfg.reps = 200;
    cfg.seed = 20240815;
    cfg.methods = {"cml"};
    cfg.true_params.beta = make_vector({1.0, 3.0, 5.0});
    cfg.true_params.phi = make_vector({0.8, -0.2});
    cfg.true_params.sigma2 = 1.0;
    SimulationReport rep = run_study(cfg);
    const MethodSummary& s = rep.methods.at("cml");
    // reference means: beta (0.99932, 2.9978, 4.99913), phi (0.79587, -0.21079),
    // sigma2 0.96983; widened for 200 replications
    REQUIRE(s.mean(0) == Catch::Approx(1.0).margin(0.05));
    REQUIRE(s.mean(1) == Catch::Approx(3.0).margin(0.05));
    REQUIRE(s.mean(2) == Catch::Approx(5.0).margin(0.05));
    REQUIRE(s.mean(3) == Catch::Approx(0.796).margin(0.06));
    REQUIRE(s.mean(4) == Catch::Approx(-0.211).margin(0.06));
    REQUIRE(s.mean(5) == Catch::Approx(0.97).margin(0.08));
}
