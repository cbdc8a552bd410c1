// Command-line front end: fit / diagnose / simulate / generate.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "arel/arel.hpp"
#include "arel/json_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

using arel::json;

arel::SimulationConfig parse_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw arel::config_error("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw arel::config_error(path + ": " + e.what());
    }
    arel::SimulationConfig cfg;
    try {
        cfg.n = j.at("n").get<int>();
        cfg.reps = j.value("reps", 1);
        cfg.true_params.beta = arel::vector_from_json(j.at("beta"));
        cfg.true_params.phi = arel::vector_from_json(j.at("phi"));
        cfg.true_params.sigma2 = j.value("sigma2", 1.0);
        cfg.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
        cfg.fixed_design = j.value("fixed_design", false);
        cfg.burn_in = j.value("burn_in", 100);
        cfg.threads = j.value("threads", 0);
        if (j.contains("error_model")) {
            const json& em = j["error_model"];
            const std::string type = em.value("type", "normal");
            if (type == "normal") {
                cfg.error_model.kind = arel::ErrorModel::Kind::normal;
            } else if (type == "mixture") {
                cfg.error_model.kind = arel::ErrorModel::Kind::mixture;
                cfg.error_model.weight = em.at("weight").get<double>();
                cfg.error_model.outlier_mean = em.value("outlier_mean", 0.0);
                cfg.error_model.outlier_var = em.value("outlier_var", 1.0);
            } else {
                throw arel::config_error("error_model.type must be 'normal' or 'mixture'");
            }
        }
    } catch (const json::exception& e) {
        throw arel::config_error(path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void apply_perturbation(arel::RegressionDataset& d, const std::string& mode,
                        std::optional<double> value) {
    const auto last = d.n() - 1;
    if (mode == "scale-last-5") {
        d.y(last) *= 5.0;
    } else if (mode == "last-outlier") {
        if (value) {
            d.y(last) = *value;
        } else {
            // default recipe: push the last response 10 residual standard
            // deviations away from its LS prediction
            const arel::Vector beta = arel::ls_fit(d);
            const arel::Vector e = arel::residual_series(d, beta);
            const double sd = std::sqrt(e.squaredNorm() / static_cast<double>(e.size()));
            d.y(last) = d.X.row(last).dot(beta) + 10.0 * sd;
        }
    } else {
        throw arel::config_error("unknown --perturb mode: " + mode);
    }
}

void write_acf_csv(const std::string& path, const arel::DiagnosticsReport& rep,
                   const arel::Vector& residuals) {
    std::ofstream out(path);
    out << "lag,acf,pacf\n";
    for (Eigen::Index k = 0; k < rep.acf.size(); ++k)
        out << (k + 1) << ',' << rep.acf(k) << ',' << rep.pacf(k) << '\n';
    std::ofstream qq(path + ".qq.csv");
    qq << "theoretical,sample\n";
    for (const auto& [t, s] : arel::qq_pairs(residuals)) qq << t << ',' << s << '\n';
}

int run_fit(const std::string& data_path, int p, const std::string& method, double tol,
            int max_iter, const std::string& perturb, std::optional<double> outlier_value,
            bool no_intercept) {
    arel::RegressionDataset d = arel::load_csv(data_path, !no_intercept);
    if (!perturb.empty()) apply_perturbation(d, perturb, outlier_value);

    arel::FitRecord rec;
    rec.method = method;
    if (method == "ls") {
        rec.params.beta = arel::ls_fit(d);
        rec.params.phi = arel::Vector::Zero(0);
        const arel::Vector e = arel::residual_series(d, rec.params.beta);
        rec.params.sigma2 = e.squaredNorm() / static_cast<double>(e.size());
        rec.iterations = 1;
    } else if (method == "cml") {
        arel::CmlFitResult f = arel::cml_fit(d, p, tol > 0 ? tol : 1e-8,
                                             max_iter > 0 ? max_iter : 500);
        rec.params = f.params;
        rec.converged = f.converged;
        rec.iterations = f.iterations;
        rec.loglik = f.conditional_loglik;
    } else {
        arel::CelOptions opts;
        if (tol > 0) opts.tol = tol;
        if (max_iter > 0) opts.max_outer = max_iter;
        arel::CelFitResult f = arel::cel_fit(d, p, opts);
        rec.params = f.params;
        rec.converged = f.converged;
        rec.iterations = f.outer_iterations;
        rec.profile_logel = f.profile_logel;
        rec.constraint_residuals = f.lagrange.constraint_residuals;
    }
    if (!rec.params.phi.size() || arel::is_stationary(rec.params.phi)) {
        // fine
    } else {
        std::cerr << "warning: fitted AR coefficients are non-stationary\n";
    }
    std::cout << arel::to_json(rec).dump(2) << std::endl;
    return rec.converged ? kExitOk : kExitNumeric;
}

int run_diagnose(const std::string& data_path, int max_lag, const std::string& plot_csv,
                 bool no_intercept) {
    arel::RegressionDataset d = arel::load_csv(data_path, !no_intercept);
    const arel::Vector beta = arel::ls_fit(d);
    const arel::Vector e = arel::residual_series(d, beta);
    const Eigen::Index lag = std::min<Eigen::Index>(max_lag, d.n() - 1);
    arel::DiagnosticsReport rep = arel::residual_diagnostics(e, lag);
    json j = arel::to_json(rep);
    j["ls_beta"] = arel::to_json(beta);
    std::cout << j.dump(2) << std::endl;
    if (!plot_csv.empty()) write_acf_csv(plot_csv, rep, e);
    return kExitOk;
}

int run_simulate(const std::string& config_path, const std::string& out_dir) {
    arel::SimulationConfig cfg = parse_sim_config(config_path);
    arel::SimulationReport rep = arel::run_study(cfg);
    json j = arel::to_json(rep);
    std::cout << j.dump(2) << std::endl;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream jf(out_dir + "/report.json");
        jf << j.dump(2) << '\n';
        std::ofstream cf(out_dir + "/report.csv");
        cf << "method,parameter,mean,mse,bias\n";
        const auto k = cfg.true_params.beta.size() + cfg.true_params.p() + 1;
        for (const auto& [name, s] : rep.methods)
            for (Eigen::Index i = 0; i < k; ++i) {
                std::string pname;
                if (i < cfg.true_params.beta.size())
                    pname = "beta" + std::to_string(i + 1);
                else if (i < cfg.true_params.beta.size() + cfg.true_params.p())
                    pname = "phi" + std::to_string(i - cfg.true_params.beta.size() + 1);
                else
                    pname = "sigma2";
                cf << name << ',' << pname << ',' << s.mean(i) << ',' << s.mse(i) << ','
                   << s.bias(i) << '\n';
            }
    }
    return kExitOk;
}

int run_generate(const std::string& config_path, const std::string& out_csv) {
    arel::SimulationConfig cfg = parse_sim_config(config_path);
    arel::RegressionDataset d = arel::generate_dataset(cfg, 0);
    std::ofstream out(out_csv);
    if (!out) throw arel::config_error("cannot write " + out_csv);
    out << "y";
    for (Eigen::Index j = 0; j < d.m(); ++j) out << ",x" << (j + 1);
    out << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        out << d.y(i);
        for (Eigen::Index j = 0; j < d.m(); ++j) out << ',' << d.X(i, j);
        out << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regression with AR(p) errors: conditional ML and conditional EL estimation"};
    app.require_subcommand(1);

    std::string data_path, method = "cml", perturb, config_path, out_csv, out_dir, plot_csv;
    int p = 1, max_iter = 0, max_lag = 10;
    double tol = 0.0;
    std::optional<double> outlier_value;
    bool no_intercept = false;

    auto* fit = app.add_subcommand("fit", "Fit the model to a CSV dataset");
    fit->add_option("--data", data_path, "input CSV (header row; column 'y' is the response)")
        ->required();
    fit->add_option("--p", p, "autoregressive order")->check(CLI::PositiveNumber);
    fit->add_option("--method", method, "cml, cel or ls")
        ->check(CLI::IsMember({"cml", "cel", "ls"}));
    fit->add_option("--tol", tol, "convergence tolerance");
    fit->add_option("--max-iter", max_iter, "iteration limit");
    fit->add_option("--perturb", perturb, "last-outlier or scale-last-5");
    double ov = 0.0;
    auto* ov_opt = fit->add_option("--outlier-value", ov, "replacement value for last-outlier");
    fit->add_flag("--no-intercept", no_intercept, "do not prepend a ones column");

    auto* diag = app.add_subcommand("diagnose", "LS residual diagnostics");
    diag->add_option("--data", data_path, "input CSV")->required();
    diag->add_option("--max-lag", max_lag, "largest acf/pacf lag");
    diag->add_option("--plot-csv", plot_csv, "also write acf/pacf (and qq) CSV here");
    diag->add_flag("--no-intercept", no_intercept, "do not prepend a ones column");

    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo study from a JSON config");
    sim->add_option("--config", config_path, "JSON config file")->required();
    sim->add_option("--out-dir", out_dir, "directory for report.json/report.csv");

    auto* gen = app.add_subcommand("generate", "Write one synthetic dataset as CSV");
    gen->add_option("--config", config_path, "JSON config file")->required();
    gen->add_option("--out", out_csv, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);
    if (ov_opt->count() > 0) outlier_value = ov;

    try {
        if (fit->parsed())
            return run_fit(data_path, p, method, tol, max_iter, perturb, outlier_value,
                           no_intercept);
        if (diag->parsed()) return run_diagnose(data_path, max_lag, plot_csv, no_intercept);
        if (sim->parsed()) return run_simulate(config_path, out_dir);
        if (gen->parsed()) return run_generate(config_path, out_csv);
    } catch (const arel::csv_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const arel::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitInput;
    } catch (const arel::singular_design_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}
