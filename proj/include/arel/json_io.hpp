#ifndef AREL_JSON_IO_HPP
#define AREL_JSON_IO_HPP

#include <optional>
#include <string>

#include <json.hpp>

#include "arel/cel.hpp"
#include "arel/cml.hpp"
#include "arel/diagnostics.hpp"
#include "arel/sim.hpp"

namespace arel {

using json = nlohmann::json;

inline json to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Vector vector_from_json(const json& a) {
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

/// One estimator invocation, ready for JSON output.
struct FitRecord {
    std::string method;  // "cml", "cel" or "ls"
    ArModelParams params;
    bool converged = true;
    int iterations = 0;
    std::optional<double> loglik;           // cml
    std::optional<double> profile_logel;    // cel
    std::optional<Vector> constraint_residuals;
    std::optional<DiagnosticsReport> diagnostics;
};

inline json to_json(const DiagnosticsReport& d) {
    return json{{"dw", d.dw}, {"acf", to_json(d.acf)}, {"pacf", to_json(d.pacf)}, {"n", d.n}};
}

inline json to_json(const FitRecord& r) {
    json j{{"method", r.method},
           {"estimates",
            {{"beta", to_json(r.params.beta)},
             {"phi", to_json(r.params.phi)},
             {"sigma2", r.params.sigma2}}},
           {"converged", r.converged},
           {"iterations", r.iterations}};
    if (r.loglik) j["loglik"] = *r.loglik;
    if (r.profile_logel) j["profile_logel"] = *r.profile_logel;
    if (r.constraint_residuals) j["constraint_residuals"] = to_json(*r.constraint_residuals);
    if (r.diagnostics) j["diagnostics"] = to_json(*r.diagnostics);
    return j;
}

inline FitRecord fit_record_from_json(const json& j) {
    FitRecord r;
    r.method = j.at("method").get<std::string>();
    r.params.beta = vector_from_json(j.at("estimates").at("beta"));
    r.params.phi = vector_from_json(j.at("estimates").at("phi"));
    r.params.sigma2 = j.at("estimates").at("sigma2").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<int>();
    if (j.contains("loglik")) r.loglik = j["loglik"].get<double>();
    if (j.contains("profile_logel")) r.profile_logel = j["profile_logel"].get<double>();
    if (j.contains("constraint_residuals"))
        r.constraint_residuals = vector_from_json(j["constraint_residuals"]);
    return r;
}

inline json to_json(const MethodSummary& s) {
    return json{{"mean", to_json(s.mean)},
                {"mse", to_json(s.mse)},
                {"bias", to_json(s.bias)},
                {"used", s.used},
                {"failures", s.failures}};
}

inline json to_json(const SimulationReport& r) {
    json methods = json::object();
    for (const auto& [name, s] : r.methods) methods[name] = to_json(s);
    return json{{"methods", methods},
                {"config",
                 {{"n", r.config.n},
                  {"reps", r.config.reps},
                  {"seed", r.config.seed}}}};
}

}  // namespace arel

#endif  // AREL_JSON_IO_HPP
