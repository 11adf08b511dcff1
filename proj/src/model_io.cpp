#include "spfkit/model_io.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "spfkit/errors.hpp"

namespace spfkit {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    int i = 0;
    for (const auto& x : arr) v(i++) = x.is_null() ? std::nan("") : x.get<double>();
    return v;
}

}  // namespace

json spec_to_json(const ModelSpec& spec) {
    return json{{"family", family_name(spec.family)},
                {"form", spec.form},
                {"covariates", spec.covariates},
                {"random", spec.random},
                {"draws", spec.draws},
                {"skip", spec.skip},
                {"seed", spec.seed},
                {"tol", spec.tol},
                {"max_iter", spec.max_iter},
                {"response", spec.response == Response::total ? "total" : "per_year"}};
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec spec;
    if (j.contains("family")) spec.family = family_from_name(j.at("family").get<std::string>());
    if (j.contains("form")) spec.form = j.at("form").get<int>();
    if (j.contains("covariates")) spec.covariates = j.at("covariates").get<std::vector<std::string>>();
    if (j.contains("random")) spec.random = j.at("random").get<std::vector<std::string>>();
    if (j.contains("draws")) spec.draws = j.at("draws").get<int>();
    if (j.contains("skip")) spec.skip = j.at("skip").get<int>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tol")) spec.tol = j.at("tol").get<double>();
    if (j.contains("max_iter")) spec.max_iter = j.at("max_iter").get<int>();
    if (j.contains("response"))
        spec.response =
            j.at("response").get<std::string>() == "per_year" ? Response::per_year : Response::total;
    if (spec.form < 1 || spec.form > 4) throw ArgumentError("spec: form must be 1..4");
    if (spec.draws < 1) throw ArgumentError("spec: draws must be at least 1");
    if (spec.skip < 0) throw ArgumentError("spec: skip must be non-negative");
    return spec;
}

json fit_to_json(const FitResult& fit, const std::string& label) {
    json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = fit.n_random > 0 ? "mixed" : "fixed";
    j["label"] = label;
    j["spec"] = spec_to_json(fit.spec);
    j["params"] = {{"names", fit.param_names}, {"values", vector_to_json(fit.params)}};
    if (fit.se_available) {
        j["std_errors"] = vector_to_json(fit.std_errors);
        j["t_stats"] = vector_to_json(fit.t_stats);
    }
    j["loglik_convergence"] = fit.loglik_convergence;
    j["loglik_null"] = fit.loglik_null;
    j["n_obs"] = fit.n_obs;
    j["n_params"] = fit.n_params;
    j["n_fixed"] = fit.n_fixed;
    j["n_random"] = fit.n_random;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    json diag{{"grad_max_norm", fit.grad_max_norm}, {"capped", fit.capped}};
    if (fit.loglik_double_draws) diag["loglik_double_draws"] = *fit.loglik_double_draws;
    if (!fit.effectively_fixed.empty()) diag["effectively_fixed"] = fit.effectively_fixed;
    j["diagnostics"] = diag;
    return j;
}

json model_to_json(const Model& model) {
    json j;
    j["schema_version"] = kModelSchemaVersion;
    j["label"] = model.label;
    switch (model.kind) {
        case Model::Kind::hsm:
            j["kind"] = "hsm";
            j["calibration"] = model.calibration;
            j["use_cmfs"] = model.use_cmfs;
            return j;
        case Model::Kind::fixed: j["kind"] = "fixed"; break;
        case Model::Kind::mixed: j["kind"] = "mixed"; break;
    }
    j["spec"] = spec_to_json(model.spec);
    j["params"] = {{"names", model.param_names}, {"values", vector_to_json(model.params)}};
    return j;
}

Model model_from_json(const json& j) {
    Model m;
    if (j.contains("label")) m.label = j.at("label").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "hsm") {
        m.kind = Model::Kind::hsm;
        if (j.contains("calibration")) m.calibration = j.at("calibration").get<double>();
        if (j.contains("use_cmfs")) m.use_cmfs = j.at("use_cmfs").get<bool>();
        if (m.calibration <= 0) throw ArgumentError("model: calibration must be positive");
        if (m.label.empty()) m.label = m.calibration == 1.0 ? "hsm" : "hsm_calibrated";
        return m;
    }
    if (kind != "fixed" && kind != "mixed")
        throw ArgumentError("model: unknown kind '" + kind + "'");
    m.kind = kind == "fixed" ? Model::Kind::fixed : Model::Kind::mixed;
    m.spec = spec_from_json(j.at("spec"));
    m.param_names = j.at("params").at("names").get<std::vector<std::string>>();
    m.params = vector_from_json(j.at("params").at("values"));
    if (m.label.empty()) m.label = kind;
    return m;
}

json validation_to_json(const ValidationReport& report) {
    json pairs = json::array();
    for (const auto& p : report.pairs)
        pairs.push_back({{"segment_id", p.segment_id}, {"observed", p.observed},
                         {"predicted", p.predicted}});
    return json{{"model", report.model_label},
                {"mae", report.mae},
                {"rmse", report.rmse},
                {"mpb", report.mpb},
                {"pairs", pairs}};
}

json gof_to_json(const GofReport& r) {
    json j{{"loglik_null", r.loglik_null},
           {"loglik_convergence", r.loglik_convergence},
           {"df", r.df},
           {"aic", r.aic},
           {"bic", r.bic},
           {"mcfadden_r2", r.mcfadden_r2},
           {"chi2", r.chi2},
           {"chi2_df", r.chi2_df},
           {"n_obs", r.n_obs}};
    if (std::isfinite(r.chi2_p)) j["chi2_p"] = r.chi2_p;
    return j;
}

}  // namespace spfkit
