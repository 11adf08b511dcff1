#include "spfkit/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spfkit/calibration.hpp"
#include "spfkit/csv.hpp"
#include "spfkit/data.hpp"
#include "spfkit/errors.hpp"
#include "spfkit/evaluate.hpp"
#include "spfkit/mixed.hpp"
#include "spfkit/model_io.hpp"
#include "spfkit/optimize.hpp"
#include "spfkit/parallel.hpp"
#include "spfkit/svg.hpp"

namespace spfkit {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = "0.1.0";

struct Overrides {
    std::string config_path;
    std::string input;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> draws;
    std::optional<int> skip;
    int threads = 1;
};

std::string shortest_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

std::string fnv1a64_hex(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : text) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

json load_config_json(const Overrides& ov) {
    json config = json::object();
    if (!ov.config_path.empty()) {
        std::ifstream in(ov.config_path);
        if (!in) throw ArgumentError("config: cannot open " + ov.config_path);
        try {
            in >> config;
        } catch (const json::exception& e) {
            throw ArgumentError("config: invalid JSON in " + ov.config_path + ": " + e.what());
        }
    }
    if (!ov.input.empty()) config["input"] = ov.input;
    if (!ov.output_dir.empty()) config["output_dir"] = ov.output_dir;
    if (ov.seed) config["seed_override"] = *ov.seed;
    if (ov.draws) config["draws_override"] = *ov.draws;
    if (ov.skip) config["skip_override"] = *ov.skip;
    return config;
}

ColumnSchema schema_from_json(const json& config) {
    ColumnSchema schema;
    schema.auto_covariates = true;
    // default: pick up a "region" column when present, never require one
    schema.region = "region";
    schema.region_required = false;
    if (!config.contains("schema")) return schema;
    const json& j = config.at("schema");
    if (j.contains("segment_id")) schema.segment_id = j.at("segment_id").get<std::string>();
    if (j.contains("region")) {
        schema.region = j.at("region").get<std::string>();
        schema.region_required = true;
    }
    if (j.contains("aadt")) schema.aadt = j.at("aadt").get<std::string>();
    if (j.contains("length_miles")) schema.length_miles = j.at("length_miles").get<std::string>();
    if (j.contains("years")) schema.years = j.at("years").get<std::string>();
    if (j.contains("crash_count")) schema.crash_count = j.at("crash_count").get<std::string>();
    if (j.contains("covariates")) {
        schema.covariates = j.at("covariates").get<std::map<std::string, std::string>>();
        schema.auto_covariates = false;
    }
    if (j.contains("indicators"))
        schema.indicators = j.at("indicators").get<std::vector<std::string>>();
    if (j.contains("cmfs")) schema.cmfs = j.at("cmfs").get<std::string>();
    if (j.contains("cmf_prefix")) schema.cmf_prefix = j.at("cmf_prefix").get<std::string>();
    if (j.contains("auto_covariates")) schema.auto_covariates = j.at("auto_covariates").get<bool>();
    return schema;
}

std::string output_dir_of(const json& config) {
    if (config.contains("output_dir")) return config.at("output_dir").get<std::string>();
    if (const char* env = std::getenv("SPFKIT_OUTPUT_DIR"); env && *env) return env;
    return "out";
}

Dataset load_input(const json& config) {
    if (!config.contains("input"))
        throw ArgumentError("config: 'input' is required (or pass --input)");
    const Dataset data =
        load_segments(config.at("input").get<std::string>(), schema_from_json(config));
    for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
    return data;
}

struct SplitSettings {
    double fraction = 0.7;
    std::uint64_t seed = 0;
};

std::optional<SplitSettings> split_settings(const json& config) {
    if (!config.contains("split")) return std::nullopt;
    SplitSettings s;
    const json& j = config.at("split");
    if (j.contains("fraction")) s.fraction = j.at("fraction").get<double>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (config.contains("seed_override")) s.seed = config.at("seed_override").get<std::uint64_t>();
    return s;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ComputationError("cannot write " + path.string());
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    const json& seeds, const std::vector<std::string>& outputs) {
    json manifest{{"tool", "spfkit"},
                  {"version", kToolVersion},
                  {"schema_version", kModelSchemaVersion},
                  {"command", command},
                  {"config", config},
                  {"config_hash", fnv1a64_hex(config.dump())},
                  {"seeds", seeds},
                  {"outputs", outputs}};
    write_json(dir / "run_manifest.json", manifest);
}

ModelSpec spec_from_config(const json& config) {
    if (!config.contains("fit")) throw ArgumentError("config: 'fit' block is required");
    ModelSpec spec = spec_from_json(config.at("fit"));
    if (config.contains("draws_override")) spec.draws = config.at("draws_override").get<int>();
    if (config.contains("skip_override")) spec.skip = config.at("skip_override").get<int>();
    if (config.contains("seed_override"))
        spec.seed = config.at("seed_override").get<std::uint64_t>();
    return spec;
}

std::string default_label(const ModelSpec& spec) {
    std::string label = spec.family == Family::poisson ? "poisson" : "nb";
    label += "_f" + std::to_string(spec.form);
    if (!spec.random.empty()) label += "_random";
    return label;
}

std::string coefficient_table(const FitResult& fit) {
    std::ostringstream out;
    char line[160];
    out << "model: " << family_name(fit.spec.family) << " form " << fit.spec.form;
    if (!fit.spec.random.empty()) out << " (random: ";
    for (std::size_t i = 0; i < fit.spec.random.size(); ++i)
        out << (i ? ", " : "") << fit.spec.random[i];
    if (!fit.spec.random.empty()) out << ")";
    out << "\n";
    std::snprintf(line, sizeof(line), "%-26s %12s %12s %10s\n", "coefficient", "beta", "se",
                  "t-stat");
    out << line;
    const int p = static_cast<int>(fit.params.size());
    for (int j = 0; j < p; ++j) {
        std::string name = fit.param_names[j];
        double value = fit.params(j);
        double se = fit.se_available ? fit.std_errors(j) : 0.0;
        double t = fit.se_available ? fit.t_stats(j) : 0.0;
        if (name == "ln_alpha") {
            // report dispersion on the natural scale with a delta-method SE
            name = "over-dispersion";
            const double alpha = std::exp(value);
            se = fit.se_available ? alpha * se : 0.0;
            t = fit.se_available && se > 0 ? alpha / se : 0.0;
            value = alpha;
        }
        if (fit.se_available)
            std::snprintf(line, sizeof(line), "%-26s %12.4f %12.4f %10.3f\n", name.c_str(), value,
                          se, t);
        else
            std::snprintf(line, sizeof(line), "%-26s %12.4f %12s %10s\n", name.c_str(), value,
                          "---", "---");
        out << line;
    }
    const GofReport g = gof(fit);
    std::snprintf(line, sizeof(line),
                  "LL(null) %.4f  LL(convergence) %.4f  AIC %.2f  BIC %.2f  McFadden %.4f\n",
                  g.loglik_null, g.loglik_convergence, g.aic, g.bic, g.mcfadden_r2);
    out << line;
    if (g.chi2_df >= 1) {
        std::snprintf(line, sizeof(line), "chi2 %.2f (df %d, p %.5f)  N %d\n", g.chi2, g.chi2_df,
                      g.chi2_p, g.n_obs);
        out << line;
    } else {
        std::snprintf(line, sizeof(line), "N %d\n", g.n_obs);
        out << line;
    }
    if (!fit.converged) out << "warning: optimizer did not meet the gradient tolerance\n";
    for (const auto& name : fit.effectively_fixed)
        out << "note: spread of '" << name << "' is not significant (t < 1.96); "
            << "coefficient is effectively fixed\n";
    return out.str();
}

std::vector<Model> models_from_config(const json& config, const std::string& block) {
    if (!config.contains(block) || !config.at(block).contains("models"))
        throw ArgumentError("config: '" + block + ".models' is required");
    std::vector<Model> models;
    for (const auto& entry : config.at(block).at("models")) {
        if (entry.is_string()) {
            std::ifstream in(entry.get<std::string>());
            if (!in) throw ArgumentError("cannot open model artifact " + entry.get<std::string>());
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw ArgumentError("model artifact " + entry.get<std::string>() +
                                    ": invalid JSON: " + e.what());
            }
            models.push_back(model_from_json(j));
        } else {
            models.push_back(model_from_json(entry));
        }
    }
    return models;
}

// -------------------------------------------------------------------------
// subcommands

int cmd_rates(const json& config) {
    const Dataset data = load_input(config);
    const json block = config.value("rates", json::object());
    const RateKind kind =
        block.value("kind", std::string("vmt")) == "per_mile" ? RateKind::per_mile : RateKind::vmt;
    const GroupBy group_by =
        block.value("group_by", std::string("all")) == "region" ? GroupBy::region : GroupBy::all;

    const auto summaries = rate_summary(data, kind, group_by);
    std::string csv_text = "Area,N,Mean,Std. Dev.,Min,Max\n";
    char line[200];
    for (const auto& s : summaries) {
        std::snprintf(line, sizeof(line), "%s,%d,%.3f,%.3f,%.3f,%.3f\n",
                      csv::escape(s.group).c_str(), s.n, s.mean, s.sd, s.min, s.max);
        csv_text += line;
    }

    const fs::path dir = output_dir_of(config);
    fs::create_directories(dir);
    write_text(dir / "rates.csv", csv_text);
    write_manifest(dir, "rates", config, json::object(), {"rates.csv"});
    std::cout << csv_text;
    return 0;
}

int cmd_calibrate(const json& config) {
    const Dataset data = load_input(config);
    const json block = config.value("calibrate", json::object());
    const GroupBy group_by =
        block.value("group_by", std::string("all")) == "region" ? GroupBy::region : GroupBy::all;
    const bool adjusted = block.value("adjusted", true);

    const auto results = calibration_factor(data, group_by);
    json out = json::array();
    for (const auto& r : results)
        out.push_back({{"group", r.group},
                       {"n", r.n},
                       {"c_base", r.c_base},
                       {"c_adj", r.c_adj},
                       {"sum_observed", r.sum_observed},
                       {"sum_predicted_base", r.sum_predicted_base},
                       {"sum_predicted_adjusted", r.sum_predicted_adjusted}});

    const fs::path dir = output_dir_of(config);
    fs::create_directories(dir);
    write_json(dir / "calibration.json", out);
    std::vector<std::string> outputs{"calibration.json"};

    if (group_by == GroupBy::all) {
        // Emit the calibrated baseline as a scoring artifact.
        const double c = adjusted ? results.front().c_adj : results.front().c_base;
        write_json(dir / "model_hsm_calibrated.json",
                   model_to_json(hsm_model(c, adjusted, "hsm_calibrated")));
        outputs.push_back("model_hsm_calibrated.json");
    }
    write_manifest(dir, "calibrate", config, json::object(), outputs);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_fit(const json& config) {
    Dataset data = load_input(config);
    json seeds = json::object();
    if (const auto s = split_settings(config)) {
        seeds["split_seed"] = s->seed;
        data = split(data, s->fraction, s->seed).first;
    }
    const ModelSpec spec = spec_from_config(config);
    const std::string label = config.at("fit").value("label", default_label(spec));

    const FitResult fit = spec.form == 4 ? fit_random(data, spec) : fit_fixed(data, spec);
    const std::string table = coefficient_table(fit);

    const fs::path dir = output_dir_of(config);
    fs::create_directories(dir);
    const std::string artifact = "fit_" + label + ".json";
    write_json(dir / artifact, fit_to_json(fit, label));
    write_text(dir / ("coefficients_" + label + ".txt"), table);
    write_manifest(dir, "fit", config, seeds, {artifact, "coefficients_" + label + ".txt"});
    std::cout << table;
    return 0;
}

int score_models(const json& config, const std::string& block, bool ranked) {
    Dataset data = load_input(config);
    json seeds = json::object();
    if (const auto s = split_settings(config)) {
        seeds["split_seed"] = s->seed;
        data = split(data, s->fraction, s->seed).second;  // held-out side
    }
    const std::vector<Model> models = models_from_config(config, block);

    ComparisonOutcome outcome;
    if (ranked) {
        outcome = compare(models, data);
    } else {
        for (const auto& m : models) {
            try {
                outcome.ranked.push_back(validate_model(m, data));
            } catch (const Error& e) {
                outcome.failed.emplace_back(m.label, e.what());
            }
        }
    }

    const fs::path dir = output_dir_of(config);
    fs::create_directories(dir);
    std::vector<std::string> outputs;

    std::string csv_text = "Model,MAE,RMSE,MPB\n";
    char line[200];
    for (const auto& report : outcome.ranked) {
        std::snprintf(line, sizeof(line), "%s,%.3f,%.3f,%.3f\n",
                      csv::escape(report.model_label).c_str(), report.mae, report.rmse,
                      report.mpb);
        csv_text += line;

        const std::string stem = report.model_label;
        write_json(dir / ("validation_" + stem + ".json"), validation_to_json(report));
        write_scatter_svg((dir / ("scatter_" + stem + ".svg")).string(), report);
        outputs.push_back("validation_" + stem + ".json");
        outputs.push_back("scatter_" + stem + ".svg");
    }
    write_text(dir / "forecast_metrics.csv", csv_text);
    outputs.push_back("forecast_metrics.csv");

    if (ranked) {
        json summary = json::array();
        for (const auto& report : outcome.ranked)
            summary.push_back({{"model", report.model_label},
                               {"mae", report.mae},
                               {"rmse", report.rmse},
                               {"mpb", report.mpb}});
        json failed = json::array();
        for (const auto& [label, what] : outcome.failed)
            failed.push_back({{"model", label}, {"error", what}});
        write_json(dir / "comparison.json", json{{"ranked", summary}, {"failed", failed}});
        outputs.push_back("comparison.json");
    }
    write_manifest(dir, ranked ? "compare" : "validate", config, seeds, outputs);
    std::cout << csv_text;
    for (const auto& [label, what] : outcome.failed)
        std::cerr << "model '" << label << "' failed: " << what << "\n";
    return 0;
}

SynthTruth truth_from_json(const json& j) {
    SynthTruth truth;
    truth.spec = spec_from_json(j.at("spec"));
    const json& p = j.at("params");
    auto to_vec = [](const json& arr) {
        Eigen::VectorXd v(arr.size());
        int i = 0;
        for (const auto& x : arr) v(i++) = x.get<double>();
        return v;
    };
    truth.params.beta_fixed = to_vec(p.at("beta_fixed"));
    truth.params.mu_random = p.contains("mu_random") ? to_vec(p.at("mu_random")) : Eigen::VectorXd(0);
    truth.params.sigma_random =
        p.contains("sigma_random") ? to_vec(p.at("sigma_random")) : Eigen::VectorXd(0);
    if (p.contains("ln_alpha") && !p.at("ln_alpha").is_null())
        truth.params.ln_alpha = p.at("ln_alpha").get<double>();
    return truth;
}

std::string dataset_to_csv(const Dataset& data) {
    // Stable column set: the union of covariate names, sorted.
    std::set<std::string> cov_names;
    for (const auto& rec : data.records)
        for (const auto& [name, value] : rec.covariates) cov_names.insert(name);

    std::string text = "segment_id,region,aadt,length_miles,years,crash_count";
    for (const auto& name : cov_names) text += "," + name;
    bool any_cmfs = false;
    for (const auto& rec : data.records) any_cmfs = any_cmfs || !rec.cmfs.empty();
    if (any_cmfs) text += ",cmfs";
    text += "\n";

    for (const auto& rec : data.records) {
        text += csv::escape(rec.segment_id) + "," + csv::escape(rec.region) + "," +
                shortest_double(rec.aadt) + "," + shortest_double(rec.length_miles) + "," +
                std::to_string(rec.years) + "," + std::to_string(rec.crash_count);
        for (const auto& name : cov_names) {
            const auto it = rec.covariates.find(name);
            text += ",";
            text += it == rec.covariates.end() ? "0" : shortest_double(it->second);
        }
        if (any_cmfs) {
            text += ",";
            for (std::size_t k = 0; k < rec.cmfs.size(); ++k)
                text += (k ? ";" : "") + shortest_double(rec.cmfs[k]);
        }
        text += "\n";
    }
    return text;
}

int cmd_simulate(const json& config) {
    if (!config.contains("simulate")) throw ArgumentError("config: 'simulate' block is required");
    const json& block = config.at("simulate");
    const SynthTruth truth = truth_from_json(block.at("truth"));
    const int n = block.value("n", 1000);
    std::uint64_t seed = block.value("seed", 0);
    if (config.contains("seed_override")) seed = config.at("seed_override").get<std::uint64_t>();
    const int years = block.value("years", 5);

    std::vector<CovariateSpec> ranges = default_covariate_ranges();
    if (block.contains("covariates")) {
        ranges.clear();
        for (const auto& rj : block.at("covariates")) {
            if (rj.value("kind", std::string("uniform")) == "bernoulli")
                ranges.push_back(CovariateSpec::bernoulli(rj.at("name").get<std::string>(),
                                                          rj.value("p", 0.5)));
            else
                ranges.push_back(CovariateSpec::uniform(rj.at("name").get<std::string>(),
                                                        rj.at("lo").get<double>(),
                                                        rj.at("hi").get<double>()));
        }
    }

    const Dataset data = synth_generate(truth, n, seed, ranges, years);

    const fs::path dir = output_dir_of(config);
    fs::create_directories(dir);
    write_text(dir / "simulated.csv", dataset_to_csv(data));
    write_json(dir / "truth.json", block.at("truth"));
    write_manifest(dir, "simulate", config, json{{"simulate_seed", seed}},
                   {"simulated.csv", "truth.json"});
    std::cout << "wrote " << n << " synthetic segments to " << (dir / "simulated.csv").string()
              << "\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"spfkit: safety-performance-function estimation toolkit"};
    app.require_subcommand(1);

    Overrides ov;
    app.add_option("--config", ov.config_path, "JSON run configuration");
    app.add_option("--input", ov.input, "input CSV (overrides config)");
    app.add_option("--output-dir", ov.output_dir, "output directory (overrides config)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "seed override");
    int draws_value = 0;
    auto* draws_opt = app.add_option("--draws", draws_value, "Halton draws override");
    int skip_value = 0;
    auto* skip_opt = app.add_option("--skip", skip_value, "Halton burn-in override");
    app.add_option("--threads", ov.threads, "worker threads for likelihood evaluation");

    const char* names[] = {"rates", "calibrate", "fit", "validate", "compare", "simulate"};
    const char* descs[] = {"crash-rate summary tables",
                           "baseline calibration factors",
                           "fit one model and write its artifact",
                           "score model artifacts on the held-out split",
                           "rank model artifacts on the held-out split",
                           "generate a synthetic dataset from a stated truth"};
    for (int i = 0; i < 6; ++i) app.add_subcommand(names[i], descs[i])->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 64;
    }

    if (seed_opt->count()) ov.seed = seed_value;
    if (draws_opt->count()) ov.draws = draws_value;
    if (skip_opt->count()) ov.skip = skip_value;
    set_max_threads(ov.threads);

    try {
        const json config = load_config_json(ov);
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "rates") return cmd_rates(config);
        if (sub == "calibrate") return cmd_calibrate(config);
        if (sub == "fit") return cmd_fit(config);
        if (sub == "validate") return score_models(config, "validate", false);
        if (sub == "compare") return score_models(config, "compare", true);
        if (sub == "simulate") return cmd_simulate(config);
        std::cerr << "unknown subcommand\n" << app.help() << "\n";
        return 64;
    } catch (const ComputationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace spfkit
