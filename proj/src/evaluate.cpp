#include "spfkit/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "spfkit/calibration.hpp"
#include "spfkit/data.hpp"
#include "spfkit/errors.hpp"
#include "spfkit/numerics.hpp"

namespace spfkit {

GofReport gof(double ll_null, double ll_convergence, int df, int n_obs, int chi2_df) {
    if (n_obs < 2) throw ArgumentError("gof: n_obs must be at least 2");
    if (df < 1) throw ArgumentError("gof: df must be at least 1");
    GofReport r;
    r.loglik_null = ll_null;
    r.loglik_convergence = ll_convergence;
    r.df = df;
    r.n_obs = n_obs;
    r.aic = -2.0 * ll_convergence + 2.0 * df;
    r.bic = -2.0 * ll_convergence + df * std::log(static_cast<double>(n_obs));
    r.mcfadden_r2 = ll_null < 0 ? 1.0 - ll_convergence / ll_null : 0.0;
    r.chi2 = std::max(0.0, 2.0 * (ll_convergence - ll_null));
    r.chi2_df = chi2_df;
    r.chi2_p =
        chi2_df >= 1 ? chi2_sf(r.chi2, chi2_df) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

GofReport gof(const FitResult& fit) {
    const int null_params = fit.spec.family == Family::nb ? 2 : 1;
    return gof(fit.loglik_null, fit.loglik_convergence, fit.n_params, fit.n_obs,
               fit.n_params - null_params);
}

Model to_model(const FitResult& fit, std::string label) {
    Model m;
    m.kind = fit.n_random > 0 ? Model::Kind::mixed : Model::Kind::fixed;
    m.label = std::move(label);
    m.spec = fit.spec;
    m.param_names = fit.param_names;
    m.params = fit.params;
    return m;
}

Model hsm_model(double calibration, bool use_cmfs, std::string label) {
    if (calibration <= 0) throw ArgumentError("hsm_model: calibration factor must be positive");
    Model m;
    m.kind = Model::Kind::hsm;
    m.calibration = calibration;
    m.use_cmfs = use_cmfs;
    m.label = label.empty() ? (calibration == 1.0 ? "hsm" : "hsm_calibrated") : std::move(label);
    return m;
}

namespace {

Eigen::VectorXd predict_hsm(const Model& model, const Dataset& data) {
    Eigen::VectorXd out(static_cast<int>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& rec = data.records[i];
        double pred = hsm_base_prediction(rec.aadt, rec.length_miles, rec.years);
        if (model.use_cmfs) pred = apply_cmfs(pred, rec.cmfs);
        out(static_cast<int>(i)) = model.calibration * pred;
    }
    return out;
}

Eigen::VectorXd predict_fixed(const Model& model, const Dataset& data) {
    const DesignMatrix design = build_design(data, model.spec);
    const int nx = static_cast<int>(design.X.cols());
    return poisson_mean(design, model.params.head(nx)).lambda;
}

Eigen::VectorXd predict_mixed(const Model& model, const Dataset& data) {
    const DesignMatrix design = build_design(data, model.spec);
    const int nx = static_cast<int>(design.X.cols());
    const int nz = static_cast<int>(design.Z.cols());
    const MixedParams p =
        MixedParams::unpack(model.params, nx, nz, model.spec.family == Family::nb);

    // One draw block shared by every segment: the mixing distribution is a
    // population quantity, so predictions stay invariant to segment order.
    // Each draw enters with both signs; the mixing density is symmetric and
    // the antithetic pair cancels the odd-order quadrature error that
    // otherwise biases the mean of exp(...) low.
    const DrawMatrix draws = make_draws(1, nz, model.spec.draws, model.spec.skip);
    const Eigen::VectorXd base = design.offset + design.X * p.beta_fixed + design.Z * p.mu_random;

    Eigen::VectorXd out(design.n_obs);
    for (int i = 0; i < design.n_obs; ++i) {
        double sum = 0;
        for (int r = 0; r < draws.n_draws; ++r) {
            double shift = 0;
            for (int k = 0; k < nz; ++k)
                shift += std::fabs(p.sigma_random(k)) * design.Z(i, k) * draws.at(0, r, k);
            sum += std::exp(std::clamp(base(i) + shift, -kLinearPredictorCap,
                                       kLinearPredictorCap));
            sum += std::exp(std::clamp(base(i) - shift, -kLinearPredictorCap,
                                       kLinearPredictorCap));
        }
        out(i) = sum / (2.0 * draws.n_draws);
    }
    return out;
}

}  // namespace

Eigen::VectorXd predict(const Model& model, const Dataset& data) {
    if (data.empty()) throw ArgumentError("predict: dataset is empty");
    switch (model.kind) {
        case Model::Kind::hsm: return predict_hsm(model, data);
        case Model::Kind::fixed: return predict_fixed(model, data);
        case Model::Kind::mixed: return predict_mixed(model, data);
    }
    throw ArgumentError("predict: unknown model kind");
}

namespace {

void check_lengths(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
    if (observed.size() == 0) throw ArgumentError("metric: vectors must be non-empty");
    if (observed.size() != predicted.size())
        throw ArgumentError("metric: observed and predicted lengths differ");
}

}  // namespace

double mae(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
    check_lengths(observed, predicted);
    return (predicted - observed).cwiseAbs().mean();
}

double rmse(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
    check_lengths(observed, predicted);
    return std::sqrt((predicted - observed).squaredNorm() / observed.size());
}

double mpb(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted) {
    check_lengths(observed, predicted);
    return (predicted - observed).mean();
}

ValidationReport validate_model(const Model& model, const Dataset& test) {
    if (test.empty()) throw ArgumentError("validate_model: test set is empty");
    const Eigen::VectorXd predicted = predict(model, test);
    Eigen::VectorXd observed(predicted.size());
    for (std::size_t i = 0; i < test.size(); ++i)
        observed(static_cast<int>(i)) = static_cast<double>(test.records[i].crash_count);

    ValidationReport report;
    report.model_label = model.label;
    report.mae = mae(observed, predicted);
    report.rmse = rmse(observed, predicted);
    report.mpb = mpb(observed, predicted);
    report.pairs.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i)
        report.pairs.push_back({test.records[i].segment_id, observed(static_cast<int>(i)),
                                predicted(static_cast<int>(i))});
    return report;
}

ComparisonOutcome compare(const std::vector<Model>& models, const Dataset& test) {
    if (models.empty()) throw ArgumentError("compare: need at least one model");
    ComparisonOutcome outcome;
    for (const auto& model : models) {
        try {
            outcome.ranked.push_back(validate_model(model, test));
        } catch (const Error& e) {
            outcome.failed.emplace_back(model.label, e.what());
        }
    }
    std::stable_sort(outcome.ranked.begin(), outcome.ranked.end(),
                     [](const ValidationReport& a, const ValidationReport& b) {
                         if (a.mae != b.mae) return a.mae < b.mae;
                         return a.rmse < b.rmse;
                     });
    return outcome;
}

CovariateSpec CovariateSpec::uniform(std::string name, double lo, double hi) {
    CovariateSpec s;
    s.name = std::move(name);
    s.kind = Kind::uniform;
    s.lo = lo;
    s.hi = hi;
    return s;
}

CovariateSpec CovariateSpec::bernoulli(std::string name, double p) {
    CovariateSpec s;
    s.name = std::move(name);
    s.kind = Kind::bernoulli;
    s.p = p;
    return s;
}

std::vector<CovariateSpec> default_covariate_ranges() {
    return {CovariateSpec::uniform("aadt", 60.0, 14611.0),
            CovariateSpec::uniform("length", 0.1, 7.2),
            CovariateSpec::uniform("shoulder_width", 0.0, 12.0),
            CovariateSpec::uniform("speed_limit", 20.0, 55.0),
            CovariateSpec::bernoulli("lane_width_ge_10", 0.44),
            CovariateSpec::bernoulli("passing_lane", 0.27)};
}

Dataset synth_generate(const SynthTruth& truth, int n_segments, std::uint64_t seed,
                       const std::vector<CovariateSpec>& ranges, int years) {
    if (n_segments < 1) throw ArgumentError("synth_generate: n_segments must be positive");
    if (years < 1) throw ArgumentError("synth_generate: years must be at least 1");
    for (const auto& r : ranges) {
        if (r.kind == CovariateSpec::Kind::uniform && !(r.lo < r.hi))
            throw ArgumentError("synth_generate: empty range for covariate '" + r.name + "'");
        if (r.kind == CovariateSpec::Kind::bernoulli && !(r.p >= 0 && r.p <= 1))
            throw ArgumentError("synth_generate: probability outside [0,1] for '" + r.name + "'");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset data;
    data.provenance = {"synthetic(seed=" + std::to_string(seed) + ")",
                       static_cast<std::size_t>(n_segments)};
    data.records.reserve(n_segments);
    for (int i = 0; i < n_segments; ++i) {
        SegmentRecord rec;
        rec.segment_id = "s" + std::to_string(i + 1);
        rec.region = "synthetic";
        rec.years = years;
        rec.aadt = 1000.0;
        rec.length_miles = 1.0;
        for (const auto& r : ranges) {
            double value = 0;
            if (r.kind == CovariateSpec::Kind::uniform)
                value = r.lo + (r.hi - r.lo) * unit(rng);
            else
                value = unit(rng) < r.p ? 1.0 : 0.0;
            if (r.name == "aadt") rec.aadt = value;
            else if (r.name == "length") rec.length_miles = value;
            else rec.covariates[r.name] = value;
        }
        data.records.push_back(std::move(rec));
    }

    // The truth's own design gives the linear predictor; per-segment
    // coefficients come from the mixing distribution with this generator,
    // never from the Halton stream the estimator uses.
    const DesignMatrix design = build_design(data, truth.spec);
    const int nx = static_cast<int>(design.X.cols());
    const int nz = static_cast<int>(design.Z.cols());
    if (truth.params.beta_fixed.size() != nx)
        throw ArgumentError("synth_generate: truth beta does not match design columns");
    if (truth.params.mu_random.size() != nz || truth.params.sigma_random.size() != nz)
        throw ArgumentError("synth_generate: truth random blocks do not match design columns");

    std::normal_distribution<double> std_normal(0.0, 1.0);
    const bool is_nb = truth.spec.family == Family::nb;
    const double alpha = is_nb && truth.params.ln_alpha ? std::exp(*truth.params.ln_alpha) : 0.0;

    const Eigen::VectorXd base =
        design.offset + design.X * truth.params.beta_fixed + design.Z * truth.params.mu_random;
    for (int i = 0; i < n_segments; ++i) {
        double eta = base(i);
        for (int k = 0; k < nz; ++k)
            eta += std::fabs(truth.params.sigma_random(k)) * design.Z(i, k) * std_normal(rng);
        double lambda = std::exp(eta);
        if (is_nb && alpha > 0) {
            std::gamma_distribution<double> gamma(1.0 / alpha, alpha);  // mean-one multiplier
            lambda *= gamma(rng);
        }
        std::poisson_distribution<std::int64_t> pois(lambda);
        data.records[static_cast<std::size_t>(i)].crash_count = pois(rng);
    }
    return data;
}

}  // namespace spfkit
