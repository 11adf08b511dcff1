#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "spfkit/mixed.hpp"
#include "spfkit/optimize.hpp"
#include "spfkit/types.hpp"

namespace spfkit {

struct GofReport {
    double loglik_null = 0;
    double loglik_convergence = 0;
    int df = 0;
    double aic = 0;
    double bic = 0;
    double mcfadden_r2 = 0;
    double chi2 = 0;
    double chi2_p = 1;
    int chi2_df = 0;  // df of the chi-square test (params beyond the null)
    int n_obs = 0;
};

/// aic = -2 LL + 2 df; bic = -2 LL + df ln(n); mcfadden = 1 - LL/LL_null;
/// chi2 = 2 (LL - LL_null) with upper-tail p at chi2_df degrees of freedom
/// (p is NaN when chi2_df < 1, e.g. for intercept-only models).
GofReport gof(double ll_null, double ll_convergence, int df, int n_obs, int chi2_df);
GofReport gof(const FitResult& fit);

/// A scoring artifact: either the baseline exposure model (optionally
/// CMF-adjusted and calibrated) or a fitted fixed/mixed model.
struct Model {
    enum class Kind { hsm, fixed, mixed };
    Kind kind = Kind::fixed;
    std::string label;
    // kind == hsm
    double calibration = 1.0;
    bool use_cmfs = false;
    // fitted kinds
    ModelSpec spec;
    std::vector<std::string> param_names;
    Eigen::VectorXd params;  // estimation-scale layout of FitResult::params
};

Model to_model(const FitResult& fit, std::string label);
Model hsm_model(double calibration = 1.0, bool use_cmfs = false, std::string label = "");

/// Expected crashes per segment. Fixed models evaluate their mean function;
/// mixed models average the conditional mean over one shared, sign-
/// symmetrized Halton draw block (same draws/skip as the training spec), so
/// predictions do not depend on segment order.
Eigen::VectorXd predict(const Model& model, const Dataset& data);

double mae(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted);
double rmse(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted);
/// Mean prediction bias: mean(predicted - observed); positive means the
/// model overestimates.
double mpb(const Eigen::VectorXd& observed, const Eigen::VectorXd& predicted);

struct PredictionPair {
    std::string segment_id;
    double observed = 0;
    double predicted = 0;
};

struct ValidationReport {
    std::string model_label;
    double mae = 0;
    double rmse = 0;
    double mpb = 0;
    std::vector<PredictionPair> pairs;
};

ValidationReport validate_model(const Model& model, const Dataset& test);

struct ComparisonOutcome {
    std::vector<ValidationReport> ranked;  // ascending MAE, ties by RMSE
    std::vector<std::pair<std::string, std::string>> failed;  // label -> error
};

/// Scores every model on the shared test set. A model whose prediction fails
/// is reported under `failed` without aborting the others.
ComparisonOutcome compare(const std::vector<Model>& models, const Dataset& test);

struct CovariateSpec {
    enum class Kind { uniform, bernoulli };
    std::string name;
    Kind kind = Kind::uniform;
    double lo = 0;
    double hi = 1;
    double p = 0.5;

    static CovariateSpec uniform(std::string name, double lo, double hi);
    static CovariateSpec bernoulli(std::string name, double p);
};

/// Default simulation ranges for the rural two-lane setting.
std::vector<CovariateSpec> default_covariate_ranges();

struct SynthTruth {
    ModelSpec spec;      // family/form/covariates/random of the generating model
    MixedParams params;  // sigma and ln_alpha used when present
};

/// Draws covariates uniformly (or Bernoulli for indicators), samples
/// per-segment coefficients from the truth's mixing distribution with a
/// seeded mt19937_64 (independent of the Halton machinery), and samples
/// counts from Poisson or NB at the implied mean.
Dataset synth_generate(const SynthTruth& truth, int n_segments, std::uint64_t seed,
                       const std::vector<CovariateSpec>& ranges = default_covariate_ranges(),
                       int years = 5);

}  // namespace spfkit
