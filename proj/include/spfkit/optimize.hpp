#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spfkit/likelihood.hpp"
#include "spfkit/types.hpp"

namespace spfkit {

struct ObjectiveValue {
    double value = 0;
    Eigen::VectorXd gradient;
};

using Objective = std::function<ObjectiveValue(const Eigen::VectorXd&)>;

struct TracePoint {
    int iter = 0;
    double value = 0;
    double grad_max = 0;
    double step = 0;
};

struct MaximizeResult {
    Eigen::VectorXd x;
    double value = 0;
    Eigen::VectorXd gradient;
    bool converged = false;
    int iterations = 0;
    std::vector<TracePoint> trace;
};

/// Quasi-Newton (BFGS) ascent with backtracking line search. Stops when the
/// gradient max-norm drops below tol or after max_iter iterations. A
/// non-finite trial value triggers step halving; if no finite step can be
/// found the search aborts with ComputationError carrying the trace.
MaximizeResult maximize(const Objective& objective, Eigen::VectorXd init, double tol = 1e-6,
                        int max_iter = 200);

/// Coefficients, dispersion, and inference summary of one fitted model.
/// params is on the estimation scale: [beta for X columns][mu for Z columns]
/// [sigma for Z columns][ln_alpha if NB]. n_params counts every estimated
/// scalar including dispersion.
struct FitResult {
    ModelSpec spec;
    std::vector<std::string> param_names;
    Eigen::VectorXd params;
    Eigen::VectorXd std_errors;  // empty when the Hessian was not invertible
    Eigen::VectorXd t_stats;     // empty when std_errors is empty
    double loglik_convergence = 0;
    double loglik_null = 0;
    int n_obs = 0;
    int n_params = 0;
    int iterations = 0;
    bool converged = false;
    bool se_available = false;
    bool capped = false;
    double grad_max_norm = 0;
    int n_fixed = 0;   // X columns (incl. intercept)
    int n_random = 0;  // Z columns
    std::optional<double> loglik_double_draws;     // mixed-model draw diagnostic
    std::vector<std::string> effectively_fixed;    // random coefs with sigma t < 1.96
};

/// Maximum-likelihood fit of a fixed-parameter model (forms 1-3, Poisson or
/// NB). Standard errors come from the negative inverse numeric Hessian
/// (central differences of the analytic gradient); a singular Hessian leaves
/// std_errors empty but still returns the fit.
FitResult fit_fixed(const Dataset& data, const ModelSpec& spec);

/// Log-likelihood of the matching intercept-only model. Form 1 keeps its
/// exposure offset (so the null equals the fitted model); forms 2-4 use no
/// offset.
double null_loglik(const Dataset& data, const ModelSpec& spec);

struct LrTestResult {
    double statistic = 0;
    double p_value = 1;
};

/// Likelihood-ratio test: statistic = 2(ll_full - ll_restricted), p from the
/// chi-square upper tail with df degrees of freedom.
LrTestResult lr_test(double ll_restricted, double ll_full, int df);

struct OverdispersionResult {
    double statistic = 0;
    double p_value = 1;
    Family prefer = Family::poisson;
};

/// Boundary-corrected LR test of alpha = 0: p = 0.5 * P(chi2_1 > stat);
/// prefers NB iff p < 0.05. Both fits must share data and mean structure.
OverdispersionResult overdispersion_test(const FitResult& poisson_fit, const FitResult& nb_fit);

/// Shared by fit_fixed and fit_random: negative inverse numeric Hessian of
/// `objective` at x, written into std_errors/t_stats of `fit`.
void fill_standard_errors(const Objective& objective, const Eigen::VectorXd& x, FitResult& fit);

}  // namespace spfkit
