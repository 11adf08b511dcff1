#pragma once

#include <Eigen/Core>

#include "spfkit/types.hpp"

namespace spfkit {

/// Linear predictors are clamped to this bound before exponentiation; a
/// clamped evaluation is reported through the `capped` flag.
inline constexpr double kLinearPredictorCap = 30.0;

struct FixedParams {
    Eigen::VectorXd beta;  // aligned to DesignMatrix::x_names
    double ln_alpha = 0;   // NB dispersion on the log scale; ignored for Poisson
};

struct LikelihoodValue {
    double loglik = 0;
    Eigen::VectorXd gradient;  // same layout as the parameter vector
    Eigen::VectorXd per_obs;
    bool capped = false;
};

struct MeanResult {
    Eigen::VectorXd lambda;
    bool capped = false;
};

/// lambda_i = exp(offset_i + x_i' beta), linear predictor clamped to
/// +-kLinearPredictorCap.
MeanResult poisson_mean(const DesignMatrix& design, const Eigen::VectorXd& beta);

/// Poisson log-likelihood with analytic gradient X'(y - lambda). Gradient
/// contributions of clamped observations are zero (the exact derivative of
/// the clamped objective).
LikelihoodValue poisson_loglik(const DesignMatrix& design, const Eigen::VectorXd& beta);

/// NB2 log-likelihood (variance mu + alpha*mu^2), alpha = exp(ln_alpha).
/// Gradient layout: [beta..., ln_alpha]. Below alpha = 1e-12 the Poisson
/// limit is evaluated instead (with a zero dispersion gradient).
LikelihoodValue nb_loglik(const DesignMatrix& design, const Eigen::VectorXd& beta,
                          double ln_alpha);

/// Per-observation NB2 terms used by both nb_loglik and the mixed kernel.
/// y must be a non-negative integer; r = 1/alpha.
double nb_per_obs(double y, double eta, double r);
double nb_dl_deta(double y, double mu, double r);
double nb_dl_dlnalpha(double y, double mu, double r);

}  // namespace spfkit
