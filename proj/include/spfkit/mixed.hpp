#pragma once

#include <optional>

#include <Eigen/Core>

#include "spfkit/halton.hpp"
#include "spfkit/likelihood.hpp"
#include "spfkit/optimize.hpp"
#include "spfkit/types.hpp"

namespace spfkit {

/// Random-coefficient model parameters. sigma_random is stored unconstrained
/// and enters the likelihood through its absolute value, so the surface is
/// symmetric in each spread component.
struct MixedParams {
    Eigen::VectorXd beta_fixed;    // X columns
    Eigen::VectorXd mu_random;     // Z columns: coefficient means
    Eigen::VectorXd sigma_random;  // Z columns: coefficient spreads
    std::optional<double> ln_alpha;  // NB only

    /// Packed layout: [beta_fixed..., mu_random..., sigma_random..., ln_alpha?].
    Eigen::VectorXd pack() const;
    static MixedParams unpack(const Eigen::VectorXd& theta, int n_fixed, int n_random,
                              bool has_alpha);
};

/// Simulated log-likelihood over Halton draws: per observation the
/// conditional likelihoods are averaged across draws (log-sum-exp minus
/// ln n_draws), with the analytic gradient computed by the same draw
/// weighting. Gradient layout matches MixedParams::pack().
LikelihoodValue simulated_loglik(const DesignMatrix& design, const MixedParams& params,
                                 const DrawMatrix& draws, Family family);

/// Maximum simulated likelihood fit of a form-4 model. Starts from the
/// matching form-3 fixed fit (spreads at 0.1*|mu|, floor 0.05), reports
/// spreads as absolute values, and flags random coefficients whose spread
/// t-statistic falls below 1.96 as effectively fixed. Also evaluates the
/// optimum under doubled draws (loglik_double_draws) as a simulation-error
/// diagnostic.
FitResult fit_random(const Dataset& data, const ModelSpec& spec);

}  // namespace spfkit
