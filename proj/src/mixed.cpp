#include "spfkit/mixed.hpp"

#include <cmath>

#include "spfkit/data.hpp"
#include "spfkit/errors.hpp"
#include "spfkit/numerics.hpp"
#include "spfkit/parallel.hpp"

namespace spfkit {

Eigen::VectorXd MixedParams::pack() const {
    const int nx = static_cast<int>(beta_fixed.size());
    const int nz = static_cast<int>(mu_random.size());
    Eigen::VectorXd theta(nx + 2 * nz + (ln_alpha ? 1 : 0));
    theta.head(nx) = beta_fixed;
    theta.segment(nx, nz) = mu_random;
    theta.segment(nx + nz, nz) = sigma_random;
    if (ln_alpha) theta(nx + 2 * nz) = *ln_alpha;
    return theta;
}

MixedParams MixedParams::unpack(const Eigen::VectorXd& theta, int n_fixed, int n_random,
                                bool has_alpha) {
    MixedParams p;
    p.beta_fixed = theta.head(n_fixed);
    p.mu_random = theta.segment(n_fixed, n_random);
    p.sigma_random = theta.segment(n_fixed + n_random, n_random);
    if (has_alpha) p.ln_alpha = theta(n_fixed + 2 * n_random);
    return p;
}

LikelihoodValue simulated_loglik(const DesignMatrix& design, const MixedParams& params,
                                 const DrawMatrix& draws, Family family) {
    const int n = design.n_obs;
    const int nx = static_cast<int>(design.X.cols());
    const int nz = static_cast<int>(design.Z.cols());
    if (params.beta_fixed.size() != nx || params.mu_random.size() != nz ||
        params.sigma_random.size() != nz)
        throw ArgumentError("simulated_loglik: parameter blocks do not match design columns");
    if (draws.n_dims != nz)
        throw ArgumentError("simulated_loglik: draw dimensions do not match random columns");
    if (draws.n_obs < n)
        throw ArgumentError("simulated_loglik: draw matrix covers fewer observations than design");
    const bool has_alpha = family == Family::nb;
    if (has_alpha && !params.ln_alpha)
        throw ArgumentError("simulated_loglik: NB family requires ln_alpha");

    const int n_draws = draws.n_draws;
    const int n_par = nx + 2 * nz + (has_alpha ? 1 : 0);
    const double r_disp = has_alpha ? std::exp(-*params.ln_alpha) : 0.0;
    const double log_n_draws = std::log(static_cast<double>(n_draws));

    Eigen::VectorXd abs_sigma(nz), sign_sigma(nz);
    for (int k = 0; k < nz; ++k) {
        abs_sigma(k) = std::fabs(params.sigma_random(k));
        sign_sigma(k) = params.sigma_random(k) > 0 ? 1.0 : (params.sigma_random(k) < 0 ? -1.0 : 0.0);
    }

    const Eigen::VectorXd base =
        design.offset + design.X * params.beta_fixed + design.Z * params.mu_random;

    LikelihoodValue out;
    out.per_obs.resize(n);
    Eigen::MatrixXd grad_rows(n, n_par);
    std::vector<char> capped(n, 0);

    parallel_for(n, [&](int i) {
        const double y = design.y(i);
        Eigen::VectorXd cond_ll(n_draws);       // conditional per-draw log-likelihood
        Eigen::VectorXd dll_deta(n_draws);      // its derivative in the linear predictor
        Eigen::VectorXd dll_dlnalpha;
        if (has_alpha) dll_dlnalpha.resize(n_draws);
        bool c_any = false;

        for (int r = 0; r < n_draws; ++r) {
            double eta = base(i);
            for (int k = 0; k < nz; ++k) eta += abs_sigma(k) * design.Z(i, k) * draws.at(i, r, k);
            bool c = false;
            if (eta > kLinearPredictorCap) {
                eta = kLinearPredictorCap;
                c = true;
            } else if (eta < -kLinearPredictorCap) {
                eta = -kLinearPredictorCap;
                c = true;
            }
            c_any = c_any || c;
            const double mu = std::exp(eta);
            if (family == Family::poisson) {
                cond_ll(r) = -mu + y * eta - log_factorial(y);
                dll_deta(r) = c ? 0.0 : y - mu;
            } else {
                cond_ll(r) = nb_per_obs(y, eta, r_disp);
                dll_deta(r) = c ? 0.0 : nb_dl_deta(y, mu, r_disp);
                dll_dlnalpha(r) = nb_dl_dlnalpha(y, mu, r_disp);
            }
        }

        // log of the draw-averaged conditional likelihood, and the matching
        // normalized draw weights.
        const double m = cond_ll.maxCoeff();
        double s = 0;
        for (int r = 0; r < n_draws; ++r) s += std::exp(cond_ll(r) - m);
        out.per_obs(i) = m + std::log(s) - log_n_draws;

        double a = 0;           // sum_r w_r dll/deta
        Eigen::VectorXd b = Eigen::VectorXd::Zero(nz);  // sum_r w_r dll/deta * draw_k
        double galpha = 0;
        for (int r = 0; r < n_draws; ++r) {
            const double w = std::exp(cond_ll(r) - m) / s;
            const double wd = w * dll_deta(r);
            a += wd;
            for (int k = 0; k < nz; ++k) b(k) += wd * draws.at(i, r, k);
            if (has_alpha) galpha += w * dll_dlnalpha(r);
        }
        for (int j = 0; j < nx; ++j) grad_rows(i, j) = a * design.X(i, j);
        for (int k = 0; k < nz; ++k) {
            grad_rows(i, nx + k) = a * design.Z(i, k);
            grad_rows(i, nx + nz + k) = sign_sigma(k) * design.Z(i, k) * b(k);
        }
        if (has_alpha) grad_rows(i, n_par - 1) = galpha;
        capped[i] = c_any ? 1 : 0;
    });

    double ll = 0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_par);
    for (int i = 0; i < n; ++i) {  // fixed-order reduction: bit-stable across workers
        ll += out.per_obs(i);
        grad += grad_rows.row(i);
    }
    out.loglik = ll;
    out.gradient = std::move(grad);
    for (int i = 0; i < n; ++i) out.capped = out.capped || capped[i];
    return out;
}

FitResult fit_random(const Dataset& data, const ModelSpec& spec) {
    if (spec.form != 4) throw ArgumentError("fit_random: spec.form must be 4");
    if (spec.random.empty()) {
        // Degenerate case: no random coefficients, identical to the fixed fit.
        ModelSpec fixed_spec = spec;
        fixed_spec.form = 3;
        FitResult fit = fit_fixed(data, fixed_spec);
        fit.spec = spec;
        return fit;
    }
    if (spec.draws < 1) throw ArgumentError("fit_random: draws must be at least 1");

    const DesignMatrix design = build_design(data, spec);
    const int nx = static_cast<int>(design.X.cols());
    const int nz = static_cast<int>(design.Z.cols());
    const bool has_alpha = spec.family == Family::nb;
    const DrawMatrix draws = make_draws(design.n_obs, nz, spec.draws, spec.skip);

    // Start from the matching fixed fit with every covariate held fixed.
    ModelSpec warm_spec = spec;
    warm_spec.form = 3;
    warm_spec.covariates = spec.covariates;
    warm_spec.covariates.insert(warm_spec.covariates.end(), spec.random.begin(),
                                spec.random.end());
    warm_spec.random.clear();
    const FitResult warm = fit_fixed(data, warm_spec);

    MixedParams init;
    init.beta_fixed = warm.params.head(nx);
    init.mu_random = warm.params.segment(nx, nz);
    init.sigma_random.resize(nz);
    for (int k = 0; k < nz; ++k)
        init.sigma_random(k) = std::max(0.1 * std::fabs(init.mu_random(k)), 0.05);
    if (has_alpha) init.ln_alpha = warm.params(nx + nz);

    const Objective objective = [&](const Eigen::VectorXd& theta) {
        LikelihoodValue v = simulated_loglik(
            design, MixedParams::unpack(theta, nx, nz, has_alpha), draws, spec.family);
        return ObjectiveValue{v.loglik, std::move(v.gradient)};
    };
    MaximizeResult opt = maximize(objective, init.pack(), spec.tol, spec.max_iter);

    // Spreads are sign-symmetric; report them as non-negative.
    for (int k = 0; k < nz; ++k) opt.x(nx + nz + k) = std::fabs(opt.x(nx + nz + k));

    FitResult fit;
    fit.spec = spec;
    fit.param_names = design.x_names;
    for (const auto& name : design.z_names) fit.param_names.push_back(name);
    for (const auto& name : design.z_names) fit.param_names.push_back("sd:" + name);
    if (has_alpha) fit.param_names.push_back("ln_alpha");
    fit.params = opt.x;
    fit.loglik_convergence = opt.value;
    fit.n_obs = design.n_obs;
    fit.n_params = static_cast<int>(opt.x.size());
    fit.n_fixed = nx;
    fit.n_random = nz;
    fit.iterations = opt.iterations;
    fit.converged = opt.converged;
    fit.grad_max_norm = opt.gradient.lpNorm<Eigen::Infinity>();

    const LikelihoodValue at_opt =
        simulated_loglik(design, MixedParams::unpack(opt.x, nx, nz, has_alpha), draws, spec.family);
    fit.capped = at_opt.capped;

    fill_standard_errors(objective, opt.x, fit);
    if (fit.se_available) {
        for (int k = 0; k < nz; ++k) {
            const int idx = nx + nz + k;
            if (std::fabs(fit.t_stats(idx)) < 1.96)
                fit.effectively_fixed.push_back(design.z_names[k]);
        }
    }

    fit.loglik_null = null_loglik(data, spec);

    // Simulation-error diagnostic: the same optimum under doubled draws.
    const DrawMatrix draws2 = make_draws(design.n_obs, nz, 2 * spec.draws, spec.skip);
    fit.loglik_double_draws =
        simulated_loglik(design, MixedParams::unpack(opt.x, nx, nz, has_alpha), draws2,
                         spec.family)
            .loglik;
    return fit;
}

}  // namespace spfkit
