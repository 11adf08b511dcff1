#include "spfkit/optimize.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "spfkit/data.hpp"
#include "spfkit/errors.hpp"
#include "spfkit/numerics.hpp"

namespace spfkit {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr int kMaxHalvings = 60;

Eigen::MatrixXd numeric_hessian(const Objective& objective, const Eigen::VectorXd& x) {
    const int p = static_cast<int>(x.size());
    Eigen::MatrixXd hess(p, p);
    const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    for (int j = 0; j < p; ++j) {
        const double h = cbrt_eps * std::max(1.0, std::fabs(x(j)));
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        hess.col(j) = (objective(xp).gradient - objective(xm).gradient) / (2.0 * h);
    }
    return 0.5 * (hess + hess.transpose()).eval();
}

}  // namespace

MaximizeResult maximize(const Objective& objective, Eigen::VectorXd init, double tol,
                        int max_iter) {
    const int p = static_cast<int>(init.size());
    MaximizeResult res;
    res.x = std::move(init);

    ObjectiveValue cur = objective(res.x);
    if (!std::isfinite(cur.value))
        throw ComputationError("maximize: objective is not finite at the initial point");

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(p, p);
    // Temper the first step when the gradient is large.
    const double g0 = cur.gradient.lpNorm<Eigen::Infinity>();
    if (g0 > 1.0) H *= 1.0 / g0;
    bool h_scaled = false;
    bool h_fresh = true;  // H carries no curvature information yet

    int iter = 0;
    for (; iter < max_iter; ++iter) {
        const double gmax = cur.gradient.lpNorm<Eigen::Infinity>();
        if (gmax < tol) {
            res.converged = true;
            break;
        }

        const Eigen::VectorXd direction = H * cur.gradient;  // ascent direction
        const double slope = cur.gradient.dot(direction);
        if (!(slope > 0)) {
            // H lost positive definiteness; restart from a scaled identity.
            H = Eigen::MatrixXd::Identity(p, p) / std::max(1.0, gmax);
            h_scaled = false;
            h_fresh = true;
            continue;
        }

        double step = 1.0;
        ObjectiveValue trial;
        Eigen::VectorXd x_new;
        bool accepted = false;
        bool ever_finite = false;
        for (int h = 0; h < kMaxHalvings; ++h) {
            x_new = res.x + step * direction;
            trial = objective(x_new);
            if (std::isfinite(trial.value)) {
                ever_finite = true;
                if (trial.value >= cur.value + kArmijoSlope * step * slope) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        res.trace.push_back({iter, cur.value, gmax, accepted ? step : 0.0});
        if (!accepted || !(trial.value > cur.value)) {
            if (!ever_finite)
                throw ComputationError(
                    "maximize: objective stayed non-finite along the search direction (iter " +
                    std::to_string(iter) + ")");
            // A stale curvature model can shrink steps below the resolution
            // of the objective; retry once along the raw gradient before
            // declaring the search flat.
            if (h_fresh) break;
            H = Eigen::MatrixXd::Identity(p, p) / std::max(1.0, gmax);
            h_scaled = false;
            h_fresh = true;
            continue;
        }
        h_fresh = false;

        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd yv = cur.gradient - trial.gradient;  // = grad(-f) change
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            if (!h_scaled) {
                H = Eigen::MatrixXd::Identity(p, p) * (sy / yv.squaredNorm());
                h_scaled = true;
            }
            const Eigen::VectorXd Hy = H * yv;
            const double yHy = yv.dot(Hy);
            // BFGS update of the inverse Hessian of -loglik.
            H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                 (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        res.x = std::move(x_new);
        cur = std::move(trial);
    }

    // Newton polish: the backtracking quasi-Newton phase can bottom out on
    // the floating-point resolution of the objective before the gradient
    // max-norm reaches tol on badly scaled designs. A few Newton steps
    // against the numeric Hessian close the remaining gap.
    for (int polish = 0; polish < 5; ++polish) {
        if (cur.gradient.lpNorm<Eigen::Infinity>() < tol) break;
        const Eigen::MatrixXd hess = numeric_hessian(objective, res.x);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(-hess);
        if (ldlt.info() != Eigen::Success) break;
        const Eigen::VectorXd newton = ldlt.solve(cur.gradient);
        if (!newton.allFinite()) break;
        double step = 1.0;
        bool improved = false;
        for (int h = 0; h < 30; ++h) {
            const ObjectiveValue trial = objective(res.x + step * newton);
            if (std::isfinite(trial.value) &&
                trial.gradient.lpNorm<Eigen::Infinity>() <
                    cur.gradient.lpNorm<Eigen::Infinity>()) {
                res.x += step * newton;
                cur = trial;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }

    res.value = cur.value;
    res.gradient = cur.gradient;
    res.iterations = iter;
    res.converged = cur.gradient.lpNorm<Eigen::Infinity>() < tol;
    return res;
}

namespace {

Objective make_fixed_objective(const DesignMatrix& design, Family family) {
    if (family == Family::poisson) {
        return [&design](const Eigen::VectorXd& theta) {
            LikelihoodValue v = poisson_loglik(design, theta);
            return ObjectiveValue{v.loglik, std::move(v.gradient)};
        };
    }
    return [&design](const Eigen::VectorXd& theta) {
        const int p = static_cast<int>(theta.size()) - 1;
        LikelihoodValue v = nb_loglik(design, theta.head(p), theta(p));
        return ObjectiveValue{v.loglik, std::move(v.gradient)};
    };
}

double mean_or(const Eigen::VectorXd& v, double fallback) {
    if (v.size() == 0) return fallback;
    return v.mean();
}

Eigen::VectorXd initial_point(const DesignMatrix& design, Family family) {
    const int px = static_cast<int>(design.X.cols());
    const int p = px + (family == Family::nb ? 1 : 0);
    Eigen::VectorXd init = Eigen::VectorXd::Zero(p);
    const double ybar = std::max(design.y.mean(), 1e-2);
    init(0) = std::log(ybar) - mean_or(design.offset, 0.0);
    if (family == Family::nb) init(p - 1) = std::log(0.5);
    return init;
}

}  // namespace

void fill_standard_errors(const Objective& objective, const Eigen::VectorXd& x, FitResult& fit) {
    const int p = static_cast<int>(x.size());
    Eigen::MatrixXd hess(p, p);
    const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    for (int j = 0; j < p; ++j) {
        const double h = cbrt_eps * std::max(1.0, std::fabs(x(j)));
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        hess.col(j) = (objective(xp).gradient - objective(xm).gradient) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();

    const Eigen::MatrixXd neg_hess = -hess;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hess);
    fit.se_available = false;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
        Eigen::VectorXd se(p), t(p);
        bool ok = true;
        for (int j = 0; j < p; ++j) {
            const double v = cov(j, j);
            if (!(v > 0) || !std::isfinite(v)) {
                ok = false;
                break;
            }
            se(j) = std::sqrt(v);
            t(j) = se(j) > 0 ? x(j) / se(j) : 0.0;
        }
        if (ok) {
            fit.std_errors = std::move(se);
            fit.t_stats = std::move(t);
            fit.se_available = true;
        }
    }
    if (!fit.se_available) {
        fit.std_errors.resize(0);
        fit.t_stats.resize(0);
    }
}

FitResult fit_fixed(const Dataset& data, const ModelSpec& spec) {
    if (spec.form < 1 || spec.form > 3)
        throw ArgumentError("fit_fixed: form must be 1, 2, or 3 (use fit_random for form 4)");

    const DesignMatrix design = build_design(data, spec);
    const Objective objective = make_fixed_objective(design, spec.family);
    const MaximizeResult opt =
        maximize(objective, initial_point(design, spec.family), spec.tol, spec.max_iter);

    FitResult fit;
    fit.spec = spec;
    fit.param_names = design.x_names;
    if (spec.family == Family::nb) fit.param_names.push_back("ln_alpha");
    fit.params = opt.x;
    fit.loglik_convergence = opt.value;
    fit.n_obs = design.n_obs;
    fit.n_params = static_cast<int>(opt.x.size());
    fit.n_fixed = static_cast<int>(design.X.cols());
    fit.iterations = opt.iterations;
    fit.converged = opt.converged;
    fit.grad_max_norm = opt.gradient.lpNorm<Eigen::Infinity>();
    fit.capped = spec.family == Family::poisson
                     ? poisson_loglik(design, opt.x).capped
                     : nb_loglik(design, opt.x.head(fit.n_fixed), opt.x(fit.n_params - 1)).capped;

    fill_standard_errors(objective, opt.x, fit);
    fit.loglik_null = null_loglik(data, spec);
    return fit;
}

double null_loglik(const Dataset& data, const ModelSpec& spec) {
    ModelSpec null_spec = spec;
    null_spec.covariates.clear();
    null_spec.random.clear();
    // The intercept-only counterpart: form 1 keeps the exposure offset (the
    // null *is* the model), all other forms reduce to a constant with no
    // offset, i.e. a form-3 design with no covariates.
    null_spec.form = spec.form == 1 ? 1 : 3;

    const DesignMatrix design = build_design(data, null_spec);
    const Objective objective = make_fixed_objective(design, spec.family);
    const MaximizeResult opt =
        maximize(objective, initial_point(design, spec.family), spec.tol, spec.max_iter);
    return opt.value;
}

LrTestResult lr_test(double ll_restricted, double ll_full, int df) {
    if (df < 1) throw ArgumentError("lr_test: df must be at least 1");
    if (ll_full < ll_restricted - 1e-9)
        throw ArgumentError("lr_test: full-model log-likelihood below restricted model");
    const double stat = std::max(0.0, 2.0 * (ll_full - ll_restricted));
    return {stat, chi2_sf(stat, df)};
}

OverdispersionResult overdispersion_test(const FitResult& poisson_fit, const FitResult& nb_fit) {
    if (poisson_fit.spec.family != Family::poisson || nb_fit.spec.family != Family::nb)
        throw ArgumentError("overdispersion_test: expected a Poisson fit and an NB fit");
    if (poisson_fit.spec.form != nb_fit.spec.form ||
        poisson_fit.spec.covariates != nb_fit.spec.covariates ||
        poisson_fit.spec.random != nb_fit.spec.random || poisson_fit.n_obs != nb_fit.n_obs)
        throw ArgumentError("overdispersion_test: fits have different data or mean structure");

    OverdispersionResult res;
    res.statistic = std::max(0.0, 2.0 * (nb_fit.loglik_convergence - poisson_fit.loglik_convergence));
    // alpha = 0 sits on the parameter boundary: the LR statistic is a 50:50
    // mixture of a point mass at zero and chi-square(1).
    res.p_value = 0.5 * chi2_sf(res.statistic, 1.0);
    res.prefer = res.p_value < 0.05 ? Family::nb : Family::poisson;
    return res;
}

}  // namespace spfkit
