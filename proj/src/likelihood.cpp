#include "spfkit/likelihood.hpp"

#include <cmath>

#include "spfkit/errors.hpp"
#include "spfkit/numerics.hpp"
#include "spfkit/parallel.hpp"

namespace spfkit {

namespace {

double clamp_eta(double eta, bool& capped) {
    if (eta > kLinearPredictorCap) {
        capped = true;
        return kLinearPredictorCap;
    }
    if (eta < -kLinearPredictorCap) {
        capped = true;
        return -kLinearPredictorCap;
    }
    return eta;
}

void check_counts(const DesignMatrix& design) {
    for (int i = 0; i < design.n_obs; ++i) {
        const double y = design.y(i);
        if (y < 0 || std::floor(y) != y)
            throw ArgumentError("likelihood: response must be non-negative integers (obs " +
                                std::to_string(i) + ")");
    }
}

// ln Gamma(y+r) - ln Gamma(r) - y ln(r+mu), evaluated as a sum of log1p terms
// so the Poisson limit r -> inf is smooth. Exact because y is an integer.
double log_gamma_ratio_centered(double y, double mu, double r) {
    const auto n = static_cast<long long>(y);
    if (n > 1000000) {  // far outside count-data scale; lgamma is accurate enough here
        return std::lgamma(y + r) - std::lgamma(r) - y * std::log(r + mu);
    }
    double sum = 0;
    for (long long k = 0; k < n; ++k) sum += std::log1p((static_cast<double>(k) - mu) / (r + mu));
    return sum;
}

// psi(y+r) - psi(r) = sum_{k<y} 1/(r+k), exact for integer y.
double digamma_diff(double y, double r) {
    const auto n = static_cast<long long>(y);
    double sum = 0;
    for (long long k = 0; k < n; ++k) sum += 1.0 / (r + static_cast<double>(k));
    return sum;
}

}  // namespace

double nb_per_obs(double y, double eta, double r) {
    const double mu = std::exp(eta);
    return log_gamma_ratio_centered(y, mu, r) - r * std::log1p(mu / r) + y * eta -
           log_factorial(y);
}

double nb_dl_deta(double y, double mu, double r) { return (y - mu) * r / (r + mu); }

double nb_dl_dlnalpha(double y, double mu, double r) {
    const double dl_dr = digamma_diff(y, r) - std::log1p(mu / r) + (mu - y) / (r + mu);
    return -r * dl_dr;
}

MeanResult poisson_mean(const DesignMatrix& design, const Eigen::VectorXd& beta) {
    if (beta.size() != design.X.cols())
        throw ArgumentError("poisson_mean: beta length does not match design columns");
    MeanResult out;
    out.lambda.resize(design.n_obs);
    bool capped = false;
    const Eigen::VectorXd eta = design.offset + design.X * beta;
    for (int i = 0; i < design.n_obs; ++i) out.lambda(i) = std::exp(clamp_eta(eta(i), capped));
    out.capped = capped;
    return out;
}

LikelihoodValue poisson_loglik(const DesignMatrix& design, const Eigen::VectorXd& beta) {
    if (beta.size() != design.X.cols())
        throw ArgumentError("poisson_loglik: beta length does not match design columns");
    check_counts(design);
    const int n = design.n_obs;
    const Eigen::VectorXd eta_raw = design.offset + design.X * beta;

    LikelihoodValue out;
    out.per_obs.resize(n);
    Eigen::VectorXd weight(n);  // d per_obs / d eta
    std::vector<char> capped(n, 0);

    parallel_for(n, [&](int i) {
        bool c = false;
        const double eta = clamp_eta(eta_raw(i), c);
        const double lambda = std::exp(eta);
        const double y = design.y(i);
        out.per_obs(i) = -lambda + y * eta - log_factorial(y);
        weight(i) = c ? 0.0 : y - lambda;
        capped[i] = c ? 1 : 0;
    });

    double ll = 0;
    for (int i = 0; i < n; ++i) ll += out.per_obs(i);
    out.loglik = ll;
    out.gradient = design.X.transpose() * weight;
    for (int i = 0; i < n; ++i) out.capped = out.capped || capped[i];
    return out;
}

LikelihoodValue nb_loglik(const DesignMatrix& design, const Eigen::VectorXd& beta,
                          double ln_alpha) {
    if (beta.size() != design.X.cols())
        throw ArgumentError("nb_loglik: beta length does not match design columns");
    check_counts(design);
    const double alpha = std::exp(ln_alpha);
    const int n = design.n_obs;
    const int p = static_cast<int>(beta.size());

    // Below this dispersion the NB terms are numerically Poisson; evaluate the
    // limit directly and freeze the dispersion gradient.
    if (alpha < 1e-12) {
        LikelihoodValue pois = poisson_loglik(design, beta);
        LikelihoodValue out;
        out.loglik = pois.loglik;
        out.per_obs = std::move(pois.per_obs);
        out.gradient.resize(p + 1);
        out.gradient.head(p) = pois.gradient;
        out.gradient(p) = 0.0;
        out.capped = pois.capped;
        return out;
    }

    const double r = 1.0 / alpha;
    const Eigen::VectorXd eta_raw = design.offset + design.X * beta;

    LikelihoodValue out;
    out.per_obs.resize(n);
    Eigen::VectorXd weight(n);
    Eigen::VectorXd dl_dlnalpha(n);
    std::vector<char> capped(n, 0);

    parallel_for(n, [&](int i) {
        bool c = false;
        const double eta = clamp_eta(eta_raw(i), c);
        const double mu = std::exp(eta);
        const double y = design.y(i);
        out.per_obs(i) = nb_per_obs(y, eta, r);
        weight(i) = c ? 0.0 : nb_dl_deta(y, mu, r);
        dl_dlnalpha(i) = nb_dl_dlnalpha(y, mu, r);
        capped[i] = c ? 1 : 0;
    });

    double ll = 0, ga = 0;
    for (int i = 0; i < n; ++i) {
        ll += out.per_obs(i);
        ga += dl_dlnalpha(i);
    }
    out.loglik = ll;
    out.gradient.resize(p + 1);
    out.gradient.head(p) = design.X.transpose() * weight;
    out.gradient(p) = ga;
    for (int i = 0; i < n; ++i) out.capped = out.capped || capped[i];
    return out;
}

}  // namespace spfkit
