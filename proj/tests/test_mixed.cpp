#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "spfkit/data.hpp"
#include "spfkit/errors.hpp"
#include "spfkit/evaluate.hpp"
#include "spfkit/mixed.hpp"
#include "spfkit/numerics.hpp"

using namespace spfkit;
using testutil::make_dataset;

TEST_CASE("halton radical inverse prefixes") {
    CHECK(halton(2, 1) == 0.5);
    CHECK(halton(2, 2) == 0.25);
    CHECK(halton(2, 3) == 0.75);
    CHECK(halton(2, 4) == 0.125);
    CHECK(halton(3, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(halton(3, 2) == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(halton(3, 3) == doctest::Approx(1.0 / 9).epsilon(1e-15));
    for (int i = 1; i <= 500; ++i) {
        const double u = halton(5, i);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
    CHECK_THROWS_AS(halton(2, 0), ArgumentError);
    CHECK_THROWS_AS(halton(1, 3), ArgumentError);
}

TEST_CASE("make_draws construction") {
    SUBCASE("first point of base 2 maps to a zero deviate") {
        const DrawMatrix dm = make_draws(1, 1, 1, 0);
        CHECK(dm.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("identical arguments give bitwise-identical draws") {
        const DrawMatrix a = make_draws(7, 3, 25, 10);
        const DrawMatrix b = make_draws(7, 3, 25, 10);
        REQUIRE(a.z.size() == b.z.size());
        for (std::size_t i = 0; i < a.z.size(); ++i) CHECK(a.z[i] == b.z[i]);
        CHECK(a.bases == std::vector<int>{2, 3, 5});
    }
    SUBCASE("skip shifts the stream") {
        const DrawMatrix a = make_draws(1, 1, 4, 0);
        const DrawMatrix b = make_draws(1, 1, 4, 2);
        CHECK(b.at(0, 0, 0) == doctest::Approx(inv_normal_cdf(halton(2, 3))).epsilon(1e-15));
        CHECK(a.at(0, 2, 0) == b.at(0, 0, 0));
    }
    SUBCASE("observations get contiguous blocks of the stream") {
        const DrawMatrix dm = make_draws(3, 1, 5, 10);
        CHECK(dm.at(2, 1, 0) ==
              doctest::Approx(inv_normal_cdf(halton(2, 10 + 2 * 5 + 2))).epsilon(1e-15));
    }
    SUBCASE("deviates are standard normal in aggregate at 209 x 200") {
        const DrawMatrix dm = make_draws(209, 5, 200, 10);
        for (int d = 0; d < 5; ++d) {
            double sum = 0, sumsq = 0;
            const double count = 209.0 * 200.0;
            for (int i = 0; i < 209; ++i)
                for (int r = 0; r < 200; ++r) {
                    const double z = dm.at(i, r, d);
                    sum += z;
                    sumsq += z * z;
                }
            const double mean = sum / count;
            const double sd = std::sqrt(sumsq / count - mean * mean);
            CHECK(std::fabs(mean) < 0.02);
            CHECK(std::fabs(sd - 1.0) < 0.02);
        }
    }
    SUBCASE("dimension limit") {
        CHECK_THROWS_AS(make_draws(1, 21, 1, 0), ArgumentError);
        CHECK_THROWS_AS(make_draws(1, 1, 0, 0), ArgumentError);
    }
}

namespace {

Dataset mixed_toy_dataset(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<testutil::SegmentSpec> segs;
    for (int i = 0; i < n; ++i) {
        testutil::SegmentSpec s;
        s.aadt = 500 + 4000 * unif(rng);
        s.length = 0.2 + 2.5 * unif(rng);
        s.covariates = {{"shoulder_width", 12 * unif(rng)}};
        s.crashes = static_cast<long long>(6 * unif(rng));
        segs.push_back(s);
    }
    return make_dataset(segs);
}

ModelSpec mixed_toy_spec(Family family = Family::poisson) {
    ModelSpec spec;
    spec.family = family;
    spec.form = 4;
    spec.covariates = {"shoulder_width"};
    spec.random = {"aadt_thousands", "length"};
    return spec;
}

MixedParams mixed_toy_params(bool with_alpha) {
    MixedParams p;
    p.beta_fixed = Eigen::Vector2d(-0.8, -0.05);
    p.mu_random = Eigen::Vector2d(0.25, 0.45);
    p.sigma_random = Eigen::Vector2d(0.12, 0.2);
    if (with_alpha) p.ln_alpha = std::log(0.4);
    return p;
}

}  // namespace

TEST_CASE("simulated loglik degenerates to the fixed loglik at sigma = 0") {
    const Dataset data = mixed_toy_dataset(25, 51);
    const ModelSpec spec = mixed_toy_spec();
    const DesignMatrix d = build_design(data, spec);
    MixedParams p = mixed_toy_params(false);
    p.sigma_random.setZero();
    const DrawMatrix draws = make_draws(d.n_obs, 2, 50, 10);
    const LikelihoodValue sim = simulated_loglik(d, p, draws, Family::poisson);

    // fixed-parameter equivalent: stack [beta, mu] against [X Z]
    ModelSpec f3 = spec;
    f3.form = 3;
    f3.covariates = {"shoulder_width", "aadt_thousands", "length"};
    f3.random.clear();
    const DesignMatrix df = build_design(data, f3);
    Eigen::VectorXd beta(4);
    beta << p.beta_fixed(0), p.beta_fixed(1), p.mu_random(0), p.mu_random(1);
    const LikelihoodValue fixed = poisson_loglik(df, beta);
    CHECK(std::fabs(sim.loglik - fixed.loglik) < 1e-10);
}

TEST_CASE("one draw equals the fixed loglik at the shifted coefficients") {
    const Dataset data = mixed_toy_dataset(10, 52);
    const ModelSpec spec = mixed_toy_spec();
    const DesignMatrix d = build_design(data, spec);
    const MixedParams p = mixed_toy_params(false);
    const DrawMatrix draws = make_draws(d.n_obs, 2, 1, 0);
    const LikelihoodValue sim = simulated_loglik(d, p, draws, Family::poisson);

    double want = 0;
    for (int i = 0; i < d.n_obs; ++i) {
        double eta = d.offset(i) + d.X.row(i).dot(p.beta_fixed);
        for (int k = 0; k < 2; ++k)
            eta += d.Z(i, k) * (p.mu_random(k) + p.sigma_random(k) * draws.at(i, 0, k));
        want += -std::exp(eta) + d.y(i) * eta - log_factorial(d.y(i));
    }
    CHECK(sim.loglik == doctest::Approx(want).epsilon(1e-12));
}

namespace {

// Gauss-Hermite nodes/weights by Golub-Welsch on the Jacobi matrix; the
// quadrature oracle for the one-dimensional mixing integral.
void gauss_hermite(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double off = std::sqrt(k / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    nodes = eig.eigenvalues();
    weights.resize(n);
    for (int k = 0; k < n; ++k) {
        const double v = eig.eigenvectors()(0, k);
        weights(k) = std::sqrt(std::numbers::pi) * v * v;
    }
}

}  // namespace

TEST_CASE("simulated loglik agrees with Gauss-Hermite quadrature") {
    // two observations, one random dimension
    std::vector<testutil::SegmentSpec> segs;
    testutil::SegmentSpec s1;
    s1.aadt = 3000;
    s1.length = 1.4;
    s1.crashes = 3;
    testutil::SegmentSpec s2;
    s2.aadt = 800;
    s2.length = 0.6;
    s2.crashes = 1;
    segs = {s1, s2};
    const Dataset data = make_dataset(segs);

    ModelSpec spec;
    spec.form = 4;
    spec.covariates = {};
    spec.random = {"length"};
    const DesignMatrix d = build_design(data, spec);

    MixedParams p;
    p.beta_fixed = Eigen::VectorXd::Constant(1, 0.2);
    p.mu_random = Eigen::VectorXd::Constant(1, 0.5);
    p.sigma_random = Eigen::VectorXd::Constant(1, 0.35);

    Eigen::VectorXd nodes, weights;
    gauss_hermite(41, nodes, weights);
    double want = 0;
    for (int i = 0; i < 2; ++i) {
        double lik = 0;
        for (int k = 0; k < nodes.size(); ++k) {
            const double eps = std::numbers::sqrt2 * nodes(k);
            const double eta =
                p.beta_fixed(0) + d.Z(i, 0) * (p.mu_random(0) + p.sigma_random(0) * eps);
            const double log_pmf =
                -std::exp(eta) + d.y(i) * eta - log_factorial(d.y(i));
            lik += weights(k) / std::sqrt(std::numbers::pi) * std::exp(log_pmf);
        }
        want += std::log(lik);
    }

    const DrawMatrix draws = make_draws(2, 1, 2000, 10);
    const LikelihoodValue sim = simulated_loglik(d, p, draws, Family::poisson);
    CHECK(std::fabs(sim.loglik - want) < 1e-3);
}

TEST_CASE("simulated gradient matches central finite differences") {
    const Dataset data = mixed_toy_dataset(12, 53);
    std::mt19937_64 rng(54);
    std::normal_distribution<double> jitter(0.0, 0.05);

    for (const Family family : {Family::poisson, Family::nb}) {
        const ModelSpec spec = mixed_toy_spec(family);
        const DesignMatrix d = build_design(data, spec);
        const DrawMatrix draws = make_draws(d.n_obs, 2, 60, 10);
        const bool has_alpha = family == Family::nb;
        const int nx = 2, nz = 2;

        for (int rep = 0; rep < 5; ++rep) {
            MixedParams p = mixed_toy_params(has_alpha);
            for (int j = 0; j < 2; ++j) {
                p.beta_fixed(j) += jitter(rng);
                p.mu_random(j) += jitter(rng);
                p.sigma_random(j) += std::fabs(jitter(rng));
            }
            const Eigen::VectorXd theta = p.pack();
            const LikelihoodValue v = simulated_loglik(d, p, draws, family);
            const Eigen::VectorXd fd = testutil::fd_gradient(
                [&](const Eigen::VectorXd& t) {
                    return simulated_loglik(d, MixedParams::unpack(t, nx, nz, has_alpha), draws,
                                            family)
                        .loglik;
                },
                theta);
            CHECK(testutil::max_rel_err(v.gradient, fd) < 1e-5);
        }
    }
}

TEST_CASE("negating spread components leaves the loglik unchanged") {
    const Dataset data = mixed_toy_dataset(15, 55);
    const ModelSpec spec = mixed_toy_spec();
    const DesignMatrix d = build_design(data, spec);
    const DrawMatrix draws = make_draws(d.n_obs, 2, 40, 10);
    MixedParams p = mixed_toy_params(false);
    const double base = simulated_loglik(d, p, draws, Family::poisson).loglik;
    p.sigma_random(0) = -p.sigma_random(0);
    CHECK(simulated_loglik(d, p, draws, Family::poisson).loglik == doctest::Approx(base));
    p.sigma_random(1) = -p.sigma_random(1);
    CHECK(simulated_loglik(d, p, draws, Family::poisson).loglik == doctest::Approx(base));
}

TEST_CASE("fit_random with no random covariates reduces to the fixed fit") {
    const Dataset data = mixed_toy_dataset(60, 56);
    ModelSpec spec = mixed_toy_spec();
    spec.random.clear();
    const FitResult mixed = fit_random(data, spec);

    ModelSpec f3 = spec;
    f3.form = 3;
    const FitResult fixed = fit_fixed(data, f3);
    CHECK(std::fabs(mixed.loglik_convergence - fixed.loglik_convergence) < 1e-8);
    CHECK(mixed.spec.form == 4);
}

TEST_CASE("fit_random smoke: recovery machinery and diagnostics") {
    SynthTruth truth;
    truth.spec = mixed_toy_spec();
    truth.params = mixed_toy_params(false);
    const std::vector<CovariateSpec> ranges = {
        CovariateSpec::uniform("aadt", 60, 6000),
        CovariateSpec::uniform("length", 0.1, 3.0),
        CovariateSpec::uniform("shoulder_width", 0, 12),
    };
    const Dataset data = synth_generate(truth, 400, 505, ranges);

    ModelSpec spec = mixed_toy_spec();
    spec.draws = 100;
    const FitResult fit = fit_random(data, spec);
    REQUIRE(fit.converged);
    REQUIRE(fit.se_available);
    CHECK(fit.n_params == 6);
    CHECK(fit.n_random == 2);
    // spreads are reported non-negative
    CHECK(fit.params(4) >= 0.0);
    CHECK(fit.params(5) >= 0.0);
    // means land near the truth
    for (int j = 0; j < 2; ++j)
        CHECK(std::fabs(fit.params(2 + j) - truth.params.mu_random(j)) <
              4 * fit.std_errors(2 + j) + 0.05);
    // draw-count diagnostic is reported and small on a desk-scale problem
    REQUIRE(fit.loglik_double_draws.has_value());
    CHECK(std::fabs(*fit.loglik_double_draws - fit.loglik_convergence) < 0.5);

    const FitResult again = fit_random(data, spec);
    for (int j = 0; j < fit.params.size(); ++j) CHECK(fit.params(j) == again.params(j));
}
