#pragma once

#include <cstdint>
#include <vector>

namespace spfkit {

/// SplitMix64 generator (Vigna's public-domain mixer). The sequence for a
/// given seed is part of the dataset-splitting contract: partitions written
/// by one implementation must be reproducible by another, so the algorithm
/// is fixed here rather than delegated to std::mt19937.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) by rejection, no modulo bias.
    std::uint64_t next_below(std::uint64_t bound);

private:
    std::uint64_t state_;
};

/// Fisher-Yates permutation of {0,...,n-1} driven by SplitMix64(seed).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Standard normal CDF, erfc-based.
double normal_cdf(double x);

/// Standard normal quantile. Rational initial guess (Acklam) polished by one
/// Halley step against the erfc-based CDF; absolute error well below 1e-9.
/// Throws DomainError unless 0 < u < 1.
double inv_normal_cdf(double u);

/// Regularized lower incomplete gamma P(a, x), series/continued-fraction
/// evaluation, absolute error < 1e-12 over the tested range.
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Upper-tail probability of a chi-square variate: P(X > x) with df degrees
/// of freedom. x < 0 is treated as 0 (probability 1).
double chi2_sf(double x, double df);

/// ln(y!) for integer y >= 0, via std::lgamma.
double log_factorial(double y);

}  // namespace spfkit
