#pragma once

#include <vector>

namespace spfkit {

/// Radical inverse of `index` in a prime base, in (0,1). Index 0 maps to 0,
/// which breaks the normal transform, so it is rejected.
double halton(int base, long long index);

/// Standard-normal quasi-random deviates shared by estimation and prediction.
///
/// Dimension d draws from the d-th prime base (2, 3, 5, ...). One global
/// point stream is used: after discarding the first `skip` points,
/// observation i receives points i*n_draws+1 ... (i+1)*n_draws, each mapped
/// through inv_normal_cdf. Fully determined by (n_obs, n_draws, n_dims,
/// skip); no RNG is involved.
struct DrawMatrix {
    int n_obs = 0;
    int n_draws = 0;
    int n_dims = 0;
    int skip = 0;
    std::vector<int> bases;
    std::vector<double> z;  // [(i*n_draws + r)*n_dims + d]

    double at(int obs, int draw, int dim) const {
        return z[static_cast<std::size_t>((obs * n_draws + draw) * n_dims + dim)];
    }
};

DrawMatrix make_draws(int n_obs, int n_dims, int n_draws, int skip);

}  // namespace spfkit
