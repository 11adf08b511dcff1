#include "spfkit/halton.hpp"

#include "spfkit/errors.hpp"
#include "spfkit/numerics.hpp"
#include "spfkit/parallel.hpp"

namespace spfkit {

namespace {
constexpr int kPrimes[20] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                             31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
}

double halton(int base, long long index) {
    if (base < 2) throw ArgumentError("halton: base must be at least 2");
    if (index < 1) throw ArgumentError("halton: index must be at least 1");
    double result = 0.0;
    double f = 1.0 / base;
    long long i = index;
    while (i > 0) {
        result += f * static_cast<double>(i % base);
        i /= base;
        f /= base;
    }
    return result;
}

DrawMatrix make_draws(int n_obs, int n_dims, int n_draws, int skip) {
    if (n_obs < 1) throw ArgumentError("make_draws: n_obs must be at least 1");
    if (n_draws < 1) throw ArgumentError("make_draws: n_draws must be at least 1");
    if (n_dims < 0 || n_dims > 20)
        throw ArgumentError("make_draws: n_dims must be between 0 and 20 (prime table size)");
    if (skip < 0) throw ArgumentError("make_draws: skip must be non-negative");

    DrawMatrix dm;
    dm.n_obs = n_obs;
    dm.n_draws = n_draws;
    dm.n_dims = n_dims;
    dm.skip = skip;
    for (int d = 0; d < n_dims; ++d) dm.bases.push_back(kPrimes[d]);
    dm.z.resize(static_cast<std::size_t>(n_obs) * n_draws * n_dims);

    parallel_for(n_obs, [&](int i) {
        for (int r = 0; r < n_draws; ++r) {
            const long long index = skip + static_cast<long long>(i) * n_draws + r + 1;
            for (int d = 0; d < n_dims; ++d) {
                dm.z[static_cast<std::size_t>((i * n_draws + r) * n_dims + d)] =
                    inv_normal_cdf(halton(dm.bases[d], index));
            }
        }
    });
    return dm;
}

}  // namespace spfkit
