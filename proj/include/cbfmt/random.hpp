#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace cbfmt {

using Rng = std::mt19937_64;

// independent stream per (seed, index) so parallel work is order-independent
inline Rng make_rng(std::uint64_t seed, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x5bd1e995u};
    return Rng(seq);
}

// circular complex Gaussian with E|z|^2 = variance
inline std::complex<double> complex_gaussian(Rng& rng, double variance = 1.0) {
    std::normal_distribution<double> nd(0.0, std::sqrt(variance / 2.0));
    double re = nd(rng);
    double im = nd(rng);
    return {re, im};
}

} // namespace cbfmt
