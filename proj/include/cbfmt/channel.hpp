#pragma once

#include "cbfmt/transforms.hpp"

#include <cstdint>
#include <vector>

namespace cbfmt {

struct ChannelRealization {
    int P = 0;
    double gamma = 0.0;
    double fD = 0.0;  // Doppler times sampling period
    std::uint64_t seed = 0;
    std::vector<double> Omega;
    std::vector<ComplexVector> alpha;  // alpha[s][n], n over the CP + block segment

    int length() const { return alpha.empty() ? 0 : static_cast<int>(alpha[0].size()); }
    bool time_invariant() const;

    static ChannelRealization identity(int length);
    // frozen taps, e.g. an equivalent D/A-A/D filter
    static ChannelRealization time_invariant_taps(const ComplexVector& taps, int length);
};

struct NoiseSpec {
    double sigma2_n = 0.0;
    std::uint64_t seed = 0;
};

// Omega_l proportional to exp(-l / gamma), summing to one
std::vector<double> power_delay_profile(int P, double gamma);

/**
 * Rayleigh taps with Jakes spectrum. Each tap is a Gauss-Chebyshev sum of
 * J Doppler components: alpha(n) = sum_j c_j exp(i 2 pi fD cos(phi_j) n),
 * phi_j = (2j+1) pi / 2J, c_j ~ CN(0, Omega / J). Its autocorrelation is the
 * J-point quadrature of Omega J0(2 pi fD n).
 */
ChannelRealization draw_channel(int P, double gamma, double fD, int length, std::uint64_t seed);

// y(n) = sum_s alpha_s(n) x(n - s) over the segment, plus CN(0, sigma2_n) noise
ComplexVector apply_channel(std::span<const Complex> x_cp, const ChannelRealization& ch, const NoiseSpec& noise = {});

// M-point DFT of the taps frozen at segment sample n
ComplexVector channel_frequency_response(const ChannelRealization& ch, int M, int n);

} // namespace cbfmt
