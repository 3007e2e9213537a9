#include "cbfmt/channel.hpp"
#include "cbfmt/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cbfmt {

bool ChannelRealization::time_invariant() const {
    for (const auto& tap : alpha)
        for (const auto& v : tap)
            if (v != tap[0]) return false;
    return true;
}

ChannelRealization ChannelRealization::identity(int length) {
    return time_invariant_taps({Complex(1.0)}, length);
}

ChannelRealization ChannelRealization::time_invariant_taps(const ComplexVector& taps, int length) {
    if (taps.empty() || length <= 0) throw std::invalid_argument("need at least one tap and a positive length");
    ChannelRealization ch;
    ch.P = static_cast<int>(taps.size());
    for (const auto& t : taps) {
        ch.alpha.emplace_back(length, t);
        ch.Omega.push_back(std::norm(t));
    }
    return ch;
}

std::vector<double> power_delay_profile(int P, double gamma) {
    if (P < 1) throw std::invalid_argument("P must be >= 1");
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
    std::vector<double> om(P);
    double sum = 0.0;
    for (int l = 0; l < P; ++l) sum += om[l] = std::exp(-l / gamma);
    for (auto& v : om) v /= sum;
    return om;
}

ChannelRealization draw_channel(int P, double gamma, double fD, int length, std::uint64_t seed) {
    if (length <= 0) throw std::invalid_argument("length must be positive");
    ChannelRealization ch;
    ch.P = P;
    ch.gamma = gamma;
    ch.fD = fD;
    ch.seed = seed;
    ch.Omega = power_delay_profile(P, gamma);
    // the quadrature is exact while 2 pi fD n stays well inside the resolved band
    const int J = std::max(64, static_cast<int>(std::ceil(2.0 * kPi * std::abs(fD) * length)) + 32);
    std::vector<double> freq(J);
    for (int j = 0; j < J; ++j) freq[j] = fD * std::cos((2.0 * j + 1.0) * kPi / (2.0 * J));

    Rng rng = make_rng(seed);
    ch.alpha.assign(P, ComplexVector(length));
    ComplexVector c(J), rot(J), cur(J);
    for (int l = 0; l < P; ++l) {
        for (int j = 0; j < J; ++j) {
            c[j] = complex_gaussian(rng, ch.Omega[l] / J);
            rot[j] = std::polar(1.0, 2.0 * kPi * freq[j]);
        }
        for (int n = 0; n < length; ++n) {
            Complex acc{};
            for (int j = 0; j < J; ++j) {
                // direct phase every 64 samples keeps the recurrence from drifting
                cur[j] = (n % 64 == 0) ? std::polar(1.0, 2.0 * kPi * freq[j] * n) : cur[j] * rot[j];
                acc += c[j] * cur[j];
            }
            ch.alpha[l][n] = acc;
        }
    }
    return ch;
}

ComplexVector apply_channel(std::span<const Complex> x_cp, const ChannelRealization& ch, const NoiseSpec& noise) {
    const int len = static_cast<int>(x_cp.size());
    if (ch.length() < len) throw std::invalid_argument("channel realization shorter than the signal");
    if (noise.sigma2_n < 0) throw std::invalid_argument("noise variance must be >= 0");
    ComplexVector y(len);
    for (int n = 0; n < len; ++n) {
        Complex acc{};
        for (int s = 0; s < ch.P && s <= n; ++s) acc += ch.alpha[s][n] * x_cp[n - s];
        y[n] = acc;
    }
    if (noise.sigma2_n > 0) {
        Rng rng = make_rng(noise.seed, 0x6e6f697365ULL);
        for (auto& v : y) v += complex_gaussian(rng, noise.sigma2_n);
    }
    return y;
}

ComplexVector channel_frequency_response(const ChannelRealization& ch, int M, int n) {
    if (ch.P > M) throw std::invalid_argument("more taps than DFT bins");
    ComplexVector h(M);
    for (int s = 0; s < ch.P; ++s) h[s] = ch.alpha[s][n];
    return dft(h, M);
}

} // namespace cbfmt
