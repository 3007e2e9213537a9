#include "cbfmt/equalization.hpp"

#include <cmath>

namespace cbfmt {

EqualizerCoeffs zf_coeffs(std::span<const Complex> G_eq) {
    require_valid(G_eq, "zf_coeffs");
    EqualizerCoeffs eq;
    eq.kind = EqualizerKind::ZF;
    eq.C.resize(G_eq.size());
    for (std::size_t q = 0; q < G_eq.size(); ++q) {
        if (G_eq[q] == Complex{}) throw SingularChannelError("zero-forcing: channel has a zero at bin " + std::to_string(q));
        eq.C[q] = 1.0 / G_eq[q];
    }
    return eq;
}

std::vector<double> tx_spectral_shape(const PrototypePulse& pulse) {
    const auto& pr = pulse.params();
    std::vector<double> S(pr.M, 0.0);
    for (int q = 0; q < pr.M; ++q)
        for (int k = 0; k < pr.K; ++k) S[q] += std::norm(pulse.G_at(q - static_cast<long>(k) * pr.Q()));
    return S;
}

std::vector<double> tx_spectrum_power(const PrototypePulse& pulse, double sigma2_a) {
    auto S = tx_spectral_shape(pulse);
    for (auto& v : S) v *= sigma2_a;
    return S;
}

EqualizerCoeffs mmse_tinv_coeffs(std::span<const Complex> G_eq, const PrototypePulse& pulse, double sigma2_n) {
    const int M = pulse.params().M;
    if (static_cast<int>(G_eq.size()) != M) throw std::invalid_argument("mmse: G_eq length must equal M");
    if (sigma2_n < 0) throw std::invalid_argument("mmse: negative noise variance");
    auto S = tx_spectral_shape(pulse);
    const double floor = 1e-300;
    EqualizerCoeffs eq;
    eq.kind = EqualizerKind::MMSE_TINV;
    eq.C.assign(M, Complex{});
    for (int q = 0; q < M; ++q) {
        if (S[q] <= floor) continue;
        eq.C[q] = std::conj(G_eq[q]) / (std::norm(G_eq[q]) + sigma2_n / S[q]);
    }
    return eq;
}

ChannelSpectrum2D channel_spectrum_2d(const ChannelRealization& ch, int M) {
    if (ch.P > M || ch.length() < M) throw std::invalid_argument("realization does not cover an M-sample block");
    const int off = ch.length() - M;
    ChannelSpectrum2D out;
    out.M = M;
    out.H2.setZero(M, M);
    auto plan = FftPlan::get(M);
    ComplexVector row(M);
    const double inv = 1.0 / M;
    for (int s = 0; s < ch.P; ++s) {
        for (int n = 0; n < M; ++n) row[n] = ch.alpha[s][off + n];
        plan->forward(row.data());
        for (int p = 0; p < M; ++p) {
            double a = -2.0 * kPi * static_cast<double>((static_cast<long>(s) * p) % M) / M;
            Complex w = std::polar(inv, a);
            for (int q = 0; q < M; ++q) out.H2(p, q) += w * row[q];
        }
    }
    return out;
}

EqualizerCoeffs mmse_tvar_coeffs(const ChannelSpectrum2D& h2, std::span<const double> tx_power, double sigma2_n) {
    const int M = h2.M;
    if (static_cast<int>(tx_power.size()) != M) throw std::invalid_argument("mmse: spectrum length must equal M");
    EqualizerCoeffs eq;
    eq.kind = EqualizerKind::MMSE_TVAR;
    eq.C.assign(M, Complex{});
    for (int q = 0; q < M; ++q) {
        double ici = 0.0;
        for (int p = 0; p < M; ++p)
            if (p != q) ici += tx_power[p] * std::norm(h2.at(p, q - p));
        Complex D = h2.H2(q, 0);
        double den = std::norm(D) * tx_power[q] + ici + sigma2_n;
        if (den > 0) eq.C[q] = std::conj(D) * tx_power[q] / den;
    }
    return eq;
}

Eigen::MatrixXcd interference_matrix(const PrototypePulse& pulse, const ChannelRealization& ch,
                                     const EqualizerCoeffs& eq, int mu, const std::optional<PrototypePulse>& pulse_rx) {
    const auto& pr = pulse.params();
    const int K = pr.K, L = pr.L(), M = pr.M, N = pr.N, Q = pr.Q();
    if (static_cast<int>(eq.C.size()) != M) throw std::invalid_argument("equalizer length must equal M");
    if (ch.length() != M + mu) throw std::invalid_argument("channel realization must span M + mu samples");
    const PrototypePulse& rx = pulse_rx ? *pulse_rx : pulse;
    const auto& g = pulse.g();
    auto plan = FftPlan::get(M);
    auto planL = FftPlan::get(L);

    // receiver weights folded per output sub-channel: W_i(q) = C(q + iQ) conj(G_rx(q))
    Eigen::MatrixXcd out(K * L, K * L);
    ComplexVector x(M), fold(L), Y(M);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            for (int n = 0; n < M; ++n) {
                double a = 2.0 * kPi * static_cast<double>((static_cast<long>(n) * k) % K) / K;
                x[n] = g[mod_index(n - static_cast<long>(l) * N, M)] * std::polar(1.0, a);
            }
            ComplexVector y = remove_cp(apply_channel(add_cp(x, mu), ch), mu);
            std::copy(y.begin(), y.end(), Y.begin());
            plan->forward(Y.data());
            for (int q = 0; q < M; ++q) Y[q] *= eq.C[q];
            for (int i = 0; i < K; ++i) {
                std::fill(fold.begin(), fold.end(), Complex{});
                for (int q = 0; q < M; ++q) {
                    Complex Gq = rx.G()[q];
                    if (Gq == Complex{}) continue;
                    fold[q % L] += Y[(q + static_cast<long>(i) * Q) % M] * std::conj(Gq);
                }
                planL->inverse(fold.data());
                for (int m = 0; m < L; ++m) out(i * L + m, k * L + l) = fold[m] / static_cast<double>(L * N);
            }
        }
    }
    return out;
}

InterferenceCoefficients interference_coefficients(const PrototypePulse& pulse, const ChannelRealization& ch,
                                                   const EqualizerCoeffs& eq, int mu) {
    InterferenceCoefficients r;
    r.K = pulse.params().K;
    r.L = pulse.params().L();
    r.map = interference_matrix(pulse, ch, eq, mu);
    r.useful = r.map.diagonal();
    r.interference = r.map;
    r.interference.diagonal().setZero();
    return r;
}

} // namespace cbfmt
