#pragma once

#include "cbfmt/channel.hpp"
#include "cbfmt/filterbank.hpp"

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>

namespace cbfmt {

struct SingularChannelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EqualizerKind { None, ZF, MMSE_TINV, MMSE_TVAR, Custom };

struct EqualizerCoeffs {
    ComplexVector C;
    EqualizerKind kind = EqualizerKind::Custom;

    static EqualizerCoeffs identity(int M) { return {ComplexVector(M, Complex(1.0)), EqualizerKind::None}; }
};

/// H2 normalized by 1/M so that Y(q) = sum_p X(p) H2(p, q - p) with the dft() convention.
struct ChannelSpectrum2D {
    int M = 0;
    Eigen::MatrixXcd H2;

    Complex at(long p, long q) const { return H2(mod_index(p, M), mod_index(q, M)); }
};

EqualizerCoeffs zf_coeffs(std::span<const Complex> G_eq);

// per-bin power shape of the transmitted signal, sum_k |G(q - kQ)|^2
std::vector<double> tx_spectral_shape(const PrototypePulse& pulse);
// E|X(q)|^2 / L for iid symbols of variance sigma2_a
std::vector<double> tx_spectrum_power(const PrototypePulse& pulse, double sigma2_a);

// C = G_eq* / (|G_eq|^2 + sigma2_n / S(q)), S the spectral shape; zero where S vanishes
EqualizerCoeffs mmse_tinv_coeffs(std::span<const Complex> G_eq, const PrototypePulse& pulse, double sigma2_n);

// uses the last M samples of the realization (the block after the CP)
ChannelSpectrum2D channel_spectrum_2d(const ChannelRealization& ch, int M);

EqualizerCoeffs mmse_tvar_coeffs(const ChannelSpectrum2D& h2, std::span<const double> tx_power, double sigma2_n);

/**
 * Dense map from symbols to analysis outputs through
 * synthesis -> CP -> channel -> CP removal -> C(q) -> matched analysis.
 * Row i*L + m, column k*L + l.
 */
Eigen::MatrixXcd interference_matrix(const PrototypePulse& pulse, const ChannelRealization& ch,
                                     const EqualizerCoeffs& eq, int mu,
                                     const std::optional<PrototypePulse>& pulse_rx = std::nullopt);

struct InterferenceCoefficients {
    int K = 0;
    int L = 0;
    Eigen::MatrixXcd map;
    // r_interf^(k,i)(mN - lN) from column (k,l) to row (i,m), useful diagonal zeroed
    Eigen::MatrixXcd interference;
    Eigen::VectorXcd useful;

    Complex r_interf(int k, int i, int m, int l) const { return interference(i * L + m, k * L + l); }
};

InterferenceCoefficients interference_coefficients(const PrototypePulse& pulse, const ChannelRealization& ch,
                                                   const EqualizerCoeffs& eq, int mu);

} // namespace cbfmt
