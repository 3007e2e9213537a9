#pragma once

#include "cbfmt/channel.hpp"
#include "cbfmt/equalization.hpp"
#include "cbfmt/filterbank.hpp"
#include "cbfmt/pulse_design.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace cbfmt {

inline constexpr double kSinrCap = 1e12;

// in-band over [0, 1/K] versus the rest of the period, zero-padded DFT + trapezoid
double ibob_ratio(const PrototypePulse& pulse, int oversample = 16);
inline double to_db(double linear) { return 10.0 * std::log10(linear); }

/**
 * Exact band energies of a pulse supported on bins [0, Q2): in = G^H A G,
 * out = G^H (I/M - A) G over the support.
 */
class IbobQuadraticForm {
public:
    IbobQuadraticForm(const FilterBankParams& params, int Q2);
    double in_band(const ComplexVector& G) const;
    double out_band(const ComplexVector& G) const;
    double ratio_db(const ComplexVector& G) const;
    // ratio in dB and its gradient dF/dRe G + i dF/dIm G
    double ratio_db_grad(const ComplexVector& G, ComplexVector& grad) const;
    int support() const { return Q2_; }

private:
    FilterBankParams params_;
    int Q2_;
    Eigen::MatrixXcd A_, Abar_;
};

Objective ibob_objective(const FilterBankParams& params, int Q2);

struct LinkReport {
    FilterBankParams params;
    int P = 0;
    double gamma = 0.0, fD = 0.0;
    std::uint64_t channel_seed = 0;
    double sigma2_n = 0.0, sigma2_a = 1.0;
    // K x L, entry (k, l)
    Eigen::MatrixXd sinr, useful_power, isi_power, ici_power, noise_power;
    double rate_bps = 0.0;
};

// noise variance at each analysis output for unit white noise; depends only on the sub-channel
std::vector<double> noise_gain(const PrototypePulse& pulse_rx, const EqualizerCoeffs& eq);

LinkReport link_report(const PrototypePulse& pulse, const ChannelRealization& ch, const EqualizerCoeffs& eq,
                       double sigma2_n, double sigma2_a);
Eigen::MatrixXd sinr_grid(const PrototypePulse& pulse, const ChannelRealization& ch, const EqualizerCoeffs& eq,
                          double sigma2_n, double sigma2_a);

double achievable_rate(const Eigen::MatrixXd& sinr, const FilterBankParams& params);

enum class EqualizerChoice { ZF, MMSE };

// fs = 20 MHz, mu = 8, P = 5, gamma = 2, SNR 40 dB on a unit-power signal, fD T = 2e-4
struct ChannelPreset {
    double T = 5e-8;
    int mu = 8;
    int P = 5;
    double gamma = 2.0;
    double snr_db = 40.0;
    double sigma2_a = 1.0;
    double fD = 2e-4;
    int n_realizations = 200;
    EqualizerChoice equalizer = EqualizerChoice::MMSE;

    double sigma2_n() const { return std::pow(10.0, -snr_db / 10.0); }
};

// equalizer for one realization under the preset
EqualizerCoeffs preset_equalizer(const PrototypePulse& pulse, const ChannelRealization& ch, const ChannelPreset& preset);

std::uint64_t realization_seed(std::uint64_t seed, int index);

struct CapacityStats {
    double mean_rate = 0.0;
    double std_rate = 0.0;
    double mean_sinr_db = 0.0;      // average of 10 log10 SINR over entries and realizations
    double mean_sinr_linear = 0.0;  // average of linear SINR
    std::vector<double> rates;
    double standard_error() const { return rates.empty() ? 0.0 : std_rate / std::sqrt(static_cast<double>(rates.size())); }
};

// pulse params are re-targeted to the preset's mu and T
PrototypePulse with_link_timing(const PrototypePulse& pulse, const ChannelPreset& preset);

CapacityStats average_capacity(const PrototypePulse& pulse, const ChannelPreset& preset, int n_realizations,
                               std::uint64_t seed, int threads = 1);

// mean rate in Mbit/s over a fixed batch of realizations
// realizations first_index .. first_index + batch - 1 of the seed's sequence
Objective capacity_objective(const FilterBankParams& params, const ChannelPreset& preset, int batch,
                             std::uint64_t seed, int first_index = 0);

struct CapacityDesignOptions {
    int batch = 16;
    int max_iterations = 40;
    std::uint64_t seed = 7;
    PulseMode mode = PulseMode::Real;
    int restarts = 1;  // restart 0 starts from the RRC angles
    bool per_realization = false;
    int threads = 1;
};

DesignResult design_capacity_pulse(const FilterBankParams& params, const ChannelPreset& preset,
                                   const CapacityDesignOptions& opts);

struct SweepRow {
    double fD = 0.0;
    std::string pulse_name;
    double mean_rate_bps = 0.0;
    double std_rate_bps = 0.0;
    int n_realizations = 0;
};

struct NamedPulse {
    std::string name;
    PrototypePulse pulse;
};

std::vector<SweepRow> doppler_sweep(const std::vector<NamedPulse>& pulses, const std::vector<double>& fD_grid,
                                    const ChannelPreset& preset, std::uint64_t seed, int threads = 1);

} // namespace cbfmt
