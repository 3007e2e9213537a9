#pragma once

#include "cbfmt/filterbank.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cbfmt {

inline constexpr double kOrthTolerance = 1e-8;

struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SubbandVector {
    int p = 0;
    ComplexVector v;  // v[i] = G(p + i L)
};

struct OrthMatrix {
    int p = 0;
    Eigen::MatrixXcd H;  // N x K, columns scaled by 1/sqrt(N)
};

struct OrthReport {
    double max_isi_residual = 0.0;
    double max_ici_residual = 0.0;
    bool is_orthogonal = false;
    double tolerance = kOrthTolerance;
};

std::vector<SubbandVector> subband_vectors(const PrototypePulse& pulse);
ComplexVector assemble_from_subbands(const std::vector<SubbandVector>& vs, const FilterBankParams& params);

// r^(k,i)(mN) for m in [0, L)
ComplexVector ccf_time(const PrototypePulse& tx, const PrototypePulse& rx, int k, int i);
// (1/N) sum_s G(p+sL+kQ) H(p+sL+iQ), H = conj(G_rx)
ComplexVector ccf_freq(const PrototypePulse& tx, const PrototypePulse& rx, int k, int i);

OrthReport check_gnc(const PrototypePulse& pulse, double tolerance = kOrthTolerance);
// perfect reconstruction for an arbitrary tx/rx pair, all (k, i)
OrthReport check_pr(const PrototypePulse& tx, const PrototypePulse& rx, double tolerance = kOrthTolerance);
// ICI maximum over the full (k, i) grid, for comparison with the reduced form
double ici_residual_full(const PrototypePulse& pulse);

// c(p,k) = (p + kQ)_L, d(p,k) = (p + kQ - c) / L
int orth_c(const FilterBankParams& params, int p, int k);
int orth_d(const FilterBankParams& params, int p, int k);

std::vector<OrthMatrix> build_orth_matrices(const PrototypePulse& pulse);
OrthReport check_matrix_orthogonality(const PrototypePulse& pulse, double tolerance = kOrthTolerance);
bool check_critically_sampled(const PrototypePulse& pulse, double tolerance = kOrthTolerance);

PrototypePulse random_orthogonal_pulse(const FilterBankParams& params, std::uint64_t seed);

// max_{i >= Q} |G(i)| <= 1e-10 max |G|
bool is_frequency_confined(const PrototypePulse& pulse);

PrototypePulse extend_pulse_length(const PrototypePulse& pulse, double alpha1);
PrototypePulse resample_pulse(const PrototypePulse& pulse, int alpha2);

bool check_equivalent_filter_orthogonality(std::span<const Complex> g_eq, const FilterBankParams& params,
                                           double tolerance = kOrthTolerance);

} // namespace cbfmt
