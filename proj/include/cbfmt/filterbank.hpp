#pragma once

#include "cbfmt/transforms.hpp"

#include <cstdint>
#include <string>

namespace cbfmt {

struct FilterBankParams {
    int K = 0;
    int N = 0;
    int M = 0;
    int mu = 0;
    double T = 1.0;

    // throws std::invalid_argument unless K >= 2, N >= K, K | M, N | M, 0 <= mu < M, T > 0
    static FilterBankParams make(int K, int N, int M, int mu = 0, double T = 1.0);
    void validate() const;

    int L() const { return M / N; }
    int Q() const { return M / K; }
    int Ns() const;

    bool same_bank(const FilterBankParams& o) const { return K == o.K && N == o.N && M == o.M; }
    std::string str() const;
};

enum class Constellation { QPSK, QAM16, QAM64 };

/// a(k, l) stored row-major, K rows of L symbols.
struct SymbolBlock {
    FilterBankParams params;
    ComplexVector a;
    Constellation constellation = Constellation::QPSK;
    double symbol_variance = 1.0;

    Complex& at(int k, int l) { return a[static_cast<std::size_t>(k) * params.L() + l]; }
    const Complex& at(int k, int l) const { return a[static_cast<std::size_t>(k) * params.L() + l]; }

    static SymbolBlock zeros(const FilterBankParams& p);
    // unit average energy constellation points scaled by sqrt(variance)
    static SymbolBlock random(const FilterBankParams& p, Constellation c, std::uint64_t seed,
                              double variance = 1.0);
};

class PrototypePulse {
public:
    PrototypePulse() = default;
    PrototypePulse(const FilterBankParams& params, ComplexVector G);
    static PrototypePulse from_time(const FilterBankParams& params, const ComplexVector& g);

    const FilterBankParams& params() const { return params_; }
    const ComplexVector& G() const { return G_; }
    const ComplexVector& g() const { return g_; }
    Complex G_at(long i) const { return G_[mod_index(i, params_.M)]; }

private:
    FilterBankParams params_;
    ComplexVector G_;
    ComplexVector g_;
};

// frequency-domain fast path
ComplexVector synthesize(const SymbolBlock& block, const PrototypePulse& pulse);
// literal double sum over k, l
ComplexVector synthesize_direct(const SymbolBlock& block, const PrototypePulse& pulse);

// matched analysis: H(q) = conj(G_rx(q)); returns K x L row-major
ComplexVector analyze(std::span<const Complex> y, const PrototypePulse& pulse_rx);
ComplexVector analyze_direct(std::span<const Complex> y, const PrototypePulse& pulse_rx);

ComplexVector add_cp(std::span<const Complex> x, int mu);
ComplexVector remove_cp(std::span<const Complex> x_cp, int mu);

double transmission_rate(const FilterBankParams& params);

} // namespace cbfmt
