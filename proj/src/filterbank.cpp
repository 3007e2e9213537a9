#include "cbfmt/filterbank.hpp"
#include "cbfmt/random.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cbfmt {

FilterBankParams FilterBankParams::make(int K, int N, int M, int mu, double T) {
    FilterBankParams p{K, N, M, mu, T};
    p.validate();
    return p;
}

void FilterBankParams::validate() const {
    if (K < 2) throw std::invalid_argument("K must be >= 2");
    if (N < K) throw std::invalid_argument("N must be >= K");
    if (M <= 0 || M % K != 0 || M % N != 0)
        throw std::invalid_argument("M must be divisible by K and N (" + str() + ")");
    if (mu < 0 || mu >= M) throw std::invalid_argument("mu must lie in [0, M)");
    if (!(T > 0)) throw std::invalid_argument("T must be positive");
}

int FilterBankParams::Ns() const { return std::gcd(Q(), L()); }

std::string FilterBankParams::str() const {
    std::ostringstream os;
    os << "K=" << K << " N=" << N << " M=" << M;
    return os.str();
}

SymbolBlock SymbolBlock::zeros(const FilterBankParams& p) {
    SymbolBlock b;
    b.params = p;
    b.a.assign(static_cast<std::size_t>(p.K) * p.L(), Complex{});
    return b;
}

SymbolBlock SymbolBlock::random(const FilterBankParams& p, Constellation c, std::uint64_t seed,
                                double variance) {
    SymbolBlock b = zeros(p);
    b.constellation = c;
    b.symbol_variance = variance;
    int side = c == Constellation::QPSK ? 2 : c == Constellation::QAM16 ? 4 : 8;
    // mean energy of a side x side grid with levels +-1, +-3, ...
    double e = 2.0 * (side * side - 1) / 3.0;
    double scale = std::sqrt(variance / e);
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<int> pick(0, side - 1);
    for (auto& z : b.a) {
        int re = 2 * pick(rng) - (side - 1);
        int im = 2 * pick(rng) - (side - 1);
        z = Complex(re, im) * scale;
    }
    return b;
}

PrototypePulse::PrototypePulse(const FilterBankParams& params, ComplexVector G)
    : params_(params), G_(std::move(G)) {
    params_.validate();
    if (static_cast<int>(G_.size()) != params_.M)
        throw std::invalid_argument("pulse length does not match M");
    require_valid(G_, "pulse");
    g_ = idft(G_, G_.size());
}

PrototypePulse PrototypePulse::from_time(const FilterBankParams& params, const ComplexVector& g) {
    return PrototypePulse(params, dft(g, g.size()));
}

static void check_block(const SymbolBlock& block, const PrototypePulse& pulse) {
    const auto& p = pulse.params();
    if (!block.params.same_bank(p)) throw std::invalid_argument("block and pulse parameters differ");
    if (block.a.size() != static_cast<std::size_t>(p.K) * p.L())
        throw std::invalid_argument("symbol block has wrong dimensions");
}

ComplexVector synthesize(const SymbolBlock& block, const PrototypePulse& pulse) {
    check_block(block, pulse);
    const auto& p = pulse.params();
    const int K = p.K, L = p.L(), M = p.M, Q = p.Q();
    ComplexVector X(M, Complex{});
    for (int k = 0; k < K; ++k) {
        ComplexVector A = dft(std::span<const Complex>(block.a.data() + static_cast<std::size_t>(k) * L, L), L);
        for (int q = 0; q < M; ++q) {
            long r = mod_index(q - static_cast<long>(k) * Q, M);
            Complex Gr = pulse.G()[r];
            if (Gr != Complex{}) X[q] += Gr * A[r % L];
        }
    }
    return idft(X, M);
}

ComplexVector synthesize_direct(const SymbolBlock& block, const PrototypePulse& pulse) {
    check_block(block, pulse);
    const auto& p = pulse.params();
    const int K = p.K, L = p.L(), M = p.M, N = p.N;
    const auto& g = pulse.g();
    ComplexVector x(M, Complex{});
    for (int n = 0; n < M; ++n) {
        Complex acc{};
        for (int k = 0; k < K; ++k) {
            double ph = 2.0 * kPi * static_cast<double>(mod_index(static_cast<long>(n) * k, K)) / K;
            Complex w(std::cos(ph), std::sin(ph));
            Complex s{};
            for (int l = 0; l < L; ++l) s += block.at(k, l) * g[mod_index(n - static_cast<long>(l) * N, M)];
            acc += s * w;
        }
        x[n] = acc;
    }
    return x;
}

ComplexVector analyze(std::span<const Complex> y, const PrototypePulse& pulse_rx) {
    const auto& p = pulse_rx.params();
    const int K = p.K, L = p.L(), M = p.M, N = p.N, Q = p.Q();
    if (static_cast<int>(y.size()) != M) throw std::invalid_argument("analyze: length must equal M");
    ComplexVector Y = dft(y, M);
    ComplexVector z(static_cast<std::size_t>(K) * L);
    ComplexVector fold(L);
    for (int i = 0; i < K; ++i) {
        std::fill(fold.begin(), fold.end(), Complex{});
        for (int q = 0; q < M; ++q) {
            Complex Gq = pulse_rx.G()[q];
            if (Gq == Complex{}) continue;
            fold[q % L] += Y[(q + static_cast<long>(i) * Q) % M] * std::conj(Gq);
        }
        ComplexVector zi = idft(fold, L);
        for (int m = 0; m < L; ++m) z[static_cast<std::size_t>(i) * L + m] = zi[m] / static_cast<double>(N);
    }
    return z;
}

ComplexVector analyze_direct(std::span<const Complex> y, const PrototypePulse& pulse_rx) {
    const auto& p = pulse_rx.params();
    const int K = p.K, L = p.L(), M = p.M, N = p.N;
    if (static_cast<int>(y.size()) != M) throw std::invalid_argument("analyze: length must equal M");
    const auto& g = pulse_rx.g();
    ComplexVector z(static_cast<std::size_t>(K) * L);
    for (int i = 0; i < K; ++i) {
        for (int m = 0; m < L; ++m) {
            Complex acc{};
            for (int l = 0; l < M; ++l) {
                double ph = -2.0 * kPi * static_cast<double>(mod_index(static_cast<long>(l) * i, K)) / K;
                // h(n) = conj(g(-n))
                Complex h = std::conj(g[mod_index(-(static_cast<long>(m) * N - l), M)]);
                acc += y[l] * Complex(std::cos(ph), std::sin(ph)) * h;
            }
            z[static_cast<std::size_t>(i) * L + m] = acc;
        }
    }
    return z;
}

ComplexVector add_cp(std::span<const Complex> x, int mu) {
    if (mu < 0 || mu >= static_cast<int>(x.size())) throw std::invalid_argument("add_cp: mu out of range");
    ComplexVector out;
    out.reserve(x.size() + mu);
    out.insert(out.end(), x.end() - mu, x.end());
    out.insert(out.end(), x.begin(), x.end());
    return out;
}

ComplexVector remove_cp(std::span<const Complex> x_cp, int mu) {
    if (mu < 0 || 2 * static_cast<std::size_t>(mu) >= x_cp.size())
        throw std::invalid_argument("remove_cp: mu out of range");
    return ComplexVector(x_cp.begin() + mu, x_cp.end());
}

double transmission_rate(const FilterBankParams& params) {
    params.validate();
    return static_cast<double>(params.K) * params.L() / ((params.M + params.mu) * params.T);
}

} // namespace cbfmt
