#include "cbfmt/orthogonality.hpp"
#include "cbfmt/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cbfmt {

namespace {

void check_ki(const FilterBankParams& p, int k, int i) {
    if (k < 0 || k >= p.K || i < 0 || i >= p.K)
        throw std::invalid_argument("sub-channel index outside [0, K)");
}

ComplexVector modulate(const ComplexVector& x, int k, int K) {
    ComplexVector out(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        double ph = 2.0 * kPi * static_cast<double>((static_cast<long>(n) * k) % K) / K;
        out[n] = x[n] * Complex(std::cos(ph), std::sin(ph));
    }
    return out;
}

bool is_integer(double v) { return std::abs(v - std::round(v)) < 1e-9; }

} // namespace

std::vector<SubbandVector> subband_vectors(const PrototypePulse& pulse) {
    const auto& pr = pulse.params();
    const int L = pr.L(), N = pr.N;
    std::vector<SubbandVector> out(L);
    for (int p = 0; p < L; ++p) {
        out[p].p = p;
        out[p].v.resize(N);
        for (int i = 0; i < N; ++i) out[p].v[i] = pulse.G()[p + i * L];
    }
    return out;
}

ComplexVector assemble_from_subbands(const std::vector<SubbandVector>& vs, const FilterBankParams& params) {
    const int L = params.L(), N = params.N;
    if (static_cast<int>(vs.size()) != L) throw std::invalid_argument("need exactly L subband vectors");
    ComplexVector G(params.M);
    for (const auto& sv : vs) {
        if (sv.p < 0 || sv.p >= L || static_cast<int>(sv.v.size()) != N)
            throw std::invalid_argument("malformed subband vector");
        for (int i = 0; i < N; ++i) G[sv.p + i * L] = sv.v[i];
    }
    return G;
}

ComplexVector ccf_time(const PrototypePulse& tx, const PrototypePulse& rx, int k, int i) {
    if (!tx.params().same_bank(rx.params())) throw std::invalid_argument("ccf: parameter mismatch");
    const auto& p = tx.params();
    check_ki(p, k, i);
    const int M = p.M;
    ComplexVector h(M);
    for (int n = 0; n < M; ++n) h[n] = std::conj(rx.g()[mod_index(-n, M)]);
    ComplexVector r = cyclic_convolve(modulate(tx.g(), k, p.K), modulate(h, i, p.K));
    ComplexVector out(p.L());
    for (int m = 0; m < p.L(); ++m) out[m] = r[static_cast<std::size_t>(m) * p.N];
    return out;
}

ComplexVector ccf_freq(const PrototypePulse& tx, const PrototypePulse& rx, int k, int i) {
    if (!tx.params().same_bank(rx.params())) throw std::invalid_argument("ccf: parameter mismatch");
    const auto& pr = tx.params();
    check_ki(pr, k, i);
    const int L = pr.L(), N = pr.N, Q = pr.Q();
    ComplexVector R(L);
    for (int p = 0; p < L; ++p) {
        Complex acc{};
        for (int s = 0; s < N; ++s)
            acc += tx.G_at(p + s * L + static_cast<long>(k) * Q) *
                   std::conj(rx.G_at(p + s * L + static_cast<long>(i) * Q));
        R[p] = acc / static_cast<double>(N);
    }
    return R;
}

OrthReport check_gnc(const PrototypePulse& pulse, double tolerance) {
    const auto& pr = pulse.params();
    const int L = pr.L(), N = pr.N, Q = pr.Q(), K = pr.K;
    OrthReport rep;
    rep.tolerance = tolerance;
    for (int k = 0; k < K; ++k) {
        for (int p = 0; p < L; ++p) {
            double e = 0.0;
            for (int s = 0; s < N; ++s) e += std::norm(pulse.G_at(p + s * L + static_cast<long>(k) * Q));
            rep.max_isi_residual = std::max(rep.max_isi_residual, std::abs(e / N - 1.0));
        }
    }
    // reduced ICI form: only the offset kQ between the two vectors matters
    for (int k = 1; k < K; ++k) {
        for (int p = 0; p < L; ++p) {
            Complex acc{};
            for (int s = 0; s < N; ++s)
                acc += pulse.G_at(p + s * L) * std::conj(pulse.G_at(p + s * L + static_cast<long>(k) * Q));
            rep.max_ici_residual = std::max(rep.max_ici_residual, std::abs(acc) / N);
        }
    }
    rep.is_orthogonal = rep.max_isi_residual <= tolerance && rep.max_ici_residual <= tolerance;
    return rep;
}

OrthReport check_pr(const PrototypePulse& tx, const PrototypePulse& rx, double tolerance) {
    const auto& pr = tx.params();
    OrthReport rep;
    rep.tolerance = tolerance;
    for (int k = 0; k < pr.K; ++k) {
        for (int i = 0; i < pr.K; ++i) {
            ComplexVector R = ccf_freq(tx, rx, k, i);
            for (const auto& v : R) {
                if (k == i)
                    rep.max_isi_residual = std::max(rep.max_isi_residual, std::abs(v - 1.0));
                else
                    rep.max_ici_residual = std::max(rep.max_ici_residual, std::abs(v));
            }
        }
    }
    rep.is_orthogonal = rep.max_isi_residual <= tolerance && rep.max_ici_residual <= tolerance;
    return rep;
}

double ici_residual_full(const PrototypePulse& pulse) {
    const auto& pr = pulse.params();
    double worst = 0.0;
    for (int k = 0; k < pr.K; ++k)
        for (int i = 0; i < pr.K; ++i) {
            if (k == i) continue;
            for (const auto& v : ccf_freq(pulse, pulse, k, i)) worst = std::max(worst, std::abs(v));
        }
    return worst;
}

int orth_c(const FilterBankParams& params, int p, int k) {
    return static_cast<int>(mod_index(p + static_cast<long>(k) * params.Q(), params.L()));
}

int orth_d(const FilterBankParams& params, int p, int k) {
    return static_cast<int>((p + static_cast<long>(k) * params.Q() - orth_c(params, p, k)) / params.L());
}

std::vector<OrthMatrix> build_orth_matrices(const PrototypePulse& pulse) {
    const auto& pr = pulse.params();
    const int N = pr.N, K = pr.K, Ns = pr.Ns();
    auto vs = subband_vectors(pulse);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    std::vector<OrthMatrix> out(Ns);
    for (int p = 0; p < Ns; ++p) {
        out[p].p = p;
        out[p].H.resize(N, K);
        for (int j = 0; j < K; ++j) {
            ComplexVector col = cyclic_shift(vs[orth_c(pr, p, j)].v, orth_d(pr, p, j));
            for (int i = 0; i < N; ++i) out[p].H(i, j) = col[i] * scale;
        }
    }
    return out;
}

OrthReport check_matrix_orthogonality(const PrototypePulse& pulse, double tolerance) {
    OrthReport rep;
    rep.tolerance = tolerance;
    for (const auto& m : build_orth_matrices(pulse)) {
        Eigen::MatrixXcd gram = m.H.adjoint() * m.H;
        for (Eigen::Index a = 0; a < gram.rows(); ++a)
            for (Eigen::Index b = 0; b < gram.cols(); ++b) {
                if (a == b)
                    rep.max_isi_residual = std::max(rep.max_isi_residual, std::abs(gram(a, b) - 1.0));
                else
                    rep.max_ici_residual = std::max(rep.max_ici_residual, std::abs(gram(a, b)));
            }
    }
    rep.is_orthogonal = rep.max_isi_residual <= tolerance && rep.max_ici_residual <= tolerance;
    return rep;
}

bool check_critically_sampled(const PrototypePulse& pulse, double tolerance) {
    const auto& pr = pulse.params();
    if (pr.K != pr.N) throw std::invalid_argument("unit-modulus DFT test needs K == N");
    const double scale = 1.0 / std::sqrt(static_cast<double>(pr.N));
    for (const auto& sv : subband_vectors(pulse)) {
        for (const auto& lam : dft(sv.v, sv.v.size()))
            if (std::abs(std::abs(lam) * scale - 1.0) > tolerance) return false;
    }
    return true;
}

PrototypePulse random_orthogonal_pulse(const FilterBankParams& params, std::uint64_t seed) {
    params.validate();
    const int N = params.N, L = params.L(), Q = params.Q(), M = params.M, Ns = params.Ns();
    const int per = L / Ns;  // distinct vectors per matrix
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
    ComplexVector G(M);
    for (int p0 = 0; p0 < Ns; ++p0) {
        // first column of a random unitary circulant, scaled so that ||w||^2 = N
        ComplexVector lam(N);
        for (auto& z : lam) {
            double ph = uni(rng);
            z = {std::cos(ph), std::sin(ph)};
        }
        ComplexVector w = idft(lam, N);
        for (auto& z : w) z *= std::sqrt(static_cast<double>(N));
        for (int a = 0; a < per; ++a)
            for (int b = 0; b < N; ++b)
                G[mod_index(p0 + static_cast<long>(a) * Q + static_cast<long>(b) * L, M)] = w[(a + b) % N];
    }
    return PrototypePulse(params, std::move(G));
}

bool is_frequency_confined(const PrototypePulse& pulse) {
    const auto& G = pulse.G();
    const int Q = pulse.params().Q();
    double peak = 0.0, tail = 0.0;
    for (int i = 0; i < static_cast<int>(G.size()); ++i) {
        peak = std::max(peak, std::abs(G[i]));
        if (i >= Q) tail = std::max(tail, std::abs(G[i]));
    }
    return tail <= 1e-10 * peak;
}

static void require_mother(const PrototypePulse& pulse, const char* theorem) {
    if (!is_frequency_confined(pulse))
        throw PreconditionError(std::string(theorem) + ": pulse is not confined to its first Q bins");
    auto rep = check_gnc(pulse);
    if (!rep.is_orthogonal) throw PreconditionError(std::string(theorem) + ": mother pulse is not orthogonal");
}

PrototypePulse extend_pulse_length(const PrototypePulse& pulse, double alpha1) {
    const auto& pr = pulse.params();
    if (!(alpha1 > 0) || !is_integer(alpha1 * pr.K) || !is_integer(alpha1 * pr.N) || !is_integer(alpha1 * pr.M))
        throw std::invalid_argument("alpha1 must make alpha1*K, alpha1*N, alpha1*M integers");
    auto np = FilterBankParams::make(static_cast<int>(std::lround(alpha1 * pr.K)),
                                     static_cast<int>(std::lround(alpha1 * pr.N)),
                                     static_cast<int>(std::lround(alpha1 * pr.M)), pr.mu, pr.T);
    require_mother(pulse, "length extension (constant Q)");
    ComplexVector G(np.M);
    const double s = std::sqrt(alpha1);
    for (int i = 0; i < pr.Q(); ++i) G[i] = s * pulse.G()[i];
    return PrototypePulse(np, std::move(G));
}

PrototypePulse resample_pulse(const PrototypePulse& pulse, int alpha2) {
    const auto& pr = pulse.params();
    if (alpha2 < 1 || pr.Q() % alpha2 != 0) throw std::invalid_argument("alpha2 must divide Q");
    if (pr.L() % alpha2 != 0) throw std::invalid_argument("alpha2 must divide L");
    auto np = FilterBankParams::make(alpha2 * pr.K, alpha2 * pr.N, pr.M, pr.mu, pr.T);
    require_mother(pulse, "frequency resampling (constant M)");
    ComplexVector G(pr.M);
    const double s = std::sqrt(static_cast<double>(alpha2));
    for (int i = 0; i < pr.Q() / alpha2; ++i) G[i] = s * pulse.G()[static_cast<std::size_t>(alpha2) * i];
    return PrototypePulse(np, std::move(G));
}

bool check_equivalent_filter_orthogonality(std::span<const Complex> g_eq, const FilterBankParams& params,
                                           double tolerance) {
    const int M = params.M;
    if (g_eq.empty() || static_cast<int>(g_eq.size()) > M)
        throw std::invalid_argument("equivalent filter must have 1..M taps");
    ComplexVector g(M), gm(M);
    std::copy(g_eq.begin(), g_eq.end(), g.begin());
    for (int n = 0; n < M; ++n) gm[n] = std::conj(g[mod_index(-n, M)]);
    ComplexVector c = cyclic_convolve(g, gm);
    for (int m = 0; m < params.L(); ++m) {
        Complex v = c[static_cast<std::size_t>(m) * params.N];
        double dev = m == 0 ? std::abs(v - 1.0) : std::abs(v);
        if (dev > tolerance) return false;
    }
    return true;
}

} // namespace cbfmt
