#include "cbfmt/metrics.hpp"
#include "cbfmt/orthogonality.hpp"
#include "cbfmt/parallel.hpp"
#include "cbfmt/random.hpp"

#include <algorithm>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace cbfmt {

double ibob_ratio(const PrototypePulse& pulse, int oversample) {
    if (oversample < 8) throw std::invalid_argument("ibob_ratio: oversample must be >= 8");
    const auto& pr = pulse.params();
    const int M = pr.M;
    const int F = oversample * M;
    ComplexVector s(F);
    std::copy(pulse.g().begin(), pulse.g().end(), s.begin());
    FftPlan::get(F)->forward(s.data());
    std::vector<double> P(F + 1);
    for (int j = 0; j < F; ++j) P[j] = std::norm(s[j]);
    P[F] = P[0];
    double total = std::accumulate(P.begin(), P.end() - 1, 0.0);
    if (!(total > 0)) throw std::invalid_argument("ibob_ratio: zero-energy pulse");

    const double h = 1.0 / F;
    const double B = 1.0 / pr.K;
    const double pos = B * F;
    int nb = static_cast<int>(std::floor(pos + 1e-9));
    double frac = std::max(0.0, pos - nb);
    double PB = frac > 0 ? P[nb] + (P[nb + 1] - P[nb]) * frac : P[nb];

    double in = 0.0;
    for (int j = 0; j < nb; ++j) in += 0.5 * (P[j] + P[j + 1]) * h;
    in += 0.5 * (P[nb] + PB) * frac * h;

    // out-of-band integrated directly so that tiny leakage is not lost to cancellation
    double out = 0.0;
    if (frac > 0) out += 0.5 * (PB + P[nb + 1]) * (1.0 - frac) * h;
    for (int j = frac > 0 ? nb + 1 : nb; j < F; ++j) out += 0.5 * (P[j] + P[j + 1]) * h;
    if (!(out > 0)) return std::numeric_limits<double>::infinity();
    return in / out;
}

IbobQuadraticForm::IbobQuadraticForm(const FilterBankParams& params, int Q2) : params_(params), Q2_(Q2) {
    const int M = params.M;
    if (Q2 < 1 || Q2 > M) throw std::invalid_argument("support must lie in [1, M]");
    const double B = 1.0 / params.K;
    // T(n', n) = int_0^B exp(i 2 pi f (n' - n)) df
    std::vector<Complex> t(2 * M - 1);
    for (int d = -(M - 1); d <= M - 1; ++d) {
        Complex v;
        if (d == 0) {
            v = B;
        } else {
            double w = 2.0 * kPi * d;
            v = (std::polar(1.0, w * B) - 1.0) / Complex(0.0, w);
        }
        t[d + M - 1] = v;
    }
    Eigen::MatrixXcd V(M, Q2);
    for (int n = 0; n < M; ++n)
        for (int b = 0; b < Q2; ++b)
            V(n, b) = std::polar(1.0 / M, 2.0 * kPi * static_cast<double>((static_cast<long>(b) * n) % M) / M);
    Eigen::MatrixXcd T(M, M);
    for (int a = 0; a < M; ++a)
        for (int n = 0; n < M; ++n) T(a, n) = t[a - n + M - 1];
    A_ = V.adjoint() * (T * V);
    A_ = 0.5 * (A_ + A_.adjoint()).eval();
    Abar_ = Eigen::MatrixXcd::Identity(Q2, Q2) / static_cast<double>(M) - A_;
}

static Eigen::VectorXcd support_vector(const ComplexVector& G, int Q2) {
    Eigen::VectorXcd v(Q2);
    for (int b = 0; b < Q2; ++b) v[b] = G[b];
    return v;
}

double IbobQuadraticForm::in_band(const ComplexVector& G) const {
    auto v = support_vector(G, Q2_);
    return v.dot(A_ * v).real();
}

double IbobQuadraticForm::out_band(const ComplexVector& G) const {
    auto v = support_vector(G, Q2_);
    return v.dot(Abar_ * v).real();
}

double IbobQuadraticForm::ratio_db(const ComplexVector& G) const { return to_db(in_band(G) / out_band(G)); }

double IbobQuadraticForm::ratio_db_grad(const ComplexVector& G, ComplexVector& grad) const {
    auto v = support_vector(G, Q2_);
    Eigen::VectorXcd Av = A_ * v, Bv = Abar_ * v;
    double in = v.dot(Av).real(), out = v.dot(Bv).real();
    const double c = 10.0 / std::log(10.0);
    grad.assign(G.size(), Complex{});
    for (int b = 0; b < Q2_; ++b) grad[b] = c * (2.0 * Av[b] / in - 2.0 * Bv[b] / out);
    return to_db(in / out);
}

Objective ibob_objective(const FilterBankParams& params, int Q2) {
    auto form = std::make_shared<IbobQuadraticForm>(params, Q2);
    Objective obj;
    obj.value = [form](const PrototypePulse& p) { return form->ratio_db(p.G()); };
    obj.value_grad = [form](const PrototypePulse& p, ComplexVector& g) { return form->ratio_db_grad(p.G(), g); };
    return obj;
}

std::vector<double> noise_gain(const PrototypePulse& pulse_rx, const EqualizerCoeffs& eq) {
    const auto& pr = pulse_rx.params();
    const int M = pr.M, Q = pr.Q();
    std::vector<double> out(pr.K, 0.0);
    for (int i = 0; i < pr.K; ++i) {
        double acc = 0.0;
        for (int q = 0; q < M; ++q)
            acc += std::norm(eq.C[(q + static_cast<long>(i) * Q) % M]) * std::norm(pulse_rx.G()[q]);
        out[i] = acc / M;
    }
    return out;
}

LinkReport link_report(const PrototypePulse& pulse, const ChannelRealization& ch, const EqualizerCoeffs& eq,
                       double sigma2_n, double sigma2_a) {
    const auto& pr = pulse.params();
    const int K = pr.K, L = pr.L();
    const int mu = ch.length() - pr.M;
    if (mu != pr.mu) throw std::invalid_argument("channel segment length must be M + mu");
    Eigen::MatrixXcd Z = interference_matrix(pulse, ch, eq, mu);
    auto ng = noise_gain(pulse, eq);

    LinkReport rep;
    rep.params = pr;
    rep.P = ch.P;
    rep.gamma = ch.gamma;
    rep.fD = ch.fD;
    rep.channel_seed = ch.seed;
    rep.sigma2_n = sigma2_n;
    rep.sigma2_a = sigma2_a;
    rep.sinr.resize(K, L);
    rep.useful_power.resize(K, L);
    rep.isi_power.resize(K, L);
    rep.ici_power.resize(K, L);
    rep.noise_power.resize(K, L);
    for (int i = 0; i < K; ++i) {
        for (int m = 0; m < L; ++m) {
            const int row = i * L + m;
            double useful = sigma2_a * std::norm(Z(row, row));
            double isi = 0.0, ici = 0.0;
            for (int k = 0; k < K; ++k)
                for (int l = 0; l < L; ++l) {
                    if (k == i && l == m) continue;
                    double v = sigma2_a * std::norm(Z(row, k * L + l));
                    (k == i ? isi : ici) += v;
                }
            double noise = sigma2_n * ng[i];
            double den = isi + ici + noise;
            double s = den > 0 ? useful / den : kSinrCap;
            rep.useful_power(i, m) = useful;
            rep.isi_power(i, m) = isi;
            rep.ici_power(i, m) = ici;
            rep.noise_power(i, m) = noise;
            rep.sinr(i, m) = std::min(s, kSinrCap);
        }
    }
    rep.rate_bps = achievable_rate(rep.sinr, pr);
    return rep;
}

Eigen::MatrixXd sinr_grid(const PrototypePulse& pulse, const ChannelRealization& ch, const EqualizerCoeffs& eq,
                          double sigma2_n, double sigma2_a) {
    return link_report(pulse, ch, eq, sigma2_n, sigma2_a).sinr;
}

double achievable_rate(const Eigen::MatrixXd& sinr, const FilterBankParams& params) {
    double bits = 0.0;
    for (Eigen::Index a = 0; a < sinr.rows(); ++a)
        for (Eigen::Index b = 0; b < sinr.cols(); ++b) {
            double s = sinr(a, b);
            if (s < 0) throw std::invalid_argument("achievable_rate: negative SINR");
            bits += std::log2(1.0 + std::min(s, kSinrCap));
        }
    return bits / ((params.M + params.mu) * params.T);
}

EqualizerCoeffs preset_equalizer(const PrototypePulse& pulse, const ChannelRealization& ch, const ChannelPreset& preset) {
    const int M = pulse.params().M;
    ChannelSpectrum2D h2 = channel_spectrum_2d(ch, M);
    if (preset.equalizer == EqualizerChoice::ZF) {
        ComplexVector D(M);
        for (int q = 0; q < M; ++q) D[q] = h2.H2(q, 0);
        return zf_coeffs(D);
    }
    return mmse_tvar_coeffs(h2, tx_spectrum_power(pulse, preset.sigma2_a), preset.sigma2_n());
}

std::uint64_t realization_seed(std::uint64_t seed, int index) {
    Rng r = make_rng(seed, 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(index));
    return r();
}

PrototypePulse with_link_timing(const PrototypePulse& pulse, const ChannelPreset& preset) {
    auto pr = pulse.params();
    pr.mu = preset.mu;
    pr.T = preset.T;
    return PrototypePulse(pr, pulse.G());
}

namespace {

struct RealizationResult {
    double rate = 0.0;
    double sinr_db_sum = 0.0;
    double sinr_lin_sum = 0.0;
};

RealizationResult run_realization(const PrototypePulse& pulse, const ChannelRealization& ch,
                                  const ChannelPreset& preset) {
    auto eq = preset_equalizer(pulse, ch, preset);
    auto rep = link_report(pulse, ch, eq, preset.sigma2_n(), preset.sigma2_a);
    RealizationResult r;
    r.rate = rep.rate_bps;
    for (Eigen::Index a = 0; a < rep.sinr.rows(); ++a)
        for (Eigen::Index b = 0; b < rep.sinr.cols(); ++b) {
            r.sinr_db_sum += to_db(std::max(rep.sinr(a, b), 1e-300));
            r.sinr_lin_sum += rep.sinr(a, b);
        }
    return r;
}

} // namespace

CapacityStats average_capacity(const PrototypePulse& pulse_in, const ChannelPreset& preset, int n_realizations,
                               std::uint64_t seed, int threads) {
    if (n_realizations < 1) throw std::invalid_argument("need at least one realization");
    PrototypePulse pulse = with_link_timing(pulse_in, preset);
    const auto& pr = pulse.params();
    std::vector<RealizationResult> res(n_realizations);
    parallel_for(static_cast<std::size_t>(n_realizations), threads, [&](std::size_t r) {
        auto ch = draw_channel(preset.P, preset.gamma, preset.fD, pr.M + pr.mu, realization_seed(seed, static_cast<int>(r)));
        res[r] = run_realization(pulse, ch, preset);
    });
    CapacityStats st;
    const double entries = static_cast<double>(pr.K) * pr.L() * n_realizations;
    for (const auto& r : res) {
        st.rates.push_back(r.rate);
        st.mean_sinr_db += r.sinr_db_sum / entries;
        st.mean_sinr_linear += r.sinr_lin_sum / entries;
    }
    st.mean_rate = std::accumulate(st.rates.begin(), st.rates.end(), 0.0) / n_realizations;
    double var = 0.0;
    for (double v : st.rates) var += (v - st.mean_rate) * (v - st.mean_rate);
    st.std_rate = n_realizations > 1 ? std::sqrt(var / (n_realizations - 1)) : 0.0;
    return st;
}

Objective capacity_objective(const FilterBankParams& params_in, const ChannelPreset& preset, int batch,
                             std::uint64_t seed, int first_index) {
    if (batch < 1) throw std::invalid_argument("capacity objective needs a non-empty batch");
    auto params = params_in;
    params.mu = preset.mu;
    params.T = preset.T;
    auto channels = std::make_shared<std::vector<ChannelRealization>>();
    for (int r = 0; r < batch; ++r)
        channels->push_back(draw_channel(preset.P, preset.gamma, preset.fD, params.M + params.mu, realization_seed(seed, first_index + r)));
    Objective obj;
    obj.value = [channels, preset, params](const PrototypePulse& p) {
        PrototypePulse pulse(params, p.G());
        double sum = 0.0;
        for (const auto& ch : *channels) sum += run_realization(pulse, ch, preset).rate;
        return sum / static_cast<double>(channels->size()) / 1e6;
    };
    return obj;
}

DesignResult design_capacity_pulse(const FilterBankParams& params_in, const ChannelPreset& preset,
                                   const CapacityDesignOptions& opts) {
    auto params = params_in;
    params.mu = preset.mu;
    params.T = preset.T;
    params.validate();
    const int Q2 = params.Q();
    auto rrc = rrc_pulse(params);

    DesignSpec spec;
    spec.params = params;
    spec.metric = Metric::Capacity;
    spec.pulse_mode = opts.mode;
    spec.n_starting_points = opts.restarts;
    spec.seed = opts.seed;
    spec.band_limit_Q2 = Q2;
    spec.initial = pulse_to_angles(rrc, Q2, centering_delay(params));
    spec.threads = opts.threads;
    spec.max_iterations = opts.max_iterations;

    if (!opts.per_realization) return design_pulse(spec, capacity_objective(params, preset, opts.batch, opts.seed));

    // per-realization designs, then keep the candidate with the best batch average
    Objective batch_obj = capacity_objective(params, preset, opts.batch, opts.seed);
    DesignResult best;
    double best_val = -std::numeric_limits<double>::infinity();
    std::vector<RestartRecord> trace;
    for (int r = 0; r < opts.batch; ++r) {
        Objective one = capacity_objective(params, preset, 1, opts.seed, r);
        DesignResult cand = design_pulse(spec, one);
        double v = batch_obj.value(cand.pulse);
        trace.push_back({r, true, v, cand.residual});
        if (v > best_val) {
            best_val = v;
            best = std::move(cand);
        }
    }
    best.objective_value = best_val;
    best.restarts = std::move(trace);
    return best;
}

std::vector<SweepRow> doppler_sweep(const std::vector<NamedPulse>& pulses, const std::vector<double>& fD_grid,
                                    const ChannelPreset& preset, std::uint64_t seed, int threads) {
    std::vector<SweepRow> rows;
    for (double fD : fD_grid) {
        ChannelPreset p = preset;
        p.fD = fD;
        for (const auto& np : pulses) {
            auto st = average_capacity(np.pulse, p, p.n_realizations, seed, threads);
            rows.push_back({fD, np.name, st.mean_rate, st.std_rate, p.n_realizations});
        }
    }
    return rows;
}

} // namespace cbfmt
