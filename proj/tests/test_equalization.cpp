#include <doctest.h>

#include "cbfmt/equalization.hpp"
#include "cbfmt/metrics.hpp"
#include "cbfmt/orthogonality.hpp"
#include "cbfmt/random.hpp"

#include <cmath>

using namespace cbfmt;

namespace {

double identity_error(const Eigen::MatrixXcd& map) {
    return (map - Eigen::MatrixXcd::Identity(map.rows(), map.cols())).cwiseAbs().maxCoeff();
}

// mean output MSE for unit-power iid symbols plus white noise
double mean_mse(const Eigen::MatrixXcd& map, const PrototypePulse& pulse, const EqualizerCoeffs& eq, double sigma2_n) {
    const int L = pulse.params().L();
    auto ng = noise_gain(pulse, eq);
    Eigen::MatrixXcd err = map - Eigen::MatrixXcd::Identity(map.rows(), map.cols());
    double total = 0.0;
    for (Eigen::Index r = 0; r < map.rows(); ++r) total += err.row(r).squaredNorm() + sigma2_n * ng[r / L];
    return total / map.rows();
}

ComplexVector static_response(const ChannelRealization& ch, int M) { return channel_frequency_response(ch, M, 0); }

} // namespace

TEST_CASE("zero-forcing coefficients") {
    ComplexVector one(16, 1.0);
    for (const auto& c : zf_coeffs(one).C) CHECK(c == Complex(1.0));
    ComplexVector delay(16);
    for (int q = 0; q < 16; ++q) delay[q] = std::polar(1.0, -2.0 * kPi * q * 3 / 16);
    auto eq = zf_coeffs(delay);
    for (int q = 0; q < 16; ++q) CHECK(std::abs(eq.C[q] - std::polar(1.0, 2.0 * kPi * q * 3 / 16)) < 1e-14);
    CHECK(eq.kind == EqualizerKind::ZF);
    ComplexVector holed = one;
    holed[5] = 0.0;
    CHECK_THROWS_AS(zf_coeffs(holed), SingularChannelError);
}

TEST_CASE("zero forcing restores orthogonality on static channels") {
    auto p = FilterBankParams::make(8, 12, 360, 8);
    auto pulse = rrc_pulse(p);
    int tested = 0;
    for (int r = 0; tested < 8 && r < 100; ++r) {
        auto ch = draw_channel(5, 2.0, 0.0, 368, 500 + r);
        auto G = static_response(ch, 360);
        double lo = 1e9;
        for (const auto& z : G) lo = std::min(lo, std::abs(z));
        if (lo <= 0.05) continue;
        ++tested;
        auto map = interference_matrix(pulse, ch, zf_coeffs(G), 8);
        CHECK(identity_error(map) < 1e-9);
        // end to end with symbols
        auto b = SymbolBlock::random(p, Constellation::QAM16, r);
        auto y = remove_cp(apply_channel(add_cp(synthesize(b, pulse), 8), ch), 8);
        auto Y = dft(y, 360);
        auto eq = zf_coeffs(G);
        for (int q = 0; q < 360; ++q) Y[q] *= eq.C[q];
        auto z = analyze(idft(Y, 360), pulse);
        double worst = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(z[i] - b.a[i]));
        CHECK(worst < 1e-8);
    }
    CHECK(tested == 8);
}

TEST_CASE("static MMSE coefficients") {
    auto p = FilterBankParams::make(8, 12, 360);
    auto pulse = rrc_pulse(p);
    auto S = tx_spectral_shape(pulse);
    auto ch = draw_channel(5, 2.0, 0.0, 368, 3);
    auto G = static_response(ch, 360);
    auto zf = zf_coeffs(G);
    auto m0 = mmse_tinv_coeffs(G, pulse, 0.0);
    int active = 0;
    for (int q = 0; q < 360; ++q) {
        if (S[q] > 0) {
            ++active;
            CHECK(std::abs(m0.C[q] - zf.C[q]) < 1e-12 * std::abs(zf.C[q]));
        } else {
            CHECK(m0.C[q] == Complex(0.0));
        }
    }
    CHECK(active > 300);

    // shape equals |G(q)|^2 for a pulse confined to [0, Q)
    for (int q = 0; q < 360; ++q) CHECK(S[q] == doctest::Approx(std::norm(pulse.G_at(q % 45))).epsilon(1e-12));

    ComplexVector ones(360, 1.0);
    for (int q = 1; q < 44; ++q) {
        auto half = mmse_tinv_coeffs(ones, pulse, S[q]);
        CHECK(std::abs(half.C[q] - 0.5) < 1e-14);
    }
    double prev = 1e9;
    for (double s2 : {0.0, 1e-4, 1e-2, 1.0, 100.0, 1e6}) {
        double c = std::abs(mmse_tinv_coeffs(G, pulse, s2).C[20]);
        CHECK(c < prev);
        prev = c;
    }
    CHECK(prev < 1e-4);
    CHECK_THROWS_AS(mmse_tinv_coeffs(G, pulse, -1.0), std::invalid_argument);
}

TEST_CASE("time-variant MMSE") {
    auto p = FilterBankParams::make(8, 12, 360, 8);
    auto pulse = rrc_pulse(p);
    auto S = tx_spectrum_power(pulse, 1.0);

    SUBCASE("reduces to the static formula for static channels") {
        auto ch = draw_channel(5, 2.0, 0.0, 368, 8);
        auto tv = mmse_tvar_coeffs(channel_spectrum_2d(ch, 360), S, 1e-3);
        auto ti = mmse_tinv_coeffs(static_response(ch, 360), pulse, 1e-3);
        for (int q = 0; q < 360; ++q) CHECK(std::abs(tv.C[q] - ti.C[q]) < 1e-10);
    }
    SUBCASE("zero channel") {
        ChannelRealization zero = ChannelRealization::time_invariant_taps({0.0, 0.0}, 368);
        for (const auto& c : mmse_tvar_coeffs(channel_spectrum_2d(zero, 360), S, 1e-3).C) CHECK(c == Complex(0.0));
    }
    SUBCASE("noiseless diagonal channel inverts") {
        auto ch = draw_channel(3, 2.0, 0.0, 368, 9);
        auto h2 = channel_spectrum_2d(ch, 360);
        auto tv = mmse_tvar_coeffs(h2, S, 0.0);
        for (int q = 0; q < 360; ++q)
            if (S[q] > 0) CHECK(std::abs(tv.C[q] * h2.H2(q, 0) - 1.0) < 1e-10);
    }
    SUBCASE("inter-carrier leakage shrinks the coefficients") {
        auto ch = draw_channel(5, 2.0, 1e-2, 368, 10);
        auto h2 = channel_spectrum_2d(ch, 360);
        auto tv = mmse_tvar_coeffs(h2, S, 0.0);
        int shrunk = 0;
        for (int q = 0; q < 360; ++q)
            if (S[q] > 0) shrunk += std::abs(tv.C[q] * h2.H2(q, 0)) < 1.0 - 1e-9;
        CHECK(shrunk > 300);
    }
}

TEST_CASE("interference map") {
    auto p = FilterBankParams::make(8, 12, 360, 8);
    auto pulse = rrc_pulse(p);
    SUBCASE("ideal medium") {
        auto ic = interference_coefficients(pulse, ChannelRealization::identity(368), EqualizerCoeffs::identity(360), 8);
        CHECK(identity_error(ic.map) < 1e-9);
        CHECK(ic.interference.cwiseAbs().maxCoeff() < 1e-9);
        for (Eigen::Index r = 0; r < ic.useful.size(); ++r) CHECK(std::abs(ic.useful[r] - 1.0) < 1e-9);
    }
    SUBCASE("doubly dispersive medium leaks") {
        auto ch = draw_channel(5, 2.0, 1e-2, 368, 11);
        auto ic = interference_coefficients(pulse, ch, mmse_tvar_coeffs(channel_spectrum_2d(ch, 360), tx_spectrum_power(pulse, 1.0), 1e-4), 8);
        CHECK(ic.interference.cwiseAbs().maxCoeff() > 1e-4);
        CHECK(ic.r_interf(0, 0, 0, 0) == Complex(0.0));
        CHECK(ic.r_interf(0, 0, 1, 0) == ic.map(1, 0));
        CHECK(ic.r_interf(2, 1, 3, 4) == ic.map(1 * 30 + 3, 2 * 30 + 4));
    }
    SUBCASE("rejects inconsistent sizes") {
        CHECK_THROWS_AS(interference_matrix(pulse, ChannelRealization::identity(360), EqualizerCoeffs::identity(360), 8),
                        std::invalid_argument);
        CHECK_THROWS_AS(interference_matrix(pulse, ChannelRealization::identity(368), EqualizerCoeffs::identity(100), 8),
                        std::invalid_argument);
    }
}

TEST_CASE("interference map predicts the simulated error power") {
    auto p = FilterBankParams::make(4, 6, 96, 4);
    auto pulse = rrc_pulse(p);
    auto ch = draw_channel(3, 2.0, 1e-2, 100, 12);
    auto eq = mmse_tvar_coeffs(channel_spectrum_2d(ch, 96), tx_spectrum_power(pulse, 1.0), 1e-3);
    auto map = interference_matrix(pulse, ch, eq, 4);
    const double predicted = mean_mse(map, pulse, eq, 0.0);

    const int blocks = 6000;
    double acc = 0.0;
    for (int r = 0; r < blocks; ++r) {
        auto b = SymbolBlock::random(p, Constellation::QPSK, 90000 + r);
        auto y = remove_cp(apply_channel(add_cp(synthesize(b, pulse), 4), ch), 4);
        auto Y = dft(y, 96);
        for (int q = 0; q < 96; ++q) Y[q] *= eq.C[q];
        auto z = analyze(idft(Y, 96), pulse);
        for (std::size_t i = 0; i < z.size(); ++i) acc += std::norm(z[i] - b.a[i]);
    }
    const double measured = acc / (blocks * 64.0);
    CHECK(predicted > 1e-4);
    CHECK(std::abs(measured - predicted) < 5e-3 * predicted);
}

TEST_CASE("MMSE beats ZF on average") {
    auto p = FilterBankParams::make(4, 6, 96, 4);
    auto pulse = rrc_pulse(p);
    const double s2 = 1e-2;
    double zf_sum = 0.0, mmse_sum = 0.0;
    for (int r = 0; r < 200; ++r) {
        auto ch = draw_channel(3, 2.0, 0.0, 100, 3000 + r);
        auto G = static_response(ch, 96);
        auto zf = zf_coeffs(G);
        auto mm = mmse_tinv_coeffs(G, pulse, s2);
        zf_sum += mean_mse(interference_matrix(pulse, ch, zf, 4), pulse, zf, s2);
        mmse_sum += mean_mse(interference_matrix(pulse, ch, mm, 4), pulse, mm, s2);
    }
    CHECK(mmse_sum < zf_sum);
}

TEST_CASE("matched receiver through an orthogonal equivalent filter") {
    auto p = FilterBankParams::make(4, 6, 24, 4);
    auto base = rrc_pulse(p);

    // the receiver matched to g_eq (x) g^(i) is the analysis bank after C = conj(G_eq)
    auto witness_map = [&](const ComplexVector& taps) {
        auto ch = ChannelRealization::time_invariant_taps(taps, 28);
        ComplexVector G = static_response(ch, 24);
        EqualizerCoeffs eq{ComplexVector(24), EqualizerKind::Custom};
        for (int q = 0; q < 24; ++q) eq.C[q] = std::conj(G[q]);
        auto fast = interference_matrix(base, ch, eq, 4);

        // brute force: z(i,m) = e^{-i2pi mNi/K} sum_n y(n) conj(f_i((n - mN)_M)), f_i = g_eq (*) g^(i)
        ComplexVector geq(24);
        for (std::size_t s = 0; s < taps.size(); ++s) geq[s] = taps[s];
        Eigen::MatrixXcd slow(16, 16);
        for (int k = 0; k < 4; ++k)
            for (int l = 0; l < 4; ++l) {
                auto b = SymbolBlock::zeros(p);
                b.at(k, l) = 1.0;
                auto y = cyclic_convolve(synthesize(b, base), geq);
                for (int i = 0; i < 4; ++i) {
                    ComplexVector gi(24);
                    for (int n = 0; n < 24; ++n) gi[n] = base.g()[n] * std::polar(1.0, 2.0 * kPi * n * i / 4);
                    auto f = cyclic_convolve(geq, gi);
                    for (int m = 0; m < 4; ++m) {
                        Complex acc{};
                        for (int n = 0; n < 24; ++n) acc += y[n] * std::conj(f[mod_index(n - m * 6, 24)]);
                        slow(i * 4 + m, k * 4 + l) = acc * std::polar(1.0, -2.0 * kPi * m * 6 * i / 4);
                    }
                }
            }
        CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-12);
        return fast;
    };

    ComplexVector delay(4);
    delay[3] = 1.0;
    REQUIRE(check_equivalent_filter_orthogonality(delay, p));
    CHECK(identity_error(witness_map(delay)) < 1e-9);

    ComplexVector phase{std::polar(1.0, 1.1)};
    REQUIRE(check_equivalent_filter_orthogonality(phase, p));
    CHECK(identity_error(witness_map(phase)) < 1e-9);

    // passes the lag-N autocorrelation test, yet the end-to-end map is not the identity
    ComplexVector two{1.0 / std::sqrt(1.25), 0.5 / std::sqrt(1.25)};
    REQUIRE(check_equivalent_filter_orthogonality(two, p));
    CHECK(identity_error(witness_map(two)) > 0.1);
}
