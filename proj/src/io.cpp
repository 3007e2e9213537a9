#include "cbfmt/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace cbfmt::io {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Json params_json(const FilterBankParams& p) {
    Json j;
    j["K"] = p.K;
    j["N"] = p.N;
    j["M"] = p.M;
    j["L"] = p.L();
    j["Q"] = p.Q();
    j["Ns"] = p.Ns();
    j["mu"] = p.mu;
    j["T"] = p.T;
    return j;
}

Json pulse_json(const PrototypePulse& pulse, const PulseMetadata& meta) {
    Json j;
    j["K"] = pulse.params().K;
    j["N"] = pulse.params().N;
    j["M"] = pulse.params().M;
    Json re = Json::array(), im = Json::array();
    for (const auto& z : pulse.G()) {
        re.push_back(z.real());
        im.push_back(z.imag());
    }
    j["G_re"] = std::move(re);
    j["G_im"] = std::move(im);
    j["metadata"] = {{"designer", meta.designer}, {"metric", meta.metric}, {"seed", meta.seed}};
    return j;
}

PulseFile pulse_from_json(const Json& j, int mu, double T) {
    try {
        auto params = FilterBankParams::make(j.at("K").get<int>(), j.at("N").get<int>(), j.at("M").get<int>(), mu, T);
        const auto& re = j.at("G_re");
        const auto& im = j.at("G_im");
        if (static_cast<int>(re.size()) != params.M || static_cast<int>(im.size()) != params.M)
            throw std::runtime_error("pulse file: G_re/G_im must have M entries");
        ComplexVector G(params.M);
        for (int i = 0; i < params.M; ++i) G[i] = {re[i].get<double>(), im[i].get<double>()};
        PulseFile f{PrototypePulse(params, std::move(G)), {}};
        if (j.contains("metadata")) {
            const auto& m = j["metadata"];
            f.meta.designer = m.value("designer", std::string("unknown"));
            f.meta.metric = m.value("metric", std::string("none"));
            f.meta.seed = m.value("seed", std::uint64_t{0});
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("pulse file: ") + e.what());
    }
}

void write_pulse(const std::string& path, const PrototypePulse& pulse, const PulseMetadata& meta) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << pulse_json(pulse, meta).dump(2) << '\n';
}

PulseFile read_pulse(const std::string& path, int mu, double T) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    Json j;
    try {
        j = Json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        // the message carries "at line L, column C"
        throw std::runtime_error(path + ": " + e.what());
    }
    return pulse_from_json(j, mu, T);
}

Json orth_report_json(const OrthReport& rep, const FilterBankParams& params) {
    Json j;
    j["is_orthogonal"] = rep.is_orthogonal;
    j["max_isi_residual"] = rep.max_isi_residual;
    j["max_ici_residual"] = rep.max_ici_residual;
    j["tolerance"] = rep.tolerance;
    j["params"] = params_json(params);
    return j;
}

Json channel_json(const ChannelRealization& ch) {
    Json j;
    j["P"] = ch.P;
    j["gamma"] = ch.gamma;
    j["fD"] = ch.fD;
    j["seed"] = ch.seed;
    Json re = Json::array(), im = Json::array();
    for (const auto& tap : ch.alpha) {
        Json r = Json::array(), i = Json::array();
        for (const auto& z : tap) {
            r.push_back(z.real());
            i.push_back(z.imag());
        }
        re.push_back(std::move(r));
        im.push_back(std::move(i));
    }
    j["alpha_re"] = std::move(re);
    j["alpha_im"] = std::move(im);
    return j;
}

ChannelRealization channel_from_json(const Json& j) {
    ChannelRealization ch;
    ch.P = j.at("P").get<int>();
    ch.gamma = j.at("gamma").get<double>();
    ch.fD = j.at("fD").get<double>();
    ch.seed = j.at("seed").get<std::uint64_t>();
    const auto& re = j.at("alpha_re");
    const auto& im = j.at("alpha_im");
    if (static_cast<int>(re.size()) != ch.P || static_cast<int>(im.size()) != ch.P)
        throw std::runtime_error("channel file: tap count mismatch");
    for (int s = 0; s < ch.P; ++s) {
        if (re[s].size() != im[s].size()) throw std::runtime_error("channel file: ragged tap arrays");
        ComplexVector tap(re[s].size());
        for (std::size_t n = 0; n < tap.size(); ++n) tap[n] = {re[s][n].get<double>(), im[s][n].get<double>()};
        ch.alpha.push_back(std::move(tap));
    }
    if (ch.gamma > 0) ch.Omega = power_delay_profile(ch.P, ch.gamma);
    return ch;
}

static Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
        Json r = Json::array();
        for (Eigen::Index b = 0; b < m.cols(); ++b) r.push_back(m(a, b));
        rows.push_back(std::move(r));
    }
    return rows;
}

Json link_report_json(const LinkReport& rep) {
    Json j;
    j["params"] = params_json(rep.params);
    j["channel_meta"] = {{"P", rep.P}, {"gamma", rep.gamma}, {"fD", rep.fD}, {"seed", rep.channel_seed}};
    j["sigma2_n"] = rep.sigma2_n;
    j["sigma2_a"] = rep.sigma2_a;
    j["rate_bps"] = rep.rate_bps;
    j["sinr"] = matrix_json(rep.sinr);
    j["useful_power"] = matrix_json(rep.useful_power);
    j["isi_power"] = matrix_json(rep.isi_power);
    j["ici_power"] = matrix_json(rep.ici_power);
    j["noise_power"] = matrix_json(rep.noise_power);
    return j;
}

void write_restart_csv(std::ostream& os, const std::vector<RestartRecord>& rows) {
    os << "restart_index,feasible,objective\n";
    for (const auto& r : rows) os << r.index << ',' << (r.feasible ? 1 : 0) << ',' << format_double(r.objective) << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "fD_normalized,pulse_name,mean_rate_bps,std_rate_bps,n_realizations\n";
    for (const auto& r : rows)
        os << format_double(r.fD) << ',' << r.pulse_name << ',' << format_double(r.mean_rate_bps) << ','
           << format_double(r.std_rate_bps) << ',' << r.n_realizations << '\n';
}

} // namespace cbfmt::io
