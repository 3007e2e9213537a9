#include "cbfmt/io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace cbfmt;
using io::Json;

namespace {

struct Common {
    std::string params = "8,12,360";
    int mu = 8;
    double T = 5e-8;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;
};

FilterBankParams parse_params(const std::string& s, int mu, double T) {
    std::vector<int> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stoi(tok));
    if (v.size() != 3) throw std::invalid_argument("--params expects K,N,M");
    return FilterBankParams::make(v[0], v[1], v[2], mu, T);
}

// "rrc" or a pulse file
PrototypePulse load_pulse(const std::string& src, const Common& c) {
    if (src == "rrc") return rrc_pulse(parse_params(c.params, c.mu, c.T));
    return io::read_pulse(src, c.mu, c.T).pulse;
}

void emit(const Json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << j.dump(2) << '\n';
}

Json check_json(const PrototypePulse& pulse) {
    auto gnc = check_gnc(pulse);
    auto mat = check_matrix_orthogonality(pulse);
    Json j = io::orth_report_json(gnc, pulse.params());
    j["is_orthogonal"] = gnc.is_orthogonal && mat.is_orthogonal;
    j["matrix_form"] = {{"is_orthogonal", mat.is_orthogonal},
                        {"max_isi_residual", mat.max_isi_residual},
                        {"max_ici_residual", mat.max_ici_residual}};
    if (pulse.params().K == pulse.params().N) j["unit_modulus_dft"] = check_critically_sampled(pulse);
    return j;
}

std::string sibling(const std::string& out, const std::string& suffix) {
    auto dot = out.rfind('.');
    auto slash = out.rfind('/');
    std::string stem = (dot == std::string::npos || (slash != std::string::npos && dot < slash)) ? out : out.substr(0, dot);
    return stem + suffix;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cyclic block filtered multitone toolkit"};
    app.set_config("--config", "", "TOML config; command-line flags take precedence");
    app.require_subcommand(1);

    Common c;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--params", c.params, "K,N,M")->capture_default_str();
        sub->add_option("--mu", c.mu, "cyclic prefix length")->capture_default_str();
        sub->add_option("--T", c.T, "sampling period [s]")->capture_default_str();
        sub->add_option("--seed", c.seed)->capture_default_str();
        sub->add_option("--threads", c.threads)->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--out", c.out, "output path, '-' or empty for stdout");
    };

    // design
    auto* design = app.add_subcommand("design", "optimize a prototype pulse");
    add_common(design);
    std::string metric = "ibob", mode = "real";
    int restarts = 500, realizations = 16, iterations = 0;
    std::optional<int> q2;
    bool per_realization = false;
    double design_fd = 2e-4;
    design->add_option("--metric", metric)->check(CLI::IsMember({"ibob", "capacity"}))->capture_default_str();
    design->add_option("--pulse-mode", mode)->check(CLI::IsMember({"real", "complex"}))->capture_default_str();
    design->add_option("--restarts", restarts)->check(CLI::PositiveNumber)->capture_default_str();
    design->add_option("--q2", q2, "band limit: coefficients at bins >= Q2 are zero");
    design->add_option("--realizations", realizations, "capacity: realizations per batch")->capture_default_str();
    design->add_option("--iterations", iterations, "optimizer iteration cap (0 = default)");
    design->add_option("--fd", design_fd, "capacity: normalized Doppler")->capture_default_str();
    design->add_flag("--per-realization", per_realization, "capacity: one gradient step per realization");

    // check
    auto* check = app.add_subcommand("check", "certify orthogonality of a pulse");
    add_common(check);
    std::string pulse_src = "rrc";
    check->add_option("pulse", pulse_src, "pulse file or 'rrc'")->capture_default_str();

    // extend
    auto* extend = app.add_subcommand("extend", "derive a longer or resampled pulse");
    add_common(extend);
    std::string ext_mode = "length";
    double alpha = 1.0;
    extend->add_option("pulse", pulse_src, "mother pulse file or 'rrc'")->capture_default_str();
    extend->add_option("--mode", ext_mode)->check(CLI::IsMember({"length", "resample"}))->capture_default_str();
    extend->add_option("--alpha", alpha)->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "per-sub-channel SINR for one channel draw");
    add_common(simulate);
    ChannelPreset preset;
    std::string eq_name = "mmse";
    simulate->add_option("pulse", pulse_src, "pulse file or 'rrc'")->capture_default_str();
    simulate->add_option("--fd", preset.fD)->capture_default_str();
    simulate->add_option("--snr", preset.snr_db)->capture_default_str();
    simulate->add_option("--equalizer", eq_name)->check(CLI::IsMember({"zf", "mmse"}))->capture_default_str();
    simulate->add_option("--realization", realizations, "realization index")->capture_default_str();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "mean rate versus normalized Doppler");
    add_common(sweep);
    std::vector<double> fd_grid;
    std::vector<std::string> pulses;
    int sweep_realizations = 200;
    sweep->add_option("--fd", fd_grid, "Doppler grid (fD T values)");
    sweep->add_option("--pulse", pulses, "name=file or 'rrc'; repeatable");
    sweep->add_option("--realizations", sweep_realizations)->capture_default_str();
    sweep->add_option("--snr", preset.snr_db)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*design) {
            auto params = parse_params(c.params, c.mu, c.T);
            auto pm = mode == "real" ? PulseMode::Real : PulseMode::Complex;
            DesignResult res;
            try {
                if (metric == "ibob") {
                    DesignSpec spec;
                    spec.params = params;
                    spec.pulse_mode = pm;
                    spec.n_starting_points = restarts;
                    spec.seed = c.seed;
                    // design default is the confined band [0, Q)
                    const int band = resolved_band_limit(params, q2.value_or(params.Q()));
                    spec.band_limit_Q2 = band;
                    spec.threads = c.threads;
                    if (iterations > 0) spec.max_iterations = iterations;
                    res = design_pulse(spec, ibob_objective(params, band));
                } else {
                    ChannelPreset p;
                    p.T = c.T;
                    p.mu = c.mu;
                    p.fD = design_fd;
                    CapacityDesignOptions o;
                    o.batch = realizations;
                    o.seed = c.seed;
                    o.mode = pm;
                    o.restarts = restarts;
                    o.per_realization = per_realization;
                    o.threads = c.threads;
                    if (iterations > 0) o.max_iterations = iterations;
                    res = design_capacity_pulse(params, p, o);
                }
            } catch (const DesignFailure& f) {
                Json diag;
                diag["error"] = "design-failure";
                diag["message"] = f.what();
                diag["best_residual"] = f.best_infeasible.residual;
                diag["best_objective"] = f.best_infeasible.objective_value;
                diag["restarts"] = f.best_infeasible.restarts.size();
                std::cerr << diag.dump(2) << '\n';
                return 2;
            }
            io::PulseMetadata meta{"cbfmt design", metric, c.seed};
            Json j = io::pulse_json(res.pulse, meta);
            j["objective"] = res.objective_value;
            j["ibob_db"] = to_db(ibob_ratio(res.pulse));
            j["orth_report"] = check_json(res.pulse);
            emit(j, c.out);
            if (!c.out.empty() && c.out != "-") {
                std::ofstream csv(sibling(c.out, "_restarts.csv"));
                io::write_restart_csv(csv, res.restarts);
            }
            return 0;
        }

        if (*check) {
            auto pulse = load_pulse(pulse_src, c);
            Json j = check_json(pulse);
            emit(j, c.out);
            return j["is_orthogonal"].get<bool>() ? 0 : 1;
        }

        if (*extend) {
            auto mother = load_pulse(pulse_src, c);
            PrototypePulse child;
            try {
                if (ext_mode == "length") {
                    child = extend_pulse_length(mother, alpha);
                } else {
                    int a = static_cast<int>(alpha);
                    if (a != alpha) throw std::invalid_argument("resample: alpha must be an integer");
                    child = resample_pulse(mother, a);
                }
            } catch (const PreconditionError& e) {
                std::cerr << "extend refused: " << e.what() << '\n';
                return 1;
            }
            Json rep = check_json(child);
            if (!rep["is_orthogonal"].get<bool>()) {
                std::cerr << "extend refused: derived pulse is not orthogonal\n" << rep.dump(2) << '\n';
                return 1;
            }
            emit(io::pulse_json(child, {"cbfmt extend " + ext_mode, "none", c.seed}), c.out);
            return 0;
        }

        if (*simulate) {
            preset.T = c.T;
            preset.mu = c.mu;
            preset.equalizer = eq_name == "zf" ? EqualizerChoice::ZF : EqualizerChoice::MMSE;
            auto pulse = with_link_timing(load_pulse(pulse_src, c), preset);
            auto seed = realization_seed(c.seed, realizations);
            auto ch = draw_channel(preset.P, preset.gamma, preset.fD, pulse.params().M + preset.mu, seed);
            auto eq = preset_equalizer(pulse, ch, preset);
            emit(io::link_report_json(link_report(pulse, ch, eq, preset.sigma2_n(), preset.sigma2_a)), c.out);
            return 0;
        }

        if (*sweep) {
            preset.T = c.T;
            preset.mu = c.mu;
            preset.n_realizations = sweep_realizations;
            std::vector<NamedPulse> named;
            if (pulses.empty()) pulses.push_back("rrc");
            for (const auto& spec : pulses) {
                auto eqpos = spec.find('=');
                std::string name = eqpos == std::string::npos ? spec : spec.substr(0, eqpos);
                std::string src = eqpos == std::string::npos ? spec : spec.substr(eqpos + 1);
                named.push_back({name, load_pulse(src, c)});
            }
            auto rows = doppler_sweep(named, fd_grid, preset, c.seed, c.threads);
            if (c.out.empty() || c.out == "-") {
                io::write_sweep_csv(std::cout, rows);
            } else {
                std::ofstream os(c.out);
                if (!os) throw std::runtime_error("cannot write " + c.out);
                io::write_sweep_csv(os, rows);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
