#include "cbfmt/pulse_design.hpp"
#include "cbfmt/optimize.hpp"
#include "cbfmt/orthogonality.hpp"
#include "cbfmt/parallel.hpp"
#include "cbfmt/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace cbfmt {

int nonzero_count(const FilterBankParams& params, int p, int Q2) {
    const int L = params.L();
    if (p >= Q2) return 0;
    return std::min(params.N, (Q2 - p + L - 1) / L);
}

int resolved_band_limit(const FilterBankParams& params, std::optional<int> Q2) {
    int q = Q2.value_or(params.M);
    if (q < params.L() || q > params.M) throw std::invalid_argument("band limit Q2 must lie in [L, M]");
    return q;
}

int free_parameter_count(const FilterBankParams& params, std::optional<int> Q2, PulseMode mode) {
    const int q2 = resolved_band_limit(params, Q2);
    int total = 0;
    for (int p = 0; p < params.L(); ++p) {
        int n = nonzero_count(params, p, q2);
        total += (n - 1) + (mode == PulseMode::Complex ? n : 0);
    }
    return total;
}

namespace {

// amplitudes of the hyperspherical point and d r_j / d theta_t
void sphere_amplitudes(std::span<const double> theta, std::vector<double>& r, std::vector<double>* dr) {
    const std::size_t n = theta.size() + 1;
    r.assign(n, 0.0);
    if (dr) dr->assign(n * (n - 1), 0.0);
    double prefix = 1.0;  // product of sines so far
    for (std::size_t j = 0; j < n; ++j) {
        r[j] = j + 1 < n ? prefix * std::cos(theta[j]) : prefix;
        if (j + 1 < n) prefix *= std::sin(theta[j]);
    }
    if (!dr) return;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t t = 0; t <= j && t + 1 < n; ++t) {
            double v = 1.0;
            for (std::size_t u = 0; u < j && u + 1 < n; ++u) v *= (u == t) ? std::cos(theta[u]) : std::sin(theta[u]);
            if (j + 1 < n) v *= (t == j) ? -std::sin(theta[j]) : std::cos(theta[j]);
            (*dr)[j * (n - 1) + t] = v;
        }
    }
}

struct Layout {
    FilterBankParams pr;
    int Q2 = 0;
    PulseMode mode = PulseMode::Real;
    int delay = 0;
    std::vector<int> n, theta_off, phi_off;
    int size = 0;

    Layout(const FilterBankParams& p, int q2, PulseMode m, int d) : pr(p), Q2(q2), mode(m), delay(d) {
        const int L = pr.L();
        n.resize(L);
        theta_off.resize(L);
        phi_off.resize(L);
        for (int q = 0; q < L; ++q) {
            n[q] = nonzero_count(pr, q, Q2);
            theta_off[q] = size;
            size += n[q] - 1;
            phi_off[q] = size;
            if (mode == PulseMode::Complex) size += n[q];
        }
    }

    Complex delay_phase(int bin) const {
        double a = -2.0 * kPi * static_cast<double>((static_cast<long>(bin) * delay) % pr.M) / pr.M;
        return {std::cos(a), std::sin(a)};
    }

    Eigen::VectorXd encode(const AngleParams& a) const {
        Eigen::VectorXd x(size);
        for (int p = 0; p < pr.L(); ++p) {
            for (int t = 0; t + 1 < n[p]; ++t) x[theta_off[p] + t] = a.theta[p][t];
            if (mode == PulseMode::Complex)
                for (int t = 0; t < n[p]; ++t) x[phi_off[p] + t] = a.phi[p][t];
        }
        return x;
    }

    AngleParams decode_angles(const Eigen::VectorXd& x) const {
        AngleParams a;
        a.band_limit_Q2 = Q2;
        a.theta.resize(pr.L());
        a.phi.resize(pr.L());
        for (int p = 0; p < pr.L(); ++p) {
            a.theta[p].resize(n[p] - 1);
            a.phi[p].assign(n[p], 0.0);
            for (int t = 0; t + 1 < n[p]; ++t) a.theta[p][t] = x[theta_off[p] + t];
            if (mode == PulseMode::Complex)
                for (int t = 0; t < n[p]; ++t) a.phi[p][t] = x[phi_off[p] + t];
        }
        return a;
    }

    // G(x); when deriv is given, deriv[bin] lists (parameter, dG/dx)
    ComplexVector coefficients(const Eigen::VectorXd& x,
                               std::vector<std::vector<std::pair<int, Complex>>>* deriv) const {
        const int L = pr.L();
        const double sN = std::sqrt(static_cast<double>(pr.N));
        ComplexVector G(pr.M);
        if (deriv) deriv->assign(pr.M, {});
        std::vector<double> r, dr;
        for (int p = 0; p < L; ++p) {
            const int np = n[p];
            std::span<const double> th(x.data() + theta_off[p], np - 1);
            sphere_amplitudes(th, r, deriv ? &dr : nullptr);
            for (int j = 0; j < np; ++j) {
                const int bin = p + j * L;
                Complex ph = delay_phase(bin);
                if (mode == PulseMode::Complex) {
                    double f = x[phi_off[p] + j];
                    ph *= Complex(std::cos(f), std::sin(f));
                }
                G[bin] = sN * r[j] * ph;
                if (!deriv) continue;
                auto& list = (*deriv)[bin];
                for (int t = 0; t + 1 < np; ++t) {
                    double d = dr[static_cast<std::size_t>(j) * (np - 1) + t];
                    if (d != 0.0) list.emplace_back(theta_off[p] + t, sN * d * ph);
                }
                if (mode == PulseMode::Complex) list.emplace_back(phi_off[p] + j, Complex(0, 1) * G[bin]);
            }
        }
        return G;
    }
};

struct PairConstraint {
    std::vector<std::pair<int, int>> pairs;  // (a, b): conj(G_a) G_b
};

// inner products between columns j < i of H_ort,p that are not structurally zero under Q2
std::vector<PairConstraint> active_constraints(const FilterBankParams& pr, int Q2) {
    const int L = pr.L(), N = pr.N, Q = pr.Q(), M = pr.M;
    std::vector<PairConstraint> out;
    for (int p0 = 0; p0 < pr.Ns(); ++p0)
        for (int j = 0; j < pr.K; ++j)
            for (int i = j + 1; i < pr.K; ++i) {
                PairConstraint c;
                for (int r = 0; r < N; ++r) {
                    int a = static_cast<int>(mod_index(p0 + static_cast<long>(j) * Q + static_cast<long>(r) * L, M));
                    int b = static_cast<int>(mod_index(p0 + static_cast<long>(i) * Q + static_cast<long>(r) * L, M));
                    if (a < Q2 && b < Q2) c.pairs.emplace_back(a, b);
                }
                if (!c.pairs.empty()) out.push_back(std::move(c));
            }
    return out;
}

Eigen::VectorXd pullback(const Layout& lay, const std::vector<std::vector<std::pair<int, Complex>>>& deriv,
                         const ComplexVector& gc) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(lay.size);
    for (std::size_t b = 0; b < deriv.size(); ++b)
        for (const auto& [t, d] : deriv[b]) grad[t] += (std::conj(gc[b]) * d).real();
    return grad;
}

} // namespace

ComplexVector angles_to_vector(std::span<const double> theta, std::span<const double> phi, int N) {
    if (phi.empty() || theta.size() + 1 != phi.size())
        throw std::invalid_argument("need n-1 amplitude angles and n phase angles");
    std::vector<double> r;
    sphere_amplitudes(theta, r, nullptr);
    ComplexVector v(phi.size());
    const double sN = std::sqrt(static_cast<double>(N));
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = sN * r[j] * Complex(std::cos(phi[j]), std::sin(phi[j]));
    return v;
}

PrototypePulse angles_to_pulse(const AngleParams& angles, const FilterBankParams& params, int delay) {
    params.validate();
    const int Q2 = resolved_band_limit(params, angles.band_limit_Q2);
    const int L = params.L();
    if (static_cast<int>(angles.theta.size()) != L || static_cast<int>(angles.phi.size()) != L)
        throw std::invalid_argument("angle sets must be given for all L sub-band vectors");
    Layout lay(params, Q2, PulseMode::Complex, delay);
    for (int p = 0; p < L; ++p)
        if (static_cast<int>(angles.theta[p].size()) != lay.n[p] - 1 ||
            static_cast<int>(angles.phi[p].size()) != lay.n[p])
            throw std::invalid_argument("wrong angle count for sub-band vector " + std::to_string(p));
    return PrototypePulse(params, lay.coefficients(lay.encode(angles), nullptr));
}

AngleParams pulse_to_angles(const PrototypePulse& pulse, std::optional<int> Q2_opt, int delay) {
    const auto& pr = pulse.params();
    const int Q2 = resolved_band_limit(pr, Q2_opt);
    Layout lay(pr, Q2, PulseMode::Complex, delay);
    AngleParams a;
    a.band_limit_Q2 = Q2_opt;
    a.theta.resize(pr.L());
    a.phi.resize(pr.L());
    for (int p = 0; p < pr.L(); ++p) {
        const int n = lay.n[p];
        ComplexVector u(n);
        bool real = true;
        double norm = 0.0;
        for (int j = 0; j < n; ++j) {
            int bin = p + j * pr.L();
            u[j] = pulse.G()[bin] * std::conj(lay.delay_phase(bin));
            norm = std::max(norm, std::abs(u[j]));
        }
        for (const auto& z : u)
            if (std::abs(z.imag()) > 1e-12 * std::max(norm, 1.0)) real = false;
        std::vector<double> r(n);
        a.phi[p].assign(n, 0.0);
        for (int j = 0; j < n; ++j) {
            if (real) {
                r[j] = u[j].real();
            } else {
                r[j] = std::abs(u[j]);
                a.phi[p][j] = std::arg(u[j]);
            }
        }
        a.theta[p].resize(n - 1);
        for (int j = 0; j + 1 < n; ++j) {
            double tail = 0.0;
            for (int t = j + 1; t < n; ++t) tail += r[t] * r[t];
            tail = std::sqrt(tail);
            // last angle keeps the sign of the final component
            if (j + 2 == n && r[n - 1] < 0) tail = -tail;
            a.theta[p][j] = std::atan2(tail, r[j]);
        }
    }
    return a;
}

AngleParams random_angles(const FilterBankParams& params, std::optional<int> Q2_opt, PulseMode mode,
                          std::uint64_t seed) {
    const int Q2 = resolved_band_limit(params, Q2_opt);
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> th(0.0, kPi), ph(0.0, 2.0 * kPi);
    AngleParams a;
    a.band_limit_Q2 = Q2_opt;
    a.theta.resize(params.L());
    a.phi.resize(params.L());
    for (int p = 0; p < params.L(); ++p) {
        int n = nonzero_count(params, p, Q2);
        for (int t = 0; t + 1 < n; ++t) a.theta[p].push_back(th(rng));
        for (int t = 0; t < n; ++t) a.phi[p].push_back(mode == PulseMode::Complex ? ph(rng) : 0.0);
    }
    return a;
}

std::vector<double> orthogonality_constraints(const PrototypePulse& pulse) {
    std::vector<double> out;
    for (const auto& m : build_orth_matrices(pulse)) {
        Eigen::MatrixXcd gram = m.H.adjoint() * m.H;
        for (Eigen::Index j = 0; j < gram.rows(); ++j)
            for (Eigen::Index i = j + 1; i < gram.cols(); ++i) {
                out.push_back(gram(j, i).real());
                out.push_back(gram(j, i).imag());
            }
    }
    return out;
}

std::vector<double> orthogonality_constraints(const AngleParams& angles, const FilterBankParams& params) {
    return orthogonality_constraints(angles_to_pulse(angles, params));
}

double rrc_rolloff(const FilterBankParams& params) {
    double beta = static_cast<double>(params.Q() - params.L()) / params.L();
    return std::min(beta, 1.0);
}

PrototypePulse rrc_pulse(const FilterBankParams& params) {
    params.validate();
    const int M = params.M, L = params.L(), Q = params.Q(), N = params.N;
    ComplexVector G(M);
    if (Q == L) {
        for (int i = 0; i < L; ++i) G[i] = 1.0;
    } else {
        const double beta = rrc_rolloff(params);
        const double center = 0.5 * Q;
        const double lo = 0.5 * (1.0 - beta) * L, hi = 0.5 * (1.0 + beta) * L;
        for (int i = 0; i < M; ++i) {
            double f = std::abs(i - center);
            if (f <= lo)
                G[i] = 1.0;
            else if (f <= hi)
                G[i] = std::sqrt(0.5 * (1.0 + std::cos(kPi / (beta * L) * (f - lo))));
        }
    }
    double mean = 0.0;
    for (int p = 0; p < L; ++p)
        for (int s = 0; s < N; ++s) mean += std::norm(G[p + s * L]);
    mean /= L;
    const double scale = std::sqrt(N / mean);
    const int d = centering_delay(params);
    for (int i = 0; i < M; ++i) {
        double a = -2.0 * kPi * static_cast<double>((static_cast<long>(i) * d) % M) / M;
        G[i] *= scale * Complex(std::cos(a), std::sin(a));
    }
    return PrototypePulse(params, std::move(G));
}

DesignResult design_pulse(const DesignSpec& spec, const Objective& objective) {
    spec.params.validate();
    if (!objective.value && !objective.value_grad) throw std::invalid_argument("design needs an objective");
    if (spec.n_starting_points < 1) throw std::invalid_argument("need at least one starting point");
    const int Q2 = resolved_band_limit(spec.params, spec.band_limit_Q2.value_or(spec.params.Q()));
    const Layout lay(spec.params, Q2, spec.pulse_mode, centering_delay(spec.params));
    const auto cons = active_constraints(spec.params, Q2);
    const double invN = 1.0 / spec.params.N;

    auto value_of = [&](const PrototypePulse& pulse) {
        if (objective.value) return objective.value(pulse);
        ComplexVector gc;
        return objective.value_grad(pulse, gc);
    };

    opt::ValueGrad F;
    if (objective.value_grad) {
        F = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
            std::vector<std::vector<std::pair<int, Complex>>> deriv;
            ComplexVector G = lay.coefficients(x, &deriv);
            ComplexVector gc;
            double v = objective.value_grad(PrototypePulse(spec.params, std::move(G)), gc);
            grad = -pullback(lay, deriv, gc);
            return -v;
        };
    } else {
        F = opt::with_forward_differences(
            [&](const Eigen::VectorXd& x) {
                return -objective.value(PrototypePulse(spec.params, lay.coefficients(x, nullptr)));
            },
            spec.fd_step);
    }

    opt::ConstraintFn C = [&](const Eigen::VectorXd& x, Eigen::VectorXd& c, Eigen::MatrixXd* J) {
        std::vector<std::vector<std::pair<int, Complex>>> deriv;
        ComplexVector G = lay.coefficients(x, J ? &deriv : nullptr);
        const Eigen::Index m = static_cast<Eigen::Index>(cons.size());
        c.resize(2 * m);
        if (J) J->setZero(2 * m, lay.size);
        for (Eigen::Index k = 0; k < m; ++k) {
            Complex acc{};
            for (const auto& [a, b] : cons[k].pairs) {
                acc += std::conj(G[a]) * G[b];
                if (!J) continue;
                for (const auto& [t, d] : deriv[a]) {
                    Complex v = std::conj(d) * G[b] * invN;
                    (*J)(2 * k, t) += v.real();
                    (*J)(2 * k + 1, t) += v.imag();
                }
                for (const auto& [t, d] : deriv[b]) {
                    Complex v = std::conj(G[a]) * d * invN;
                    (*J)(2 * k, t) += v.real();
                    (*J)(2 * k + 1, t) += v.imag();
                }
            }
            acc *= invN;
            c[2 * k] = acc.real();
            c[2 * k + 1] = acc.imag();
        }
    };

    opt::ConstrainedOptions copts;
    copts.inner.max_iter = spec.max_iterations;

    const int R = spec.n_starting_points;
    std::vector<DesignResult> results(R);
    parallel_for(static_cast<std::size_t>(R), spec.threads, [&](std::size_t r) {
        AngleParams start = (r == 0 && spec.initial) ? *spec.initial
                                                     : random_angles(spec.params, Q2, spec.pulse_mode,
                                                                     spec.seed * 1000003ULL + r);
        Eigen::VectorXd x0 = lay.encode(start);
        auto res = opt::minimize_augmented_lagrangian(F, C, x0, copts);
        PrototypePulse pulse(spec.params, lay.coefficients(res.x, nullptr));
        auto rep = check_gnc(pulse, kFeasibilityTolerance);
        DesignResult& out = results[r];
        out.angles = lay.decode_angles(res.x);
        out.objective_value = value_of(pulse);
        out.residual = std::max(rep.max_isi_residual, rep.max_ici_residual);
        out.pulse = std::move(pulse);
    });

    std::vector<RestartRecord> trace(R);
    int best = -1, best_infeasible = -1;
    for (int r = 0; r < R; ++r) {
        bool feasible = results[r].residual <= kFeasibilityTolerance && std::isfinite(results[r].objective_value);
        trace[r] = {r, feasible, results[r].objective_value, results[r].residual};
        if (feasible) {
            if (best < 0 || results[r].objective_value > results[best].objective_value) best = r;
        } else if (best_infeasible < 0 || results[r].residual < results[best_infeasible].residual) {
            best_infeasible = r;
        }
    }
    if (best < 0) {
        DesignResult fail = std::move(results[best_infeasible]);
        fail.restarts = trace;
        throw DesignFailure("no feasible pulse found in " + std::to_string(R) + " restarts", std::move(fail));
    }
    DesignResult out = std::move(results[best]);
    out.restarts = std::move(trace);
    return out;
}

} // namespace cbfmt
