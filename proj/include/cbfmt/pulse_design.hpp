#pragma once

#include "cbfmt/filterbank.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace cbfmt {

enum class PulseMode { Real, Complex };
enum class Metric { Ibob, Capacity };

struct AngleParams {
    std::vector<std::vector<double>> theta;  // per v_p, n_p - 1 entries
    std::vector<std::vector<double>> phi;    // per v_p, n_p entries (zeros in real mode)
    std::optional<int> band_limit_Q2;
};

// number of bins p + sL below Q2
int nonzero_count(const FilterBankParams& params, int p, int Q2);
int resolved_band_limit(const FilterBankParams& params, std::optional<int> Q2);
int free_parameter_count(const FilterBankParams& params, std::optional<int> Q2, PulseMode mode);

// delay that moves the pulse to the middle of the block
inline int centering_delay(const FilterBankParams& params) { return params.M / 2; }

// sqrt(N) * hyperspherical point with phases; length = phi.size()
ComplexVector angles_to_vector(std::span<const double> theta, std::span<const double> phi, int N);

// coefficients get the extra linear phase exp(-i 2 pi i delay / M)
PrototypePulse angles_to_pulse(const AngleParams& angles, const FilterBankParams& params, int delay = 0);
AngleParams pulse_to_angles(const PrototypePulse& pulse, std::optional<int> Q2, int delay = 0);

AngleParams random_angles(const FilterBankParams& params, std::optional<int> Q2, PulseMode mode,
                          std::uint64_t seed);

// Re/Im of column inner products of every H_ort,p, j < i; 2 * Ns * K(K-1)/2 values
std::vector<double> orthogonality_constraints(const AngleParams& angles, const FilterBankParams& params);
std::vector<double> orthogonality_constraints(const PrototypePulse& pulse);

PrototypePulse rrc_pulse(const FilterBankParams& params);
double rrc_rolloff(const FilterBankParams& params);

/**
 * value: objective to maximize. value_grad, when set, also returns the gradient
 * with respect to the coefficients as dF/dRe G + i dF/dIm G.
 */
struct Objective {
    std::function<double(const PrototypePulse&)> value;
    std::function<double(const PrototypePulse&, ComplexVector&)> value_grad;
};

struct DesignSpec {
    FilterBankParams params;
    Metric metric = Metric::Ibob;
    PulseMode pulse_mode = PulseMode::Real;
    int n_starting_points = 500;
    std::uint64_t seed = 1;
    std::optional<int> band_limit_Q2;
    std::optional<AngleParams> initial;  // replaces the random draw of restart 0
    int threads = 1;
    int max_iterations = 3000;
    double fd_step = 1e-6;
};

struct RestartRecord {
    int index = 0;
    bool feasible = false;
    double objective = 0.0;
    double residual = 0.0;
};

struct DesignResult {
    PrototypePulse pulse;
    AngleParams angles;
    double objective_value = 0.0;
    double residual = 0.0;
    std::vector<RestartRecord> restarts;
};

struct DesignFailure : std::runtime_error {
    DesignResult best_infeasible;
    DesignFailure(const std::string& what, DesignResult r) : std::runtime_error(what), best_infeasible(std::move(r)) {}
};

inline constexpr double kFeasibilityTolerance = 1e-8;

DesignResult design_pulse(const DesignSpec& spec, const Objective& objective);

} // namespace cbfmt
