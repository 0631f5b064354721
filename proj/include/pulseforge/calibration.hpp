// Copyright 2026 The pulseforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pulseforge/lm.hpp"
#include "pulseforge/model.hpp"
#include "pulseforge/noise.hpp"

namespace pulseforge {

/// The simulated "real" device that calibration measurements come from.
/// Its parameters may differ from the nominal model used for synthesis.
struct ExperimentModel {
    std::shared_ptr<const DeviceModel> true_device = std::make_shared<DeviceModel>();
    double true_dbz = 0;  ///< rad/ns, the gradient the experiment actually runs at
    int shots = 10000;    ///< single-shot measurements averaged per sequence
    uint64_t seed = 0;
    double wait_ns = 0;   ///< relaxation window actually played; device default when ≤ 0

    void validate() const;
};

/// Experiment matching the nominal model of a pulse exactly.
ExperimentModel matched_experiment(const PulseSequence &pulse, int shots = 10000, uint64_t seed = 0);

/// Small systematic errors of a π/2_x and π/2_(−y) gate pair.
///
/// Conventions (chosen so that S = L·params keeps the first-order
/// signs of a +y reference gate):
///   x gate: angle π/2 + 2φ about axis ∝ (1, −n_y, −n_z)
///   y gate: angle π/2 + 2χ about axis ∝ (v_x, −1, −v_z)
struct GateErrorParams {
    double phi = 0, chi = 0, n_y = 0, n_z = 0, v_x = 0, v_z = 0;

    Eigen::Matrix<double, 6, 1> vector() const;
    static GateErrorParams from_vector(const Eigen::Matrix<double, 6, 1> &v);
};

/// Rows: S_1..S_6; columns: φ, χ, n_y, n_z, v_x, v_z. Rank 5: a joint
/// z-rotation shifts n_y and v_x in opposite directions and is invisible to a
/// σ_z readout, so only n_y + v_x is identifiable.
const Eigen::Matrix<double, 6, 6> &bootstrap_linear_map();

/// Gate pair realizing the given error parameters exactly.
std::pair<Su2, Su2> gates_from_error_params(const GateErrorParams &p);
/// Inverse of gates_from_error_params (exact, not linearized).
GateErrorParams error_params_from_gates(const Su2 &x_gate, const Su2 &y_gate);

/// Minimum-norm least-squares inversion of the bootstrap table.
GateErrorParams fit_error_params(const Eigen::Matrix<double, 6, 1> &s);

using BootstrapVector = Eigen::Matrix<double, 6, 1>;

/// Exact σ_z expectations of the six bootstrap sequences applied to |S⟩:
///   π/2_x;  π/2_y;  y←x;  x←y;  x←x←x←y;  y←x←x←x   (rightmost applied first)
BootstrapVector bootstrap_outcomes_exact(const Su2 &x_gate, const Su2 &y_gate);

/// Replaces each S_i by 2k/shots − 1 with k ~ Binomial(shots, (1 + S_i)/2).
BootstrapVector sample_outcomes(const BootstrapVector &exact, int shots, std::mt19937_64 &rng);

/// Noise-free gate realized by the experiment when playing the samples.
Su2 realized_gate(std::span<const double> eps, const ExperimentModel &experiment);

/// Plays both pulses on the true device and measures the six sequences.
/// `rng` is required when `exact` is false.
BootstrapVector bootstrap_outcomes(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                   const ExperimentModel &experiment, bool exact, std::mt19937_64 *rng = nullptr);

struct PairInfidelity {
    double x = 0;
    double y = 0;
    double gamma = 0;  ///< optimal joint z-rotation

    double mean() const { return 0.5 * (x + y); }
    double max() const { return std::max(x, y); }
};

/// Systematic infidelity of a gate pair modulo a joint z-rotation: minimizes
/// the mean of 1 − F(R_z(γ)·U·R_z(−γ), U_t) over γ (360-point scan followed by
/// golden-section refinement to 1e-6).
PairInfidelity systematic_infidelity_pair(const Su2 &x_gate, const Su2 &y_gate, const GateTarget &x_target,
                                          const GateTarget &y_target);
PairInfidelity systematic_infidelity_pair(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                          const ExperimentModel &experiment);

enum class JacobianSource {
    measured,  ///< forward differences of fresh measurements
    model,     ///< forward differences of the exact nominal-model outcomes
};

struct CalibrationConfig {
    double w_n = 1.0;
    double w_n_prime = 1.0;
    int max_iter = 25;
    double success_threshold = 1e-3;  ///< per-gate I_sys
    JacobianSource jacobian = JacobianSource::model;
    double fd_step = 1.6;             ///< µV, forward-difference step for the Jacobian
    double lambda0 = 1.0;  ///< restarted every iteration
    double nu = 3.0;
    double damping_floor = 1e-2;  ///< see LmConfig::damping_floor
    /// Evaluate S without shot noise (pure simulation mode).
    bool exact_measurements = false;
};

/// [S_1..S_6, w_n·I_n(x), w_n'·I_n(y)] with I_n the noise-only infidelity
/// under the nominal model and noise spectrum.
class CalibrationObjective {
   public:
    CalibrationObjective(PulseSequence nominal_x, PulseSequence nominal_y, NoiseModel noise,
                         ExperimentModel experiment, CalibrationConfig config);

    int dimension() const { return n_x_ + n_y_; }
    Eigen::VectorXd pack(const PulseSequence &x, const PulseSequence &y) const;
    PulseSequence pulse_x(const Eigen::VectorXd &v) const;
    PulseSequence pulse_y(const Eigen::VectorXd &v) const;
    Bounds bounds() const;

    /// Measured residual; draws fresh shots unless exact measurements are configured.
    Eigen::VectorXd residuals(const Eigen::VectorXd &v);
    /// Residual with exact outcomes computed on the nominal device.
    Eigen::VectorXd model_residuals(const Eigen::VectorXd &v) const;
    Eigen::VectorXd noise_terms(const Eigen::VectorXd &v) const;
    BootstrapVector last_measurement() const { return last_s_; }
    std::array<double, 2> noise_infidelities(const Eigen::VectorXd &v) const;

    const ExperimentModel &experiment() const { return experiment_; }
    const CalibrationConfig &config() const { return config_; }

   private:
    PulseSequence nominal_x_, nominal_y_;
    NoiseEvaluator evaluator_;
    ExperimentModel experiment_;
    ExperimentModel nominal_experiment_;
    CalibrationConfig config_;
    int n_x_, n_y_;
    std::mt19937_64 rng_;
    BootstrapVector last_s_ = BootstrapVector::Zero();
};

Eigen::Matrix<double, 8, 1> calibration_residuals(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                          const ExperimentModel &experiment, const NoiseModel &noise, double w_n,
                                          double w_n_prime, std::mt19937_64 *rng = nullptr);

struct CalibrationRecord {
    int iter = 0;
    BootstrapVector s = BootstrapVector::Zero();
    std::array<double, 2> i_sys{};
    std::array<double, 2> i_n{};
    bool accepted = false;
};

struct CalibrationState {
    std::optional<PulseSequence> pulse_x, pulse_y;
    BootstrapVector s_measured = BootstrapVector::Zero();
    int iteration = 0;
    bool converged = false;
    std::vector<CalibrationRecord> history;
    int measurements = 0;  ///< residual evaluations, i.e. rounds of six measured sequences
};

/// Closed-loop tuning: one LM step per iteration on the measured residual,
/// stopping once both gates have I_sys below the threshold under the true
/// model, or after max_iter iterations (converged = false).
CalibrationState calibrate_loop(const PulseSequence &pulse_x, const PulseSequence &pulse_y, const NoiseModel &noise,
                                const ExperimentModel &experiment, const CalibrationConfig &config);

enum class InjectionMechanism {
    parameter_mismatch,  ///< true j0, eps0, tau_rise scaled multiplicatively
    sample_offsets,      ///< Gaussian offsets added to the starting samples
};

std::string to_string(InjectionMechanism m);

struct InjectedErrors {
    ExperimentModel experiment;
    PulseSequence pulse_x, pulse_y;
    double i_s = 0;  ///< mean pair systematic infidelity of the starting point
    InjectionMechanism mechanism = InjectionMechanism::parameter_mismatch;
    double scale = 0;
    std::vector<double> direction;  ///< unit-variance random direction that was scaled
    int attempts = 0;
};

/// Applies one seeded perturbation of the given scale (scale 0 → unchanged).
InjectedErrors inject_errors(const PulseSequence &pulse_x, const PulseSequence &pulse_y, InjectionMechanism mechanism,
                             double scale, uint64_t seed, int shots = 10000);

/// Rejection-samples perturbations until the starting I_s lies in [lo, hi].
/// Throws ConvergenceError after 10⁴ attempts.
InjectedErrors inject_errors_in_bin(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                    InjectionMechanism mechanism, double lo, double hi, uint64_t seed,
                                    int shots = 10000);

struct BenchmarkRow {
    double bin_lo = 0, bin_hi = 0;
    int runs = 0;
    double success_rate = 0;
    double median_iters = 0;
    double in_p10 = 0, in_p50 = 0, in_p90 = 0;  ///< final mean I_n of the pair
    std::vector<int> iterations;
    std::vector<double> final_i_n;
    std::vector<bool> success;
};

struct BenchmarkOptions {
    int runs_per_bin = 100;
    int shots = 10000;
    uint64_t seed = 0;
    int workers = 1;
    InjectionMechanism mechanism = InjectionMechanism::sample_offsets;
    CalibrationConfig calibration{};
};

/// For each bin: inject errors into the seed pair, calibrate, and record
/// success (both I_sys below threshold), iterations, and final I_n percentiles.
std::vector<BenchmarkRow> benchmark_success_rate(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                                 const NoiseModel &noise,
                                                 std::span<const std::pair<double, double>> bins,
                                                 const BenchmarkOptions &options);

/// Linear interpolation percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

}  // namespace pulseforge
