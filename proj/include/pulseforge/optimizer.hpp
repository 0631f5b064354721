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
#include <span>
#include <vector>

#include "pulseforge/lm.hpp"
#include "pulseforge/model.hpp"
#include "pulseforge/noise.hpp"

namespace pulseforge {

/// [I_dbz, I_eps_slow, I_eps_fast, (φn − φ_t n_t)_x, _y, _z]
using GateResidual = Eigen::Matrix<double, 6, 1>;

/// Fixed part of a gate-synthesis problem: everything except the samples.
struct GateProblem {
    std::shared_ptr<const DeviceModel> device = std::make_shared<DeviceModel>();
    NoiseModel noise{};
    GateTarget target = GateTarget::x90();
    int n_seg = 18;
    int n_dbz = 2;
    /// Use √I for the three noise components instead of I.
    bool sqrt_components = false;
};

/// φn − φ_t n_t for the representative of the realized rotation closest to
/// the target ((φ, n) and (2π − φ, −n) describe the same gate).
Vec3 rotation_mismatch(const Su2 &realized, const GateTarget &target);

/// Evaluates the gate-synthesis residual for a fixed problem. The clocked
/// ΔBz is derived once at construction (InfeasibleError if impossible).
class GateObjective {
   public:
    explicit GateObjective(GateProblem problem);

    const GateProblem &problem() const { return problem_; }
    double dbz() const { return dbz_; }
    const NoiseEvaluator &evaluator() const { return evaluator_; }

    PulseSequence pulse(std::span<const double> eps) const;
    GateResidual residuals(std::span<const double> eps) const;
    Eigen::VectorXd residual_vector(const Eigen::VectorXd &eps) const;
    Bounds bounds() const;
    /// Default LM settings: forward-difference step 1e-3·(eps_max − eps_min).
    LmConfig default_lm() const;

   private:
    GateProblem problem_;
    double dbz_;
    NoiseEvaluator evaluator_;
};

GateResidual gate_residuals(std::span<const double> eps, const GateProblem &problem);

struct OptimizationResult {
    std::optional<PulseSequence> best;
    GateReport report;
    int restarts = 0;
    int best_restart = -1;
    std::vector<double> final_costs;  ///< per restart, in restart order
    std::vector<double> cost_history_best;
    double wall_time_s = 0;
    uint64_t seed = 0;
};

struct MultistartOptions {
    int n_restarts = 100;
    uint64_t seed = 0;
    int workers = 1;
    std::optional<LmConfig> lm;  ///< problem default when absent
    /// Gauss–Newton projection of the winner onto zero systematic mismatch.
    bool polish = true;
};

/// Independent LM runs from uniform random starts within the detuning bounds;
/// returns the lowest-cost restart (ties broken by restart index).
OptimizationResult multistart_optimize(const GateProblem &problem, const MultistartOptions &options);

/// Drives the three rotation-mismatch components to zero with minimum-norm
/// Gauss–Newton steps that stay inside the bounds.
std::vector<double> polish_systematic(const GateObjective &objective, std::vector<double> eps, int max_steps = 20);

struct ScanCell {
    int n_seg = 0;
    int n_dbz = 0;
    bool feasible = true;
    std::string message;
    std::optional<OptimizationResult> result;
};

/// One multistart run per (n_seg, n_dbz) cell; infeasible cells are recorded
/// and skipped.
std::vector<ScanCell> scan_grid(const GateProblem &base, std::span<const int> n_seg_list,
                                std::span<const int> n_dbz_list, const MultistartOptions &options);

struct RobustnessCase {
    double j0_factor = 1, eps0_factor = 1, tau_factor = 1;
    double inf_noise = 0;
    double inf_systematic = 0;
};

struct RobustnessResult {
    double nominal = 0;
    double worst = 0;
    std::vector<RobustnessCase> cases;
};

/// Noise-only infidelity under model errors: the 2³ corners of
/// (j0, eps0, tau_rise) × (1 ± magnitude) plus each single-parameter change.
/// ΔBz is re-clocked against the perturbed J(eps_min).
enum class RobustnessMode {
    /// (J0, ε0) over the ±m grid with τ_rise nominal, plus τ_rise ± m alone.
    exchange_or_rise,
    /// All 2³ sign corners of (J0, ε0, τ_rise) plus each single-parameter change.
    all_corners,
};

/// Noise-only infidelity of the pulse re-clocked on perturbed device models.
RobustnessResult robustness_scan(const PulseSequence &pulse, const NoiseModel &noise, double magnitude = 0.2,
                                 RobustnessMode mode = RobustnessMode::exchange_or_rise);

/// |a| of the first-order error generator U0†∂U = −i a·σ with respect to a
/// common detuning offset (per µV) and a ΔBz offset (per rad/ns).
struct Sensitivity {
    double eps = 0;
    double dbz = 0;
};

Sensitivity first_order_sensitivity(const PulseSequence &pulse);

/// Same quantities for a constant-Hamiltonian rectangular rotation of the
/// target angle lasting the gate duration, with its exchange part realized
/// through J(ε) and its gradient part through ΔBz.
Sensitivity rectangular_sensitivity(const GateTarget &target, double duration, const DeviceModel &device);

struct FilterPeak {
    double f_peak = 0;
    double value_peak = 0;
};

FilterPeak filter_peak(const PulseSequence &pulse, double f_min = 1e6, double f_max = 3e9, int points = 600);

}  // namespace pulseforge
