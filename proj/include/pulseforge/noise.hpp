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

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "pulseforge/model.hpp"
#include "pulseforge/quadrature.hpp"

namespace pulseforge {

/// |g*|·μ_B/ħ for GaAs (g* = −0.44), in rad/ns per mT.
inline constexpr double kGaAsRadPerNsPerMilliTesla = 0.44 * 9.2740100783e-24 / 1.054571817e-34 * 1e-3 * 1e-9;

/// Quasistatic widths plus the one-sided charge-noise spectrum
/// S(f) = psd_amp·(1 Hz/f)^psd_exponent on [f_low, f_knee], white from f_knee
/// to f_high at S(f_knee).
struct NoiseModel {
    double sigma_dbz = 0.5 * kGaAsRadPerNsPerMilliTesla;  ///< rad/ns
    double sigma_eps = 8.0;                              ///< µV
    double psd_amp = 8e-16;                              ///< V²/Hz at 1 Hz
    double psd_exponent = 0.7;
    double f_low = 5e4;   ///< Hz
    double f_knee = 1e6;  ///< Hz
    double f_high = 3e9;  ///< Hz
    int n_quad = 7;

    void validate() const;
    /// Same model with the fast spectrum switched off.
    NoiseModel without_fast() const;
    bool has_fast() const { return psd_amp > 0 && f_high > f_low; }
    bool operator==(const NoiseModel &) const = default;
};

/// One-sided S_ε(f) in V²/Hz. Throws InputError outside [f_low, f_high].
double psd_eval(double f_hz, const NoiseModel &model);

// ---- fidelity ------------------------------------------------------------

/// (|Tr(U_t†U)|² + 2)/6. Both inputs must be unitary (InputError otherwise).
double average_gate_fidelity(const Unitary2 &u, const Unitary2 &target);
double average_gate_fidelity(const Su2 &u, const Su2 &target);
/// Mean over the six axial Bloch states of Tr[U_t ρ U_t† · U ρ U†].
double six_state_fidelity(const Unitary2 &u, const Unitary2 &target);
/// Mean six-state fidelity of an ensemble of realizations.
double ensemble_fidelity(std::span<const Unitary2> realizations, std::span<const double> weights,
                         const Unitary2 &target);

// ---- quasistatic channels -----------------------------------------------

/// 1 − Σ w_i F(U(ΔBz + δ_i), U_ref) with Gauss–Hermite nodes for N(0, σ_ΔBz²).
/// U_ref is the noise-free realized gate, so systematic error is not counted.
double quasistatic_infidelity_dbz(const PulseSequence &pulse, const NoiseModel &model);
/// Same for a common detuning offset δ ~ N(0, σ_ε²), applied exactly
/// (J_k → J_k·exp(δ/ε0)).
double quasistatic_infidelity_eps(const PulseSequence &pulse, const NoiseModel &model);

// ---- filter function -------------------------------------------------------

struct FilterFunctionTable {
    std::vector<double> frequencies;  ///< Hz
    std::vector<double> values;       ///< F(2πf), µV⁻²
};

/// Noise-coupling amplitudes c_k(t) = g(t)·R_k(t) on the sub-grid, where
/// g = J/(2ε0) and R_k = ½Tr(U(t)†σ_zU(t)σ_k) at each sub-step midpoint.
struct ToggleFrameCoupling {
    std::vector<double> t_start;
    std::vector<double> dt;
    std::array<std::vector<double>, 3> c;
};

ToggleFrameCoupling toggling_coupling(const PulseSequence &pulse);

/// F(ω) = Σ_k |∫ c_k(t) e^{−iωt} dt|², exact for piecewise-constant c_k.
double filter_value(const ToggleFrameCoupling &coupling, double f_hz);
FilterFunctionTable filter_function(const PulseSequence &pulse, std::span<const double> frequencies_hz);
std::vector<double> log_grid(double f_min, double f_max, int points);

// ---- fast-noise infidelity ----------------------------------------------

/// Lag kernel K(d) = ∫ S(f)·|ĥ(ω)|²·cos(ω·d·dt) df for a uniform sub-grid of
/// step dt, so that ∫ S·F df = Σ_k Σ_{n,m} c_kn c_km K(n−m). Precomputing it
/// once turns the spectral overlap into an O(N²) quadratic form.
class FastNoiseKernel {
   public:
    FastNoiseKernel(const NoiseModel &model, double dt, size_t max_lag);
    double dt() const { return dt_; }
    size_t max_lag() const { return kernel_.size(); }
    std::span<const double> values() const { return kernel_; }
    /// (2/3)·Σ_k c_kᵀ K c_k. Requires a uniform grid matching dt.
    double infidelity(const ToggleFrameCoupling &coupling) const;

   private:
    double dt_;
    std::vector<double> kernel_;  ///< µV² per (µV⁻²·ns⁻²), i.e. dimensionless after contraction
};

/// First-order fast-noise average-gate infidelity, (2/3)∫ S(f)F(2πf) df.
/// Uses the lag kernel on uniform grids, the spectral route otherwise.
double fast_noise_infidelity(const PulseSequence &pulse, const NoiseModel &model);
/// Direct spectral quadrature on a log grid, refined from 200 points per
/// decade until the estimate changes by less than rel_tol.
double fast_noise_infidelity_spectral(const PulseSequence &pulse, const NoiseModel &model, double rel_tol = 1e-3);

// ---- report ----------------------------------------------------------------

struct GateReport {
    Unitary2 u_realized;
    RotationDecomposition rotation;
    double inf_dbz = 0;
    double inf_eps_slow = 0;
    double inf_eps_fast = 0;
    double inf_systematic = 0;
    double inf_total = 0;

    double inf_noise() const { return inf_dbz + inf_eps_slow + inf_eps_fast; }
};

/// Reusable evaluator holding the quadrature rule and fast-noise kernel.
class NoiseEvaluator {
   public:
    explicit NoiseEvaluator(NoiseModel model);
    const NoiseModel &model() const { return model_; }

    double infidelity_dbz(const ExchangeProfile &profile, double dbz, const Su2 &reference) const;
    double infidelity_eps_slow(const ExchangeProfile &profile, double dbz, double eps0, const Su2 &reference) const;
    double infidelity_eps_fast(const PulseSequence &pulse) const;
    GateReport evaluate(const PulseSequence &pulse) const;

   private:
    struct KernelCache;
    std::shared_ptr<const FastNoiseKernel> kernel_for(double dt, size_t n) const;

    NoiseModel model_;
    QuadratureRule rule_;
    std::shared_ptr<KernelCache> cache_;
};

GateReport evaluate_gate(const PulseSequence &pulse, const NoiseModel &model);

}  // namespace pulseforge
