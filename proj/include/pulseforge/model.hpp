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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pulseforge/unitary.hpp"

namespace pulseforge {

/// Physical and hardware parameters of one singlet-triplet device.
///
/// Units throughout: time in ns, angular frequency in rad/ns, detuning in µV.
/// Defaults are assumptions (the source measurements publish only the
/// functional form of J(ε) and τ_rise ~ 1 ns).
struct DeviceModel {
    double j0 = 1.0;          ///< exchange prefactor, rad/ns
    double eps0 = 250.0;      ///< exponential scale, µV
    double tau_rise = 1.0;    ///< first-order rise time, ns
    double eps_min = -1250.0; ///< lower detuning bound and idle baseline, µV
    double eps_max = 350.0;   ///< µV
    double t_sample = 1.0;    ///< AWG sample period, ns
    int n_sub = 10;           ///< sub-steps per sample

    /// Throws InputError on violated invariants.
    void validate() const;
    double wait_time() const { return 4.0 * tau_rise; }
    double gate_time(int n_seg) const { return n_seg * t_sample + wait_time(); }
    double j_min() const;

    bool operator==(const DeviceModel &) const = default;
};

/// J(ε) = j0·exp(ε/ε0)
double exchange_j(double eps, const DeviceModel &device);

/// ΔBz satisfying √(ΔBz² + j_min²)·T = 2π·n_dbz. Throws InfeasibleError when
/// 2π·n_dbz/T ≤ j_min.
double clocked_dbz(int n_dbz, double total_time, double j_min);

struct GateTarget {
    Vec3 axis{1, 0, 0};
    double angle = 0;

    /// Validates |axis| = 1 (to 1e-9, then renormalizes) and 0 ≤ angle ≤ 2π.
    static GateTarget make(const Vec3 &axis, double angle);
    static GateTarget x90();
    static GateTarget y90m();  ///< π/2 about −y
    static GateTarget x180();
    Su2 su2() const { return Su2::rotation(axis, angle); }
    Unitary2 unitary() const { return Unitary2::from_su2(su2()); }

    bool operator==(const GateTarget &) const = default;
};

/// One gate: n_seg rectangular detuning samples followed by a wait of
/// 4·τ_rise at eps_min, with ΔBz clocked so that idle evolution over the gate
/// period is a whole number of precessions.
class PulseSequence {
   public:
    /// Derives ΔBz from the clock condition.
    static PulseSequence clocked(std::shared_ptr<const DeviceModel> device, std::vector<double> eps, int n_dbz,
                                 GateTarget target, std::string name = {});
    /// Uses a given ΔBz, which must satisfy the clock condition to 1e-12
    /// relative (files carry ΔBz explicitly).
    static PulseSequence with_dbz(std::shared_ptr<const DeviceModel> device, std::vector<double> eps, int n_dbz,
                                  double dbz, GateTarget target, std::string name = {});

    const DeviceModel &device() const { return *device_; }
    const std::shared_ptr<const DeviceModel> &device_ptr() const { return device_; }
    std::span<const double> eps() const { return eps_; }
    int n_seg() const { return static_cast<int>(eps_.size()); }
    int n_dbz() const { return n_dbz_; }
    double dbz() const { return dbz_; }
    double total_time() const { return device_->gate_time(n_seg()); }
    const GateTarget &target() const { return target_; }
    const std::string &name() const { return name_; }

    /// Same samples, clock re-derived against another device model.
    PulseSequence reclocked(std::shared_ptr<const DeviceModel> device) const;
    PulseSequence with_eps(std::vector<double> eps) const;

    bool operator==(const PulseSequence &o) const;

   private:
    PulseSequence(std::shared_ptr<const DeviceModel> device, std::vector<double> eps, int n_dbz, double dbz,
                  GateTarget target, std::string name);

    std::shared_ptr<const DeviceModel> device_;
    std::vector<double> eps_;
    int n_dbz_ = 0;
    double dbz_ = 0;
    GateTarget target_;
    std::string name_;
};

/// Rise-filtered detuning on the propagation sub-grid.
struct Waveform {
    std::vector<double> t_start;  ///< ns
    std::vector<double> dt;       ///< ns
    std::vector<double> eps_mid;  ///< filtered ε at each sub-step midpoint, µV

    size_t size() const { return dt.size(); }
    /// True when every sub-step has the same length (to 1e-12 relative).
    bool uniform() const;
};

/// Single-pole low-pass of the rectangular command, starting relaxed at eps_min.
Waveform rendered_waveform(const PulseSequence &pulse);
/// Same for raw samples played on an arbitrary device (no clock check).
/// wait_ns > 0 overrides the device's relaxation window (the AWG fixes the
/// gate length even when the true rise time differs from the nominal one).
Waveform rendered_waveform(const DeviceModel &device, std::span<const double> eps, double wait_ns = 0);

/// Piecewise-constant exchange profile J_k on the sub-grid.
struct ExchangeProfile {
    std::vector<double> dt;
    std::vector<double> j;
};

ExchangeProfile exchange_profile(const PulseSequence &pulse);
ExchangeProfile exchange_profile(const DeviceModel &device, std::span<const double> eps, double wait_ns = 0);

/// Π_k exp(−i·dt_k·(J_k·scale·σ_z + dbz·σ_x)/2), rightmost factor earliest.
Su2 propagate_profile(const ExchangeProfile &profile, double dbz, double j_scale = 1.0);

/// Noise-free propagator of a pulse. Throws InputError on non-finite samples.
Unitary2 propagate(const PulseSequence &pulse);
Su2 propagate_su2(const PulseSequence &pulse);

/// Exact propagator of a single piecewise-constant step.
inline Su2 step_propagator(double j, double dbz, double dt) {
    double omega = std::sqrt(j * j + dbz * dbz);
    double half = 0.5 * omega * dt;
    if (omega == 0) return {};
    double s = std::sin(half) / omega;
    return {std::cos(half), {dbz * s, 0.0, j * s}};
}

}  // namespace pulseforge
