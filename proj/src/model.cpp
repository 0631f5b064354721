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

#include "pulseforge/model.hpp"

#include <cmath>
#include <numbers>

#include "pulseforge/error.hpp"

namespace pulseforge {

namespace {

constexpr double kClockRelTol = 1e-12;

void check_finite(std::span<const double> eps) {
    for (double e : eps) {
        if (!std::isfinite(e)) throw InputError("pulse contains a non-finite detuning sample");
    }
}

}  // namespace

void DeviceModel::validate() const {
    if (!(j0 > 0)) throw InputError("device: j0 must be positive");
    if (!(eps0 > 0)) throw InputError("device: eps0 must be positive");
    if (!(tau_rise > 0)) throw InputError("device: tau_rise must be positive");
    if (!(t_sample > 0)) throw InputError("device: t_sample must be positive");
    if (!(eps_min < eps_max)) throw InputError("device: eps_min must be below eps_max");
    if (n_sub < 1) throw InputError("device: n_sub must be at least 1");
}

double DeviceModel::j_min() const { return exchange_j(eps_min, *this); }

double exchange_j(double eps, const DeviceModel &device) { return device.j0 * std::exp(eps / device.eps0); }

double clocked_dbz(int n_dbz, double total_time, double j_min) {
    if (!(total_time > 0)) throw InputError("clock: total time must be positive");
    double omega = 2 * std::numbers::pi * n_dbz / total_time;
    if (!(omega > j_min)) {
        throw InfeasibleError("clock condition infeasible: 2*pi*n_dbz/T = " + std::to_string(omega) +
                              " rad/ns does not exceed J(eps_min) = " + std::to_string(j_min) + " rad/ns");
    }
    return std::sqrt(omega * omega - j_min * j_min);
}

GateTarget GateTarget::make(const Vec3 &axis, double angle) {
    double n = axis.norm();
    if (!(std::abs(n - 1) < 1e-9)) throw InputError("target axis must be a unit vector");
    if (!(angle >= 0 && angle <= 2 * std::numbers::pi)) throw InputError("target angle must lie in [0, 2pi]");
    return {axis * (1.0 / n), angle};
}

GateTarget GateTarget::x90() { return {{1, 0, 0}, std::numbers::pi / 2}; }
GateTarget GateTarget::y90m() { return {{0, -1, 0}, std::numbers::pi / 2}; }
GateTarget GateTarget::x180() { return {{1, 0, 0}, std::numbers::pi}; }

PulseSequence::PulseSequence(std::shared_ptr<const DeviceModel> device, std::vector<double> eps, int n_dbz,
                             double dbz, GateTarget target, std::string name)
    : device_(std::move(device)),
      eps_(std::move(eps)),
      n_dbz_(n_dbz),
      dbz_(dbz),
      target_(target),
      name_(std::move(name)) {}

PulseSequence PulseSequence::clocked(std::shared_ptr<const DeviceModel> device, std::vector<double> eps, int n_dbz,
                                     GateTarget target, std::string name) {
    if (!device) throw InputError("pulse: missing device model");
    device->validate();
    double t = device->gate_time(static_cast<int>(eps.size()));
    double dbz = clocked_dbz(n_dbz, t, device->j_min());
    return with_dbz(std::move(device), std::move(eps), n_dbz, dbz, target, std::move(name));
}

PulseSequence PulseSequence::with_dbz(std::shared_ptr<const DeviceModel> device, std::vector<double> eps, int n_dbz,
                                      double dbz, GateTarget target, std::string name) {
    if (!device) throw InputError("pulse: missing device model");
    device->validate();
    if (eps.empty()) throw InputError("pulse: at least one detuning sample is required");
    check_finite(eps);
    for (double e : eps) {
        if (e < device->eps_min || e > device->eps_max) {
            throw InputError("pulse: detuning sample " + std::to_string(e) + " uV outside device bounds");
        }
    }
    if (n_dbz < 1) throw InfeasibleError("pulse: n_dbz must be at least 1");
    double t = device->gate_time(static_cast<int>(eps.size()));
    double j_min = device->j_min();
    double lhs = std::sqrt(dbz * dbz + j_min * j_min) * t;
    double rhs = 2 * std::numbers::pi * n_dbz;
    if (std::abs(lhs - rhs) > kClockRelTol * rhs) throw InputError("pulse: dbz violates the clock condition");
    if (!(j_min < dbz / 10)) {
        throw InfeasibleError("pulse: J(eps_min) must stay below dbz/10 (J_min = " + std::to_string(j_min) +
                              ", dbz = " + std::to_string(dbz) + ")");
    }
    return PulseSequence(std::move(device), std::move(eps), n_dbz, dbz, target, std::move(name));
}

PulseSequence PulseSequence::reclocked(std::shared_ptr<const DeviceModel> device) const {
    return clocked(std::move(device), eps_, n_dbz_, target_, name_);
}

PulseSequence PulseSequence::with_eps(std::vector<double> eps) const {
    return with_dbz(device_, std::move(eps), n_dbz_, dbz_, target_, name_);
}

bool PulseSequence::operator==(const PulseSequence &o) const {
    return *device_ == *o.device_ && eps_ == o.eps_ && n_dbz_ == o.n_dbz_ && dbz_ == o.dbz_ &&
           target_ == o.target_ && name_ == o.name_;
}

bool Waveform::uniform() const {
    if (dt.empty()) return true;
    for (double d : dt) {
        if (std::abs(d - dt.front()) > 1e-12 * dt.front()) return false;
    }
    return true;
}

Waveform rendered_waveform(const PulseSequence &pulse) { return rendered_waveform(pulse.device(), pulse.eps()); }

Waveform rendered_waveform(const DeviceModel &dev, std::span<const double> eps, double wait_ns) {
    const double tau = dev.tau_rise;
    const double h = dev.t_sample / dev.n_sub;
    const double wait = wait_ns > 0 ? wait_ns : dev.wait_time();
    const int n_wait = std::max(1, static_cast<int>(std::ceil(wait / h - 1e-9)));
    const double h_wait = wait / n_wait;

    Waveform w;
    size_t n = eps.size() * dev.n_sub + n_wait;
    w.t_start.reserve(n);
    w.dt.reserve(n);
    w.eps_mid.reserve(n);

    double entry = dev.eps_min;
    double t = 0;
    auto hold = [&](double command, int steps, double step) {
        for (int s = 0; s < steps; s++) {
            w.t_start.push_back(t + s * step);
            w.dt.push_back(step);
            w.eps_mid.push_back(command + (entry - command) * std::exp(-(s + 0.5) * step / tau));
        }
        double len = steps * step;
        entry = command + (entry - command) * std::exp(-len / tau);
        t += len;
    };
    for (double e : eps) hold(e, dev.n_sub, h);
    hold(dev.eps_min, n_wait, h_wait);
    return w;
}

ExchangeProfile exchange_profile(const PulseSequence &pulse) { return exchange_profile(pulse.device(), pulse.eps()); }

ExchangeProfile exchange_profile(const DeviceModel &device, std::span<const double> eps, double wait_ns) {
    Waveform w = rendered_waveform(device, eps, wait_ns);
    ExchangeProfile p;
    p.dt = std::move(w.dt);
    p.j.resize(w.eps_mid.size());
    for (size_t k = 0; k < p.j.size(); k++) p.j[k] = exchange_j(w.eps_mid[k], device);
    return p;
}

Su2 propagate_profile(const ExchangeProfile &profile, double dbz, double j_scale) {
    Su2 u;
    for (size_t k = 0; k < profile.j.size(); k++) u = step_propagator(profile.j[k] * j_scale, dbz, profile.dt[k]) * u;
    return u;
}

Su2 propagate_su2(const PulseSequence &pulse) {
    check_finite(pulse.eps());
    return propagate_profile(exchange_profile(pulse), pulse.dbz());
}

Unitary2 propagate(const PulseSequence &pulse) { return Unitary2::from_su2(propagate_su2(pulse)); }

}  // namespace pulseforge
