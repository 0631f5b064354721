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
#include <random>

#include "gtest/gtest.h"
#include "pulseforge/error.hpp"

using namespace pulseforge;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<DeviceModel> device_with(double eps_min, double eps_max, double tau, double t_sample, int n_sub) {
    auto d = std::make_shared<DeviceModel>();
    d->eps_min = eps_min;
    d->eps_max = eps_max;
    d->tau_rise = tau;
    d->t_sample = t_sample;
    d->n_sub = n_sub;
    return d;
}

// Dense 2x2 complex product of exp(−i(Jσz + Bσx)dt/2), independent of Su2.
using M2 = std::array<cplx, 4>;

M2 mat_step(double j, double b, double dt) {
    double w = std::sqrt(j * j + b * b);
    double c = std::cos(w * dt / 2), s = w > 0 ? std::sin(w * dt / 2) / w : dt / 2;
    cplx mi(0, -1);
    return {c + mi * s * j, mi * s * b, mi * s * b, c - mi * s * j};
}

M2 mat_mul(const M2 &a, const M2 &b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

}  // namespace

TEST(exchange, values) {
    DeviceModel d;
    EXPECT_DOUBLE_EQ(exchange_j(0, d), 1.0);
    EXPECT_NEAR(exchange_j(250, d), std::exp(1.0), 1e-12);
    EXPECT_NEAR(exchange_j(-250 * std::log(2.0), d), 0.5, 1e-12);
}

TEST(clock, values) {
    EXPECT_NEAR(clocked_dbz(2, 22, 0), 2 * kPi * 2 / 22, 1e-15);
    EXPECT_NEAR(clocked_dbz(2, 22, 0), 0.571199, 1e-6);
    EXPECT_NEAR(clocked_dbz(3, 34, 0.0067), std::sqrt(std::pow(6 * kPi / 34, 2) - 0.0067 * 0.0067), 1e-15);
    EXPECT_NEAR(clocked_dbz(3, 34, 0.0067), 0.554358, 1e-6);
    EXPECT_THROW(clocked_dbz(2, 22, 2 * kPi * 2 / 22), InfeasibleError);
    EXPECT_THROW(clocked_dbz(0, 22, 0.0067), InfeasibleError);
}

TEST(clock, pulse_time_and_dbz) {
    auto d = std::make_shared<DeviceModel>();
    auto p = PulseSequence::clocked(d, std::vector<double>(18, -400.0), 2, GateTarget::x90());
    EXPECT_DOUBLE_EQ(p.total_time(), 22.0);
    double omega = std::sqrt(p.dbz() * p.dbz() + d->j_min() * d->j_min());
    EXPECT_NEAR(omega * 22, 4 * kPi, 1e-12);
    EXPECT_THROW(PulseSequence::with_dbz(d, std::vector<double>(18, -400.0), 2, p.dbz() * 1.01, GateTarget::x90()),
                 InputError);
    EXPECT_THROW(PulseSequence::clocked(d, {400.0}, 2, GateTarget::x90()), InputError);
}

TEST(waveform, flat_at_baseline) {
    DeviceModel d;
    std::vector<double> eps{d.eps_min};
    Waveform w = rendered_waveform(d, eps);
    for (double e : w.eps_mid) EXPECT_DOUBLE_EQ(e, d.eps_min);
}

TEST(waveform, step_response) {
    // With one sub-step per 2 ns sample the first midpoint sits at t = 1 ns.
    auto d = device_with(0, 350, 1.0, 2.0, 1);
    std::vector<double> eps{100};
    Waveform w = rendered_waveform(*d, eps);
    EXPECT_NEAR(w.t_start[0] + 0.5 * w.dt[0], 1.0, 1e-15);
    EXPECT_NEAR(w.eps_mid[0], 100 * (1 - std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(w.eps_mid[0], 63.212, 1e-3);
}

TEST(waveform, matches_dense_ode) {
    DeviceModel d;
    std::vector<double> eps{120, -600};
    Waveform w = rendered_waveform(d, eps);
    double t_end = w.t_start.back() + w.dt.back();

    auto command = [&](double t) {
        int k = static_cast<int>(std::floor(t / d.t_sample + 1e-12));
        return k < static_cast<int>(eps.size()) ? eps[k] : d.eps_min;
    };
    // RK4 on dε/dt = (ε_cmd − ε)/τ, with the command held piecewise.
    const double h = 1e-4;
    double e = d.eps_min, t = 0, worst = 0;
    size_t next = 0;
    while (next < w.size()) {
        double mid = w.t_start[next] + 0.5 * w.dt[next];
        if (t + h > mid + 1e-12) {
            double hh = mid - t;
            double c = command(t + 0.5 * hh);
            double k1 = (c - e) / d.tau_rise, k2 = (c - (e + 0.5 * hh * k1)) / d.tau_rise;
            double k3 = (c - (e + 0.5 * hh * k2)) / d.tau_rise, k4 = (c - (e + hh * k3)) / d.tau_rise;
            double em = e + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            worst = std::max(worst, std::abs(em - w.eps_mid[next]));
            next++;
            continue;
        }
        double c = command(t + 0.5 * h);
        double k1 = (c - e) / d.tau_rise, k2 = (c - (e + 0.5 * h * k1)) / d.tau_rise;
        double k3 = (c - (e + 0.5 * h * k2)) / d.tau_rise, k4 = (c - (e + h * k3)) / d.tau_rise;
        e += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        t += h;
    }
    EXPECT_LT(worst, 1e-6);
    EXPECT_NEAR(t_end, 6.0, 1e-12);
}

TEST(propagate, pure_z_rotation) {
    ExchangeProfile p{{1.0}, {kPi}};
    RotationDecomposition r = decompose_rotation(propagate_profile(p, 0));
    EXPECT_NEAR(r.angle, kPi, 1e-12);
    EXPECT_NEAR(std::abs(r.axis.z), 1, 1e-12);
}

TEST(propagate, pure_x_rotation) {
    ExchangeProfile p{{2.0, 3.0}, {0.0, 0.0}};
    RotationDecomposition r = decompose_rotation(propagate_profile(p, kPi / 5));
    EXPECT_NEAR(r.angle, kPi, 1e-12);
    EXPECT_NEAR(std::abs(r.axis.x), 1, 1e-12);
}

TEST(propagate, refinement_oracle) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1250, 350);
    std::vector<double> eps(5);
    for (double &e : eps) e = u(rng);
    auto at = [&](int n_sub) {
        auto d = std::make_shared<DeviceModel>();
        d->n_sub = n_sub;
        return PulseSequence::clocked(d, eps, 1, GateTarget::x90());
    };

    // Independent product on a 64x finer grid.
    PulseSequence p10 = at(10), p20 = at(20);
    DeviceModel fine = p10.device();
    fine.n_sub = 640;
    Waveform w = rendered_waveform(fine, eps);
    M2 m{1, 0, 0, 1};
    for (size_t k = 0; k < w.size(); k++) m = mat_mul(mat_step(exchange_j(w.eps_mid[k], fine), p10.dbz(), w.dt[k]), m);

    // Midpoint sampling of the filtered waveform is second order in the sub-step.
    double e10 = frobenius_distance(propagate(p10), Unitary2(m));
    double e20 = frobenius_distance(propagate(p20), Unitary2(m));
    EXPECT_LT(e10, 2e-3);
    EXPECT_NEAR(e10 / e20, 4, 0.3);
}

TEST(decompose, quarter_x) {
    double s = std::sqrt(0.5);
    Unitary2 u({cplx(s, 0), cplx(0, -s), cplx(0, -s), cplx(s, 0)});
    RotationDecomposition r = decompose_rotation(u);
    EXPECT_NEAR(r.angle, kPi / 2, 1e-12);
    EXPECT_NEAR(r.axis.x, 1, 1e-12);
    EXPECT_FALSE(r.degenerate);
}

TEST(decompose, identity_is_degenerate) {
    RotationDecomposition r = decompose_rotation(Unitary2::identity());
    EXPECT_NEAR(r.angle, 0, 1e-15);
    EXPECT_TRUE(r.degenerate);
}

TEST(decompose, round_trip) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> a(0.01, kPi - 0.01);
    for (int k = 0; k < 200; k++) {
        Vec3 n{g(rng), g(rng), g(rng)};
        n = n * (1 / n.norm());
        double phi = a(rng);
        Unitary2 u = rotation_unitary(n, phi);
        RotationDecomposition r = decompose_rotation(u);
        EXPECT_LT(frobenius_distance(rotation_unitary(r.axis, r.angle), u), 1e-12);
        EXPECT_NEAR(r.angle, phi, 1e-10);
    }
}

TEST(decompose, global_phase_ignored) {
    Unitary2 u = rotation_unitary({0, 1, 0}, 1.0);
    std::array<cplx, 4> m = u.matrix();
    for (auto &z : m) z *= std::polar(1.0, 0.7);
    EXPECT_LT(frobenius_distance(Unitary2(m), u), 1e-12);
}

TEST(target, validation) {
    EXPECT_THROW(GateTarget::make({1, 1, 0}, 1.0), InputError);
    EXPECT_THROW(GateTarget::make({1, 0, 0}, -0.1), InputError);
    EXPECT_NO_THROW(GateTarget::make({0, 0, 1}, 2 * kPi));
}
