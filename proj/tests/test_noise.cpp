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


#include "pulseforge/noise.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "gtest/gtest.h"
#include "pulseforge/error.hpp"
#include "pulseforge/io.hpp"
#include "pulseforge/noise_trace.hpp"

using namespace pulseforge;

namespace {

constexpr double kPi = std::numbers::pi;

PulseSequence shipped_x90() { return io::read_pulse(PULSEFORGE_SOURCE_DIR "/data/gates/x90_n18_d2.json"); }

Unitary2 random_unitary(std::mt19937_64 &rng) {
    std::normal_distribution<double> g;
    Su2 q{g(rng), {g(rng), g(rng), g(rng)}};
    double n = std::sqrt(q.norm2());
    q = {q.w / n, q.v * (1 / n)};
    std::array<cplx, 4> m = Unitary2::from_su2(q).matrix();
    std::uniform_real_distribution<double> ph(0, 2 * kPi);
    cplx p = std::polar(1.0, ph(rng));
    for (auto &z : m) z *= p;
    return Unitary2(m);
}

// White from 1 MHz up, at the default high-frequency level.
NoiseModel white_only(const NoiseModel &base) {
    NoiseModel m = base;
    m.psd_amp = psd_eval(base.f_knee, base) * std::pow(1e6, m.psd_exponent);
    m.f_low = 1e6;
    m.f_knee = m.f_low * (1 + 1e-9);
    return m;
}

// Dense trapezoid of E[h(σz)] over z ~ N(0, 1).
template <typename Fn>
double gaussian_average(double sigma, Fn &&h) {
    const int n = 40001;
    const double zmax = 10;
    double dz = 2 * zmax / (n - 1), acc = 0;
    for (int k = 0; k < n; k++) {
        double z = -zmax + k * dz;
        double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
        acc += w * std::exp(-0.5 * z * z) * h(sigma * z);
    }
    return acc * dz / std::sqrt(2 * kPi);
}

}  // namespace

TEST(quadrature, hermite_moments) {
    QuadratureRule r = gauss_hermite(7);
    ASSERT_EQ(r.nodes.size(), 7u);
    auto moment = [&](int p) {
        double s = 0;
        for (size_t k = 0; k < r.nodes.size(); k++) s += r.weights[k] * std::pow(r.nodes[k], p);
        return s;
    };
    EXPECT_NEAR(moment(0), 1, 1e-14);
    EXPECT_NEAR(moment(2), 1, 1e-13);
    EXPECT_NEAR(moment(4), 3, 1e-12);
    EXPECT_NEAR(moment(12), 10395, 1e-8);
    EXPECT_NEAR(moment(7), 0, 1e-12);
}

TEST(psd, values) {
    NoiseModel m;
    EXPECT_NEAR(psd_eval(1e6, m) / (8e-16 * std::pow(1e6, -0.7)), 1, 1e-14);
    EXPECT_NEAR(psd_eval(5e4, m) / (8e-16 * std::pow(5e4, -0.7)), 1, 1e-14);
    EXPECT_NEAR(psd_eval(1e6, m) / 5.048e-20, 1, 1e-3);
    EXPECT_NEAR(psd_eval(5e4, m) / 4.110e-19, 1, 1e-3);
    EXPECT_EQ(psd_eval(1e9, m), psd_eval(1e6, m));
    EXPECT_THROW(psd_eval(1e3, m), InputError);
    EXPECT_THROW(psd_eval(1e10, m), InputError);
}

TEST(fidelity, simple_values) {
    Unitary2 id = Unitary2::identity();
    EXPECT_NEAR(average_gate_fidelity(rotation_unitary({0, 0, 1}, kPi / 2), id), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(average_gate_fidelity(rotation_unitary({0, 0, 1}, kPi), id), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(six_state_fidelity(rotation_unitary({0, 0, 1}, kPi / 2), id), 2.0 / 3.0, 1e-15);
}

TEST(fidelity, six_state_identity) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 1000; k++) {
        Unitary2 u = random_unitary(rng), t = random_unitary(rng);
        EXPECT_NEAR(six_state_fidelity(u, t), average_gate_fidelity(u, t), 1e-12);
        EXPECT_DOUBLE_EQ(average_gate_fidelity(u, u), 1.0);
    }
}

TEST(fidelity, ensemble_weights) {
    Unitary2 id = Unitary2::identity();
    std::vector<Unitary2> us{id, rotation_unitary({0, 0, 1}, kPi)};
    std::vector<double> w{0.25, 0.75};
    EXPECT_NEAR(ensemble_fidelity(us, w, id), 0.25 + 0.75 / 3, 1e-15);
}

TEST(quasistatic, dbz_zero_sigma) {
    NoiseModel m;
    m.sigma_dbz = 0;
    EXPECT_EQ(quasistatic_infidelity_dbz(shipped_x90(), m), 0.0);
}

TEST(quasistatic, dbz_free_evolution_closed_form) {
    const double t = 22, dbz = 0.3;
    ExchangeProfile p{{t}, {0.0}};
    Su2 ref = Su2::rotation({1, 0, 0}, dbz * t);
    for (double st : {0.05, 0.15, 0.3}) {
        NoiseModel m;
        m.sigma_dbz = st / t;
        double expect = (1 - std::exp(-0.5 * st * st)) / 3;
        EXPECT_NEAR(NoiseEvaluator(m).infidelity_dbz(p, dbz, ref), expect, 1e-6) << st;
    }
}

TEST(quasistatic, eps_zero_sigma) {
    NoiseModel m;
    m.sigma_eps = 0;
    EXPECT_EQ(quasistatic_infidelity_eps(shipped_x90(), m), 0.0);
}

TEST(quasistatic, eps_constant_exchange_closed_form) {
    const double t = 5, j = 1, eps0 = 250;
    ExchangeProfile p{{t}, {j}};
    NoiseModel m;
    Su2 ref = Su2::rotation({0, 0, 1}, j * t);
    double expect = gaussian_average(m.sigma_eps, [&](double d) {
        return (1 - std::cos(j * (std::exp(d / eps0) - 1) * t)) / 3;
    });
    EXPECT_NEAR(NoiseEvaluator(m).infidelity_eps_slow(p, 0, eps0, ref), expect, 1e-4);
}

TEST(quasistatic, quadrature_matches_sampling) {
    PulseSequence pulse = shipped_x90();
    NoiseModel m;
    ExchangeProfile prof = exchange_profile(pulse);
    Su2 u0 = propagate_profile(prof, pulse.dbz());
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    double sd = 0, se = 0;
    const int n = 100000;
    for (int k = 0; k < n; k++) {
        sd += 1 - average_gate_fidelity(propagate_profile(prof, pulse.dbz() + m.sigma_dbz * g(rng)), u0);
        double s = std::exp(m.sigma_eps * g(rng) / pulse.device().eps0);
        se += 1 - average_gate_fidelity(propagate_profile(prof, pulse.dbz(), s), u0);
    }
    EXPECT_NEAR(quasistatic_infidelity_dbz(pulse, m) / (sd / n), 1, 0.05);
    EXPECT_NEAR(quasistatic_infidelity_eps(pulse, m) / (se / n), 1, 0.05);
}

TEST(filter, sinc_oracle) {
    const double g = 2e-3, t = 22;
    const int n = 220;
    ToggleFrameCoupling c;
    for (int k = 0; k < n; k++) {
        c.t_start.push_back(k * t / n);
        c.dt.push_back(t / n);
        c.c[0].push_back(0);
        c.c[1].push_back(0);
        c.c[2].push_back(g);
    }
    EXPECT_NEAR(filter_value(c, 1e-3) / (g * g * t * t), 1, 1e-12);
    EXPECT_LT(filter_value(c, 1e9 / t), 1e-20);
    for (double f : {1e6, 1e7, 3e7, 1e8, 1e9}) {
        double x = kPi * f * 1e-9 * t;
        double expect = g * g * t * t * std::pow(std::sin(x) / x, 2);
        EXPECT_NEAR(filter_value(c, f), expect, 1e-10 * g * g * t * t) << f;
    }
}

TEST(filter, nonnegative_and_refinement) {
    // Sub-step discretization error is O(h²). It is below 1% wherever the filter
    // carries weight up to ~100 MHz and grows to ~1% by 300 MHz; near 3 GHz F
    // is ~1e-5 of its peak and only converges in absolute terms.
    PulseSequence pulse = shipped_x90();
    auto fine = std::make_shared<DeviceModel>(pulse.device());
    fine->n_sub *= 2;
    PulseSequence refined = pulse.reclocked(fine);
    auto grid = log_grid(1e4, 3e9, 400);
    auto a = filter_function(pulse, grid), b = filter_function(refined, grid);
    double peak = *std::max_element(a.values.begin(), a.values.end());
    for (size_t k = 0; k < grid.size(); k++) {
        EXPECT_GE(a.values[k], 0);
        double diff = std::abs(a.values[k] - b.values[k]);
        if (grid[k] <= 1e8) EXPECT_LT(diff, 0.01 * a.values[k]) << grid[k];
        if (grid[k] <= 3e8) EXPECT_LT(diff, 0.02 * a.values[k]) << grid[k];
        EXPECT_LT(diff, std::max(0.01 * a.values[k], 1e-3 * peak)) << grid[k];
    }
    NoiseModel m;
    EXPECT_NEAR(fast_noise_infidelity(refined, m) / fast_noise_infidelity(pulse, m), 1, 0.01);
}

TEST(filter, grid_shapes) {
    EXPECT_EQ(log_grid(1e6, 1e9, 1).size(), 1u);
    auto g = log_grid(1e6, 1e9, 4);
    EXPECT_NEAR(g[1], 1e7, 1e-3);
    EXPECT_EQ(g.back(), 1e9);
    EXPECT_THROW(log_grid(0, 1e9, 4), InputError);
    EXPECT_THROW(log_grid(1e9, 1e6, 4), InputError);
}

TEST(fast_noise, zero_spectrum) {
    NoiseModel m;
    m.psd_amp = 0;
    EXPECT_EQ(fast_noise_infidelity(shipped_x90(), m), 0.0);
}

TEST(fast_noise, kernel_matches_spectral) {
    PulseSequence pulse = shipped_x90();
    NoiseModel m;
    double k = fast_noise_infidelity(pulse, m);
    double s = fast_noise_infidelity_spectral(pulse, m, 1e-5);
    EXPECT_NEAR(k / s, 1, 2e-3);
}

TEST(fast_noise, white_constant_exchange_matches_monte_carlo) {
    auto dev = std::make_shared<DeviceModel>();
    PulseSequence pulse = PulseSequence::clocked(dev, std::vector<double>(18, 0.0), 2, GateTarget::x90());
    NoiseModel m = white_only(NoiseModel{});
    double pert = fast_noise_infidelity(pulse, m);
    ASSERT_GT(pert, 1e-4);
    ASSERT_LT(pert, 1e-2);
    MonteCarloEstimate mc = mc_fast_noise_oracle(pulse, m, 1000, 17, FidelityReference::realized);
    EXPECT_NEAR(mc.mean / pert, 1, 0.10);
}

TEST(traces, zero_psd_gives_zero_trace) {
    NoiseModel m;
    m.psd_amp = 0;
    for (double v : generate_noise_trace(m, 100, 0.1, 1)) EXPECT_EQ(v, 0.0);
}

TEST(traces, white_band_parseval) {
    NoiseModel m;
    m.f_low = 1e6;
    m.f_knee = 1e6 * (1 + 1e-9);
    std::vector<double> x = generate_noise_trace(m, 20000, 0.1, 9);
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    double var = 0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= x.size() - 1;
    double expect = psd_eval(m.f_knee, m) * (m.f_high - m.f_low) * 1e12;
    EXPECT_NEAR(var / expect, 1, 0.05);
}

TEST(traces, deterministic) {
    NoiseModel m;
    auto a = generate_noise_trace(m, 50, 0.1, 123);
    auto b = generate_noise_trace(m, 50, 0.1, 123);
    auto c = generate_noise_trace(m, 50, 0.1, 124);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    EXPECT_THROW(generate_noise_trace(m, 50, 0.3, 1), InputError);
}

TEST(monte_carlo, zero_noise_is_systematic) {
    NoiseModel m;
    m.psd_amp = 0;
    PulseSequence pulse = shipped_x90();
    MonteCarloEstimate mc = mc_fast_noise_oracle(pulse, m, 100, 1);
    EXPECT_NEAR(mc.mean, evaluate_gate(pulse, m).inf_systematic, 1e-14);
    EXPECT_LT(mc.mean, 1e-8);
}

TEST(monte_carlo, quadratic_scaling) {
    PulseSequence pulse = shipped_x90();
    NoiseModel m;
    NoiseModel m2 = m;
    m2.psd_amp *= 4;
    auto a = mc_fast_noise_oracle(pulse, m, 300, 21, FidelityReference::realized);
    auto b = mc_fast_noise_oracle(pulse, m2, 300, 21, FidelityReference::realized);
    EXPECT_NEAR(b.mean / a.mean, 4, 0.2);
}

TEST(evaluator, report_components) {
    PulseSequence pulse = shipped_x90();
    GateReport r = evaluate_gate(pulse, NoiseModel{});
    EXPECT_LT(r.inf_systematic, 1e-8);
    EXPECT_NEAR(r.inf_total, r.inf_noise() + r.inf_systematic, 1e-18);
    EXPECT_LT(r.inf_total, 5e-3);
    EXPECT_NEAR(r.rotation.angle, kPi / 2, 1e-4);
}
