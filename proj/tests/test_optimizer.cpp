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


#include "pulseforge/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "pulseforge/error.hpp"
#include "pulseforge/io.hpp"

using namespace pulseforge;

namespace {

constexpr double kPi = std::numbers::pi;

PulseSequence shipped(const char *name) {
    return io::read_pulse(std::string(PULSEFORGE_SOURCE_DIR "/data/gates/") + name);
}

std::vector<double> random_eps(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1250, 350);
    std::vector<double> e(n);
    for (double &v : e) v = u(rng);
    return e;
}

}  // namespace

TEST(objective, realized_target_without_noise_is_zero) {
    GateProblem prob;
    prob.n_seg = 12;
    prob.noise.sigma_dbz = 0;
    prob.noise.sigma_eps = 0;
    prob.noise.psd_amp = 0;
    std::vector<double> eps = random_eps(12, 4);
    GateObjective probe(prob);
    RotationDecomposition r = decompose_rotation(propagate_su2(probe.pulse(eps)));
    prob.target = GateTarget::make(r.axis, r.angle);
    GateResidual res = GateObjective(prob).residuals(eps);
    EXPECT_LT(res.norm(), 1e-12);
}

TEST(objective, jacobian_column_matches_central_difference) {
    GateProblem prob;
    std::vector<double> eps = random_eps(18, 8);
    GateObjective obj(prob);
    Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(eps.data(), 18);
    ResidualFn f = [&](const Eigen::VectorXd &v) { return obj.residual_vector(v); };
    const double h = 1e-4;
    Eigen::MatrixXd fwd = forward_difference_jacobian(f, x, f(x), obj.bounds(), h);
    for (int k : {0, 7, 17}) {
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += 1e-2;
        xm(k) -= 1e-2;
        Eigen::VectorXd central = (f(xp) - f(xm)) / 2e-2;
        EXPECT_LT((fwd.col(k) - central).norm(), 1e-5 * central.norm()) << k;
        // A 1 µV nudge moves the residual by a small, continuous amount.
        Eigen::VectorXd x1 = x;
        x1(k) += 1;
        EXPECT_LT((f(x1) - f(x)).norm(), 10 * central.norm());
    }
}

TEST(objective, mismatch_is_zero_on_target) {
    GateTarget t = GateTarget::y90m();
    EXPECT_LT(rotation_mismatch(t.su2(), t).norm(), 1e-15);
    Su2 off = Su2::rotation({0, -1, 0}, kPi / 2 + 0.01);
    EXPECT_NEAR(rotation_mismatch(off, t).norm(), 0.01, 1e-6);
}

TEST(multistart, deterministic_and_worker_independent) {
    GateProblem prob;
    prob.n_seg = 12;
    MultistartOptions opt;
    opt.n_restarts = 1;
    opt.seed = 99;
    auto a = multistart_optimize(prob, opt);
    auto b = multistart_optimize(prob, opt);
    ASSERT_TRUE(a.best && b.best);
    EXPECT_EQ(*a.best, *b.best);
    EXPECT_EQ(a.final_costs, b.final_costs);

    opt.n_restarts = 6;
    opt.workers = 1;
    auto c = multistart_optimize(prob, opt);
    opt.workers = 3;
    auto d = multistart_optimize(prob, opt);
    EXPECT_EQ(*c.best, *d.best);
    EXPECT_EQ(c.final_costs, d.final_costs);
    EXPECT_EQ(c.best_restart, d.best_restart);
}

TEST(multistart, infeasible_clock) {
    GateProblem prob;
    prob.n_dbz = 0;
    MultistartOptions opt;
    opt.n_restarts = 1;
    EXPECT_THROW(multistart_optimize(prob, opt), InfeasibleError);
}

TEST(scan, empty_list_gives_empty_table) {
    GateProblem prob;
    MultistartOptions opt;
    opt.n_restarts = 1;
    std::vector<int> segs{12, 18}, none;
    EXPECT_TRUE(scan_grid(prob, segs, none, opt).empty());
}

TEST(robustness, zero_magnitude_is_nominal) {
    PulseSequence p = shipped("x90_n18_d2.json");
    NoiseModel noise;
    RobustnessResult r = robustness_scan(p, noise, 0.0);
    EXPECT_NEAR(r.worst, r.nominal, 1e-15);
    EXPECT_NEAR(r.nominal, evaluate_gate(p, noise).inf_noise(), 1e-15);
}

TEST(robustness, monotone_in_magnitude) {
    PulseSequence p = shipped("x90_n18_d2.json");
    NoiseModel noise;
    for (auto mode : {RobustnessMode::exchange_or_rise, RobustnessMode::all_corners}) {
        double w10 = robustness_scan(p, noise, 0.1, mode).worst;
        double w20 = robustness_scan(p, noise, 0.2, mode).worst;
        EXPECT_LE(w10, w20);
    }
    EXPECT_EQ(robustness_scan(p, noise, 0.2, RobustnessMode::exchange_or_rise).cases.size(), 10u);
    EXPECT_EQ(robustness_scan(p, noise, 0.2, RobustnessMode::all_corners).cases.size(), 14u);
}

TEST(sensitivity, rectangular_reference) {
    DeviceModel d;
    Sensitivity s = rectangular_sensitivity(GateTarget::x90(), 10, d);
    EXPECT_NEAR(s.eps, (kPi / 2) / (2 * d.eps0), 1e-15);
    EXPECT_NEAR(s.dbz, 5, 1e-15);
}

TEST(sensitivity, free_precession) {
    // With J ≈ 0 the ΔBz generator norm is T/2 and the ε part is tiny.
    auto dev = std::make_shared<DeviceModel>();
    PulseSequence p = PulseSequence::clocked(dev, std::vector<double>(18, dev->eps_min), 2, GateTarget::x90());
    Sensitivity s = first_order_sensitivity(p);
    EXPECT_NEAR(s.dbz, p.total_time() / 2, 0.02 * p.total_time());
    EXPECT_LT(s.eps, 1e-3);
}

TEST(filter_peak, shipped_gate_has_finite_frequency_peak) {
    FilterPeak pk = filter_peak(shipped("x90_n18_d2.json"));
    EXPECT_GT(pk.f_peak, 3e7);
    EXPECT_LT(pk.f_peak, 3e8);
}
