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


#include "pulseforge/lm.hpp"

#include <cmath>

#include "gtest/gtest.h"
#include "pulseforge/error.hpp"

using namespace pulseforge;

TEST(lm, rosenbrock) {
    ResidualFn f = [](const Eigen::VectorXd &x) {
        Eigen::VectorXd r(2);
        r << 10 * (x(1) - x(0) * x(0)), 1 - x(0);
        return r;
    };
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1;
    LmConfig cfg;
    cfg.gtol = 1e-20;
    cfg.xtol = 1e-16;
    LmResult r = lm_minimize(f, x0, Bounds::unbounded(2), cfg);
    EXPECT_NEAR(r.x(0), 1, 1e-8);
    EXPECT_NEAR(r.x(1), 1, 1e-8);
    EXPECT_LT(r.cost, 1e-20);
    for (size_t k = 1; k < r.cost_history.size(); k++) EXPECT_LE(r.cost_history[k], r.cost_history[k - 1]);
}

TEST(lm, linear_least_squares) {
    Eigen::MatrixXd a(5, 3);
    a << 1, 2, 0, 0, 1, 1, 3, -1, 2, 1, 1, 1, -2, 0, 4;
    Eigen::VectorXd b(5);
    b << 1, -2, 0.5, 3, 1;
    ResidualFn f = [&](const Eigen::VectorXd &x) -> Eigen::VectorXd { return a * x - b; };
    LmHooks hooks;
    hooks.jacobian = [&](const Eigen::VectorXd &) -> Eigen::MatrixXd { return a; };
    LmConfig cfg;
    cfg.gtol = 1e-15;
    cfg.xtol = 1e-16;
    LmResult r = lm_minimize(f, Eigen::VectorXd::Zero(3), Bounds::unbounded(3), cfg, hooks);
    Eigen::VectorXd exact = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    EXPECT_LT((r.x - exact).norm(), 1e-10);
}

TEST(lm, bounded_quadratic_hits_boundary) {
    ResidualFn f = [](const Eigen::VectorXd &x) -> Eigen::VectorXd {
        Eigen::VectorXd r(2);
        r << x(0) - 5, x(1) + 0.25;
        return r;
    };
    Eigen::VectorXd x0(2);
    x0 << 0.3, 0.4;
    LmConfig cfg;
    cfg.max_iter = 500;
    LmResult r = lm_minimize(f, x0, Bounds::uniform(2, -1, 1), cfg);
    EXPECT_NEAR(r.x(0), 1, 1e-6);
    EXPECT_NEAR(r.x(1), -0.25, 1e-6);
    EXPECT_LE(r.x(0), 1);
}

TEST(lm, forward_difference_respects_bounds) {
    ResidualFn f = [](const Eigen::VectorXd &x) -> Eigen::VectorXd { return x.array().square(); };
    Bounds b = Bounds::uniform(2, -1, 1);
    Eigen::VectorXd x(2);
    x << 1, 0.5;
    Eigen::MatrixXd j = forward_difference_jacobian(f, x, f(x), b, 1e-7);
    EXPECT_NEAR(j(0, 0), 2, 1e-5);
    EXPECT_NEAR(j(1, 1), 1, 1e-5);
    EXPECT_NEAR(j(0, 1), 0, 1e-12);
}

TEST(lm, callback_stops) {
    ResidualFn f = [](const Eigen::VectorXd &x) -> Eigen::VectorXd { return x - Eigen::VectorXd::Ones(3); };
    LmHooks hooks;
    int calls = 0;
    hooks.on_accept = [&](const LmIterate &) { return ++calls == 1; };
    LmResult r = lm_minimize(f, Eigen::VectorXd::Zero(3), Bounds::unbounded(3), LmConfig{}, hooks);
    EXPECT_TRUE(r.stopped_by_callback);
    EXPECT_EQ(r.iterations, 1);
}

TEST(lm, config_validation) {
    LmConfig cfg;
    cfg.nu = 1;
    EXPECT_THROW(cfg.validate(), InputError);
    cfg = {};
    cfg.damping_floor = 0;
    EXPECT_THROW(cfg.validate(), InputError);
}
