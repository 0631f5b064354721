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
#include <functional>
#include <string>
#include <vector>

namespace pulseforge {

struct LmConfig {
    int max_iter = 200;
    double lambda0 = 1e-3;
    double nu = 3.0;          ///< damping scale on rejection (and its inverse on acceptance)
    double gtol = 1e-12;      ///< stop when ‖Jᵀr‖∞ falls below this
    double xtol = 1e-10;      ///< stop when the accepted step is this small relative to ‖y‖
    double ftol = 0.0;        ///< optional: stop when the relative cost decrease is below this
    double fd_step = 1e-6;    ///< forward-difference step in x (command) space
    /// Lower clamp on the Marquardt scale, relative to the largest diagonal
    /// entry of JᵀJ. Raising it damps coordinates that barely move the residual.
    double damping_floor = 1e-12;

    void validate() const;
};

/// Per-coordinate box. Infinite entries leave the coordinate unconstrained.
struct Bounds {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    static Bounds unbounded(Eigen::Index n);
    static Bounds uniform(Eigen::Index n, double lo, double hi);
    bool finite(Eigen::Index k) const { return std::isfinite(lo(k)) && std::isfinite(hi(k)); }
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd &)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd &)>;

enum class LmStop { gradient, step, cost, max_iter, damping };
std::string to_string(LmStop s);

struct LmIterate {
    int iteration = 0;
    const Eigen::VectorXd *x = nullptr;
    double cost = 0;
};

struct LmResult {
    Eigen::VectorXd x;
    Eigen::VectorXd residual;
    double cost = 0;                  ///< ‖f(x)‖²
    std::vector<double> cost_history; ///< initial cost followed by every accepted cost
    int iterations = 0;               ///< accepted steps
    int evaluations = 0;
    LmStop stop = LmStop::max_iter;
    bool stopped_by_callback = false;
};

struct LmHooks {
    /// Analytic or model-based Jacobian ∂f/∂x; forward differences otherwise.
    JacobianFn jacobian;
    /// Called after every accepted step; returning true stops the iteration.
    std::function<bool(const LmIterate &)> on_accept;
    /// Re-evaluate f at each accepted point (for noisy residuals, so the
    /// reference cost is not biased toward lucky draws).
    bool reevaluate_after_accept = false;
};

/// Levenberg–Marquardt minimization of ‖f(x)‖² subject to lo ≤ x ≤ hi.
///
/// Finite bounds are enforced by the substitution x = mid + half·sin(y), so
/// the inner problem in y is unconstrained and every iterate is feasible.
/// Damping uses Marquardt scaling by diag(JᵀJ); λ is multiplied by ν on
/// rejection and divided by ν on acceptance. Throws InputError if f(x0) is
/// not finite.
LmResult lm_minimize(const ResidualFn &f, const Eigen::VectorXd &x0, const Bounds &bounds, const LmConfig &cfg,
                     const LmHooks &hooks = {});

/// Forward-difference Jacobian of f at x, stepping backward where x + h
/// would leave the box.
Eigen::MatrixXd forward_difference_jacobian(const ResidualFn &f, const Eigen::VectorXd &x, const Eigen::VectorXd &fx,
                                            const Bounds &bounds, double h, int *evaluations = nullptr);

}  // namespace pulseforge
