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
#include <limits>
#include <numbers>

#include "pulseforge/error.hpp"

namespace pulseforge {

namespace {

constexpr double kLambdaMax = 1e16;
constexpr double kLambdaMin = 1e-15;

// x = mid + half·sin(y) on finite coordinates, identity elsewhere.
class BoxMap {
   public:
    explicit BoxMap(const Bounds &b) : b_(b) {}

    Eigen::VectorXd to_x(const Eigen::VectorXd &y) const {
        Eigen::VectorXd x = y;
        for (Eigen::Index k = 0; k < y.size(); k++) {
            if (!b_.finite(k)) continue;
            double mid = 0.5 * (b_.lo(k) + b_.hi(k)), half = 0.5 * (b_.hi(k) - b_.lo(k));
            x(k) = std::clamp(mid + half * std::sin(y(k)), b_.lo(k), b_.hi(k));
        }
        return x;
    }

    Eigen::VectorXd to_y(const Eigen::VectorXd &x) const {
        Eigen::VectorXd y = x;
        for (Eigen::Index k = 0; k < x.size(); k++) {
            if (!b_.finite(k)) continue;
            double mid = 0.5 * (b_.lo(k) + b_.hi(k)), half = 0.5 * (b_.hi(k) - b_.lo(k));
            y(k) = std::asin(std::clamp((x(k) - mid) / half, -1.0, 1.0));
        }
        return y;
    }

    // Keeps y on the monotone branch of sin; a step past ±π/2 would otherwise
    // fold x back from the bound it just reached.
    void fold(Eigen::VectorXd &y) const {
        constexpr double kEdge = std::numbers::pi / 2 - 1e-7;
        for (Eigen::Index k = 0; k < y.size(); k++) {
            if (b_.finite(k)) y(k) = std::clamp(y(k), -kEdge, kEdge);
        }
    }

    Eigen::VectorXd dx_dy(const Eigen::VectorXd &y) const {
        Eigen::VectorXd d = Eigen::VectorXd::Ones(y.size());
        for (Eigen::Index k = 0; k < y.size(); k++) {
            if (b_.finite(k)) d(k) = 0.5 * (b_.hi(k) - b_.lo(k)) * std::cos(y(k));
        }
        return d;
    }

   private:
    const Bounds &b_;
};

bool all_finite(const Eigen::VectorXd &v) { return v.allFinite(); }

}  // namespace

void LmConfig::validate() const {
    if (!(nu > 1)) throw InputError("lm: damping scale nu must exceed 1");
    if (!(gtol > 0) || !(xtol > 0) || !(fd_step > 0) || !(lambda0 > 0))
        throw InputError("lm: tolerances, step and initial damping must be positive");
    if (max_iter < 0) throw InputError("lm: max_iter must be non-negative");
    if (!(damping_floor > 0 && damping_floor <= 1)) throw InputError("lm: damping_floor must lie in (0, 1]");
}

std::string to_string(LmStop s) {
    switch (s) {
        case LmStop::gradient: return "gradient";
        case LmStop::step: return "step";
        case LmStop::cost: return "cost";
        case LmStop::max_iter: return "max_iter";
        case LmStop::damping: return "damping";
    }
    return "unknown";
}

Bounds Bounds::unbounded(Eigen::Index n) {
    double inf = std::numeric_limits<double>::infinity();
    return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

Bounds Bounds::uniform(Eigen::Index n, double lo, double hi) {
    return {Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
}

Eigen::MatrixXd forward_difference_jacobian(const ResidualFn &f, const Eigen::VectorXd &x, const Eigen::VectorXd &fx,
                                            const Bounds &bounds, double h, int *evaluations) {
    Eigen::MatrixXd jac(fx.size(), x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index k = 0; k < x.size(); k++) {
        double step = (x(k) + h > bounds.hi(k)) ? -h : h;
        xp(k) = x(k) + step;
        jac.col(k) = (f(xp) - fx) / step;
        xp(k) = x(k);
        if (evaluations) ++*evaluations;
    }
    return jac;
}

LmResult lm_minimize(const ResidualFn &f, const Eigen::VectorXd &x0, const Bounds &bounds, const LmConfig &cfg,
                     const LmHooks &hooks) {
    cfg.validate();
    if (bounds.lo.size() != x0.size() || bounds.hi.size() != x0.size()) throw InputError("lm: bounds size mismatch");
    BoxMap map(bounds);

    LmResult res;
    Eigen::VectorXd y = map.to_y(x0);
    map.fold(y);
    Eigen::VectorXd x = map.to_x(y);
    Eigen::VectorXd r = f(x);
    res.evaluations = 1;
    if (!all_finite(r)) throw InputError("lm: residual is not finite at the starting point");
    double cost = r.squaredNorm();
    res.cost_history.push_back(cost);

    double lambda = cfg.lambda0;
    bool done = false;
    while (!done && res.iterations < cfg.max_iter) {
        Eigen::MatrixXd jx = hooks.jacobian ? hooks.jacobian(x)
                                            : forward_difference_jacobian(f, x, r, bounds, cfg.fd_step, &res.evaluations);
        Eigen::MatrixXd jy = jx * map.dx_dy(y).asDiagonal();
        Eigen::VectorXd g = jy.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < cfg.gtol) {
            res.stop = LmStop::gradient;
            break;
        }
        Eigen::MatrixXd a = jy.transpose() * jy;
        Eigen::VectorXd diag = a.diagonal();
        double dmax = diag.maxCoeff();
        for (Eigen::Index k = 0; k < diag.size(); k++) diag(k) = std::max(diag(k), cfg.damping_floor * std::max(dmax, 1e-300));

        while (true) {
            Eigen::MatrixXd m = a;
            m.diagonal() += lambda * diag;
            Eigen::VectorXd delta = m.ldlt().solve(-g);
            Eigen::VectorXd y_new = y + delta;
            map.fold(y_new);
            Eigen::VectorXd x_new = map.to_x(y_new);
            Eigen::VectorXd r_new = f(x_new);
            res.evaluations++;
            double cost_new = all_finite(r_new) ? r_new.squaredNorm() : std::numeric_limits<double>::infinity();
            if (cost_new < cost) {
                double prev = cost;
                y = y_new;
                x = x_new;
                r = r_new;
                cost = cost_new;
                if (hooks.reevaluate_after_accept) {
                    r = f(x);
                    res.evaluations++;
                    cost = r.squaredNorm();
                }
                res.iterations++;
                res.cost_history.push_back(cost);
                lambda = std::max(lambda / cfg.nu, kLambdaMin);
                if (hooks.on_accept && hooks.on_accept({res.iterations, &x, cost})) {
                    res.stopped_by_callback = true;
                    done = true;
                } else if (delta.norm() < cfg.xtol * (y.norm() + cfg.xtol)) {
                    res.stop = LmStop::step;
                    done = true;
                } else if (cfg.ftol > 0 && prev - cost_new < cfg.ftol * prev) {
                    res.stop = LmStop::cost;
                    done = true;
                }
                break;
            }
            lambda *= cfg.nu;
            if (lambda > kLambdaMax) {
                res.stop = LmStop::damping;
                done = true;
                break;
            }
        }
    }
    if (!done && res.iterations >= cfg.max_iter) res.stop = LmStop::max_iter;
    res.x = x;
    res.residual = r;
    res.cost = cost;
    return res;
}

}  // namespace pulseforge
