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

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "pulseforge/error.hpp"
#include "pulseforge/noise_trace.hpp"

namespace pulseforge {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

std::vector<double> to_std(const Eigen::VectorXd &v) { return {v.data(), v.data() + v.size()}; }

// Splits a seed for a sub-task without correlating neighbouring tasks.
uint64_t derive_seed(uint64_t seed, uint64_t task) {
    auto rng = substream(seed, task ^ 0xa5a5a5a5ULL);
    return rng();
}

template <typename Fn>
void parallel_for(int n, int workers, Fn &&fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; i++) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (int w = 0; w < workers; w++) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

Vec3 rotation_mismatch(const Su2 &realized, const GateTarget &target) {
    RotationDecomposition d = decompose_rotation(realized);
    Vec3 goal = target.axis * target.angle;
    Vec3 a = d.axis * d.angle;
    Vec3 b = d.axis * (d.angle - kTwoPi);  // (2π − φ)(−n)
    Vec3 da = a - goal, db = b - goal;
    return da.dot(da) <= db.dot(db) ? da : db;
}

GateObjective::GateObjective(GateProblem problem)
    : problem_(std::move(problem)),
      dbz_(clocked_dbz(problem_.n_dbz, problem_.device->gate_time(problem_.n_seg), problem_.device->j_min())),
      evaluator_(problem_.noise) {
    problem_.device->validate();
    if (problem_.n_seg < 1) throw InputError("optimizer: n_seg must be at least 1");
    if (!(problem_.device->j_min() < dbz_ / 10))
        throw InfeasibleError("optimizer: J(eps_min) must stay below dbz/10 for this clock");
}

PulseSequence GateObjective::pulse(std::span<const double> eps) const {
    return PulseSequence::with_dbz(problem_.device, {eps.begin(), eps.end()}, problem_.n_dbz, dbz_, problem_.target);
}

GateResidual GateObjective::residuals(std::span<const double> eps) const {
    if (static_cast<int>(eps.size()) != problem_.n_seg) throw InputError("optimizer: wrong number of samples");
    PulseSequence p = pulse(eps);
    ExchangeProfile profile = exchange_profile(p);
    Su2 u0 = propagate_profile(profile, dbz_);
    GateResidual r;
    r(0) = evaluator_.infidelity_dbz(profile, dbz_, u0);
    r(1) = evaluator_.infidelity_eps_slow(profile, dbz_, problem_.device->eps0, u0);
    r(2) = evaluator_.infidelity_eps_fast(p);
    if (problem_.sqrt_components) {
        for (int k = 0; k < 3; k++) r(k) = std::sqrt(std::max(r(k), 0.0));
    }
    Vec3 m = rotation_mismatch(u0, problem_.target);
    r(3) = m.x;
    r(4) = m.y;
    r(5) = m.z;
    return r;
}

Eigen::VectorXd GateObjective::residual_vector(const Eigen::VectorXd &eps) const {
    return residuals(std::span<const double>(eps.data(), static_cast<size_t>(eps.size())));
}

Bounds GateObjective::bounds() const {
    return Bounds::uniform(problem_.n_seg, problem_.device->eps_min, problem_.device->eps_max);
}

LmConfig GateObjective::default_lm() const {
    LmConfig cfg;
    cfg.max_iter = 300;
    cfg.fd_step = 1e-3 * (problem_.device->eps_max - problem_.device->eps_min);
    cfg.gtol = 1e-14;
    cfg.xtol = 1e-9;
    cfg.ftol = 1e-8;
    return cfg;
}

GateResidual gate_residuals(std::span<const double> eps, const GateProblem &problem) {
    return GateObjective(problem).residuals(eps);
}

std::vector<double> polish_systematic(const GateObjective &objective, std::vector<double> eps, int max_steps) {
    const DeviceModel &dev = *objective.problem().device;
    const double h = 1e-4 * (dev.eps_max - dev.eps_min);
    auto mismatch = [&](const std::vector<double> &e) {
        Vec3 m = rotation_mismatch(propagate_su2(objective.pulse(e)), objective.problem().target);
        return Eigen::Vector3d(m.x, m.y, m.z);
    };
    Eigen::Vector3d m = mismatch(eps);
    const int n = static_cast<int>(eps.size());
    for (int step = 0; step < max_steps && m.norm() > 1e-12; step++) {
        // Samples pinned at a bound do not move.
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3, n);
        std::vector<double> probe = eps;
        for (int k = 0; k < n; k++) {
            double s = (eps[k] + h > dev.eps_max) ? -h : h;
            if (eps[k] - h < dev.eps_min && s < 0) continue;
            probe[k] = eps[k] + s;
            jac.col(k) = (mismatch(probe) - m) / s;
            probe[k] = eps[k];
        }
        Eigen::VectorXd delta = jac.completeOrthogonalDecomposition().solve(-m);
        double scale = 1;
        bool improved = false;
        for (int tries = 0; tries < 12 && !improved; tries++, scale *= 0.5) {
            std::vector<double> cand = eps;
            for (int k = 0; k < n; k++) cand[k] = std::clamp(eps[k] + scale * delta(k), dev.eps_min, dev.eps_max);
            Eigen::Vector3d mc = mismatch(cand);
            if (mc.norm() < m.norm()) {
                eps = std::move(cand);
                m = mc;
                improved = true;
            }
        }
        if (!improved) break;
    }
    return eps;
}

OptimizationResult multistart_optimize(const GateProblem &problem, const MultistartOptions &options) {
    if (options.n_restarts < 1) throw InputError("optimizer: n_restarts must be at least 1");
    auto start_time = std::chrono::steady_clock::now();
    GateObjective objective(problem);
    const LmConfig cfg = options.lm.value_or(objective.default_lm());
    const Bounds bounds = objective.bounds();
    const DeviceModel &dev = *problem.device;
    ResidualFn f = [&](const Eigen::VectorXd &x) { return objective.residual_vector(x); };

    std::vector<LmResult> runs(options.n_restarts);
    parallel_for(options.n_restarts, options.workers, [&](int i) {
        auto rng = substream(options.seed, static_cast<uint64_t>(i));
        std::uniform_real_distribution<double> u(dev.eps_min, dev.eps_max);
        Eigen::VectorXd x0(problem.n_seg);
        for (int k = 0; k < problem.n_seg; k++) x0(k) = u(rng);
        runs[i] = lm_minimize(f, x0, bounds, cfg);
    });

    OptimizationResult out;
    out.restarts = options.n_restarts;
    out.seed = options.seed;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < options.n_restarts; i++) {
        out.final_costs.push_back(runs[i].cost);
        if (runs[i].cost < best_cost) {
            best_cost = runs[i].cost;
            out.best_restart = i;
        }
    }
    const LmResult &best = runs[out.best_restart];
    std::vector<double> eps = to_std(best.x);
    if (options.polish) eps = polish_systematic(objective, std::move(eps));
    out.best = objective.pulse(eps);
    out.cost_history_best = best.cost_history;
    out.report = objective.evaluator().evaluate(*out.best);
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return out;
}

std::vector<ScanCell> scan_grid(const GateProblem &base, std::span<const int> n_seg_list,
                                std::span<const int> n_dbz_list, const MultistartOptions &options) {
    std::vector<ScanCell> cells;
    uint64_t index = 0;
    for (int n_seg : n_seg_list) {
        for (int n_dbz : n_dbz_list) {
            ScanCell cell;
            cell.n_seg = n_seg;
            cell.n_dbz = n_dbz;
            GateProblem p = base;
            p.n_seg = n_seg;
            p.n_dbz = n_dbz;
            MultistartOptions o = options;
            o.seed = derive_seed(options.seed, index++);
            try {
                cell.result = multistart_optimize(p, o);
            } catch (const InfeasibleError &e) {
                cell.feasible = false;
                cell.message = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

RobustnessResult robustness_scan(const PulseSequence &pulse, const NoiseModel &noise, double magnitude,
                                 RobustnessMode mode) {
    if (!(magnitude >= 0 && magnitude < 1)) throw InputError("robustness: magnitude must lie in [0, 1)");
    NoiseEvaluator evaluator(noise);
    RobustnessResult out;
    out.nominal = evaluator.evaluate(pulse).inf_noise();
    out.worst = out.nominal;

    std::vector<std::array<double, 3>> factors;
    const double lo = 1 - magnitude, hi = 1 + magnitude;
    if (mode == RobustnessMode::exchange_or_rise) {
        // J0 and ε0 together (a different exchange curve), or τ_rise alone.
        for (double a : {lo, 1.0, hi}) {
            for (double b : {lo, 1.0, hi}) {
                if (a != 1.0 || b != 1.0) factors.push_back({a, b, 1.0});
            }
        }
        factors.push_back({1.0, 1.0, lo});
        factors.push_back({1.0, 1.0, hi});
    } else {
        for (int mask = 0; mask < 8; mask++)
            factors.push_back({mask & 1 ? hi : lo, mask & 2 ? hi : lo, mask & 4 ? hi : lo});
        for (int k = 0; k < 3; k++) {
            for (double s : {lo, hi}) {
                std::array<double, 3> f{1, 1, 1};
                f[k] = s;
                factors.push_back(f);
            }
        }
    }
    for (const auto &f : factors) {
        auto dev = std::make_shared<DeviceModel>(pulse.device());
        dev->j0 *= f[0];
        dev->eps0 *= f[1];
        dev->tau_rise *= f[2];
        GateReport r = evaluator.evaluate(pulse.reclocked(dev));
        RobustnessCase c{f[0], f[1], f[2], r.inf_noise(), r.inf_systematic};
        out.worst = std::max(out.worst, c.inf_noise);
        out.cases.push_back(c);
    }
    return out;
}

namespace {

Vec3 generator(const Su2 &u0, const Su2 &plus, const Su2 &minus, double h) {
    // U0†U(δ) ≈ 1 − iδ a·σ; the vector part of U0†U carries a·δ.
    Su2 dp = u0.adjoint() * plus;
    Su2 dm = u0.adjoint() * minus;
    return (dp.v - dm.v) * (1.0 / (2 * h));
}

}  // namespace

Sensitivity first_order_sensitivity(const PulseSequence &pulse) {
    ExchangeProfile p = exchange_profile(pulse);
    Su2 u0 = propagate_profile(p, pulse.dbz());
    const double eps0 = pulse.device().eps0;
    const double h_eps = 1e-3;  // µV
    const double h_dbz = 1e-6;  // rad/ns
    Sensitivity s;
    s.eps = generator(u0, propagate_profile(p, pulse.dbz(), std::exp(h_eps / eps0)),
                      propagate_profile(p, pulse.dbz(), std::exp(-h_eps / eps0)), h_eps)
                .norm();
    s.dbz = generator(u0, propagate_profile(p, pulse.dbz() + h_dbz), propagate_profile(p, pulse.dbz() - h_dbz), h_dbz)
                .norm();
    return s;
}

Sensitivity rectangular_sensitivity(const GateTarget &target, double duration, const DeviceModel &device) {
    // An exchange rotation of angle φ scales with J, so a common offset δ
    // changes the angle by φ·δ/ε0; a static gradient offset accumulates over
    // the whole gate.
    return {target.angle / (2 * device.eps0), duration / 2};
}

FilterPeak filter_peak(const PulseSequence &pulse, double f_min, double f_max, int points) {
    auto grid = log_grid(f_min, f_max, points);
    FilterFunctionTable t = filter_function(pulse, grid);
    FilterPeak p;
    for (size_t k = 0; k < t.values.size(); k++) {
        if (t.values[k] > p.value_peak) {
            p.value_peak = t.values[k];
            p.f_peak = t.frequencies[k];
        }
    }
    return p;
}

}  // namespace pulseforge
