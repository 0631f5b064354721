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

#include "pulseforge/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "pulseforge/error.hpp"
#include "pulseforge/noise_trace.hpp"

namespace pulseforge {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;
constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr int kMaxInjectionAttempts = 10000;
constexpr double kOutcomeRankTolerance = 1e-2;

uint64_t mix_seed(uint64_t seed, uint64_t task) {
    auto rng = substream(seed, task ^ 0x5bd1e995ULL);
    return rng();
}

// Representation (angle, axis) of a rotation whose axis is closest to `hint`.
std::pair<double, Vec3> oriented_rotation(const Su2 &u, const Vec3 &hint) {
    RotationDecomposition d = decompose_rotation(u);
    if (d.axis.dot(hint) < 0) return {kTwoPi - d.angle, -d.axis};
    return {d.angle, d.axis};
}

// The six outcomes depend on only five independent error combinations at first
// order, so the outcome block of any Jacobian has one near-zero singular value.
// Dropping it keeps the step from chasing the second-order component.
void truncate_outcome_block(Eigen::MatrixXd &jac) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac.topRows(6), Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0) return;
    for (Eigen::Index i = 0; i < sv.size(); i++)
        if (sv(i) < kOutcomeRankTolerance * sv(0)) sv(i) = 0;
    jac.topRows(6) = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

Su2 conjugate_z(const Su2 &u, double gamma) {
    Su2 rz = Su2::rotation({0, 0, 1}, gamma);
    return rz * u * rz.adjoint();
}

template <typename Fn>
void parallel_runs(int n, int workers, Fn &&fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; i++) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; w++) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto &t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

void ExperimentModel::validate() const {
    if (!true_device) throw InputError("experiment: missing device model");
    true_device->validate();
    if (shots < 1) throw InputError("experiment: shots must be at least 1");
    if (!(true_dbz > 0)) throw InputError("experiment: true_dbz must be positive");
}

ExperimentModel matched_experiment(const PulseSequence &pulse, int shots, uint64_t seed) {
    return {pulse.device_ptr(), pulse.dbz(), shots, seed, pulse.device().wait_time()};
}

// ---- error parameters ---------------------------------------------------------

Eigen::Matrix<double, 6, 1> GateErrorParams::vector() const {
    Eigen::Matrix<double, 6, 1> v;
    v << phi, chi, n_y, n_z, v_x, v_z;
    return v;
}

GateErrorParams GateErrorParams::from_vector(const Eigen::Matrix<double, 6, 1> &v) {
    return {v(0), v(1), v(2), v(3), v(4), v(5)};
}

const Eigen::Matrix<double, 6, 6> &bootstrap_linear_map() {
    static const Eigen::Matrix<double, 6, 6> l = [] {
        Eigen::Matrix<double, 6, 6> m;
        //    φ   χ  n_y n_z v_x v_z
        m << -2, 0, 0, 0, 0, 0,    //
            0, -2, 0, 0, 0, 0,     //
            0, 0, -1, -1, -1, -1,  //
            0, 0, -1, 1, -1, 1,    //
            0, 0, 1, 1, 1, -1,     //
            0, 0, 1, -1, 1, 1;
        return m;
    }();
    return l;
}

std::pair<Su2, Su2> gates_from_error_params(const GateErrorParams &p) {
    return {Su2::rotation({1, -p.n_y, -p.n_z}, kHalfPi + 2 * p.phi),
            Su2::rotation({p.v_x, -1, -p.v_z}, kHalfPi + 2 * p.chi)};
}

GateErrorParams error_params_from_gates(const Su2 &x_gate, const Su2 &y_gate) {
    auto [ax, nx] = oriented_rotation(x_gate, {1, 0, 0});
    auto [ay, ny] = oriented_rotation(y_gate, {0, -1, 0});
    GateErrorParams p;
    p.phi = (ax - kHalfPi) / 2;
    p.n_y = -nx.y / nx.x;
    p.n_z = -nx.z / nx.x;
    p.chi = (ay - kHalfPi) / 2;
    p.v_x = -ny.x / ny.y;
    p.v_z = ny.z / ny.y;
    return p;
}

GateErrorParams fit_error_params(const Eigen::Matrix<double, 6, 1> &s) {
    static const Eigen::Matrix<double, 6, 6> pinv =
        bootstrap_linear_map().completeOrthogonalDecomposition().pseudoInverse();
    return GateErrorParams::from_vector(pinv * s);
}

// ---- measurements ---------------------------------------------------------------

BootstrapVector bootstrap_outcomes_exact(const Su2 &x, const Su2 &y) {
    const std::array<Su2, 6> seqs = {x, y, y * x, x * y, x * x * x * y, y * x * x * x};
    BootstrapVector s;
    for (int i = 0; i < 6; i++) s(i) = seqs[i].rotate({0, 0, 1}).z;
    return s;
}

BootstrapVector sample_outcomes(const BootstrapVector &exact, int shots, std::mt19937_64 &rng) {
    if (shots < 1) throw InputError("measurement: shots must be at least 1");
    BootstrapVector out;
    for (int i = 0; i < 6; i++) {
        double p = std::clamp(0.5 * (1 + exact(i)), 0.0, 1.0);
        std::binomial_distribution<int> binom(shots, p);
        out(i) = 2.0 * binom(rng) / shots - 1;
    }
    return out;
}

Su2 realized_gate(std::span<const double> eps, const ExperimentModel &experiment) {
    return propagate_profile(exchange_profile(*experiment.true_device, eps, experiment.wait_ns), experiment.true_dbz);
}

BootstrapVector bootstrap_outcomes(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                   const ExperimentModel &experiment, bool exact, std::mt19937_64 *rng) {
    experiment.validate();
    BootstrapVector s =
        bootstrap_outcomes_exact(realized_gate(pulse_x.eps(), experiment), realized_gate(pulse_y.eps(), experiment));
    if (exact) return s;
    if (!rng) throw InputError("measurement: random generator required for shot noise");
    return sample_outcomes(s, experiment.shots, *rng);
}

// ---- systematic infidelity --------------------------------------------------------

PairInfidelity systematic_infidelity_pair(const Su2 &x_gate, const Su2 &y_gate, const GateTarget &x_target,
                                          const GateTarget &y_target) {
    const Su2 tx = x_target.su2(), ty = y_target.su2();
    auto parts = [&](double g) {
        return std::pair{1 - average_gate_fidelity(conjugate_z(x_gate, g), tx),
                         1 - average_gate_fidelity(conjugate_z(y_gate, g), ty)};
    };
    auto cost = [&](double g) {
        auto [a, b] = parts(g);
        return a + b;
    };
    constexpr int kScan = 360;
    const double step = kTwoPi / kScan;
    double best_g = 0, best_c = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kScan; k++) {
        double c = cost(k * step);
        if (c < best_c) {
            best_c = c;
            best_g = k * step;
        }
    }
    // golden-section refinement
    const double ratio = (std::sqrt(5.0) - 1) / 2;
    double a = best_g - step, b = best_g + step;
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = cost(c), fd = cost(d);
    while (b - a > 1e-6) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = cost(d);
        }
    }
    double g = 0.5 * (a + b);
    if (cost(g) > best_c) g = best_g;
    auto [ix, iy] = parts(g);
    g = std::fmod(g, kTwoPi);
    if (g < 0) g += kTwoPi;
    return {std::max(ix, 0.0), std::max(iy, 0.0), g};
}

PairInfidelity systematic_infidelity_pair(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                          const ExperimentModel &experiment) {
    return systematic_infidelity_pair(realized_gate(pulse_x.eps(), experiment),
                                      realized_gate(pulse_y.eps(), experiment), pulse_x.target(), pulse_y.target());
}

// ---- objective -----------------------------------------------------------------------

CalibrationObjective::CalibrationObjective(PulseSequence nominal_x, PulseSequence nominal_y, NoiseModel noise,
                                           ExperimentModel experiment, CalibrationConfig config)
    : nominal_x_(std::move(nominal_x)),
      nominal_y_(std::move(nominal_y)),
      evaluator_(noise),
      experiment_(std::move(experiment)),
      nominal_experiment_(matched_experiment(nominal_x_, experiment_.shots, experiment_.seed)),
      config_(config),
      n_x_(nominal_x_.n_seg()),
      n_y_(nominal_y_.n_seg()),
      rng_(substream(experiment_.seed, 0x51a7)) {
    experiment_.validate();
}

Eigen::VectorXd CalibrationObjective::pack(const PulseSequence &x, const PulseSequence &y) const {
    Eigen::VectorXd v(n_x_ + n_y_);
    for (int k = 0; k < n_x_; k++) v(k) = x.eps()[k];
    for (int k = 0; k < n_y_; k++) v(n_x_ + k) = y.eps()[k];
    return v;
}

PulseSequence CalibrationObjective::pulse_x(const Eigen::VectorXd &v) const {
    return nominal_x_.with_eps({v.data(), v.data() + n_x_});
}

PulseSequence CalibrationObjective::pulse_y(const Eigen::VectorXd &v) const {
    return nominal_y_.with_eps({v.data() + n_x_, v.data() + n_x_ + n_y_});
}

Bounds CalibrationObjective::bounds() const {
    const DeviceModel &dx = nominal_x_.device(), &dy = nominal_y_.device();
    Bounds b = Bounds::uniform(n_x_ + n_y_, dx.eps_min, dx.eps_max);
    b.lo.tail(n_y_).setConstant(dy.eps_min);
    b.hi.tail(n_y_).setConstant(dy.eps_max);
    return b;
}

std::array<double, 2> CalibrationObjective::noise_infidelities(const Eigen::VectorXd &v) const {
    return {evaluator_.evaluate(pulse_x(v)).inf_noise(), evaluator_.evaluate(pulse_y(v)).inf_noise()};
}

Eigen::VectorXd CalibrationObjective::noise_terms(const Eigen::VectorXd &v) const {
    auto in = noise_infidelities(v);
    Eigen::VectorXd t(2);
    t << config_.w_n * in[0], config_.w_n_prime * in[1];
    return t;
}

Eigen::VectorXd CalibrationObjective::residuals(const Eigen::VectorXd &v) {
    Eigen::VectorXd r(8);
    PulseSequence px = pulse_x(v), py = pulse_y(v);
    last_s_ = bootstrap_outcomes(px, py, experiment_, config_.exact_measurements, &rng_);
    r.head(6) = last_s_;
    r.tail(2) = noise_terms(v);
    return r;
}

Eigen::VectorXd CalibrationObjective::model_residuals(const Eigen::VectorXd &v) const {
    Eigen::VectorXd r(8);
    r.head(6) = bootstrap_outcomes(pulse_x(v), pulse_y(v), nominal_experiment_, true);
    r.tail(2) = noise_terms(v);
    return r;
}

Eigen::Matrix<double, 8, 1> calibration_residuals(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                          const ExperimentModel &experiment, const NoiseModel &noise, double w_n,
                                          double w_n_prime, std::mt19937_64 *rng) {
    NoiseEvaluator ev(noise);
    Eigen::Matrix<double, 8, 1> r;
    r.head(6) = bootstrap_outcomes(pulse_x, pulse_y, experiment, rng == nullptr, rng);
    r(6) = w_n * ev.evaluate(pulse_x).inf_noise();
    r(7) = w_n_prime * ev.evaluate(pulse_y).inf_noise();
    return r;
}

// ---- loop ---------------------------------------------------------------------------

CalibrationState calibrate_loop(const PulseSequence &pulse_x, const PulseSequence &pulse_y, const NoiseModel &noise,
                                const ExperimentModel &experiment, const CalibrationConfig &config) {
    if (config.max_iter < 0) throw InputError("calibration: max_iter must be non-negative");
    CalibrationObjective obj(pulse_x, pulse_y, noise, experiment, config);
    const Bounds bounds = obj.bounds();
    Eigen::VectorXd v = obj.pack(pulse_x, pulse_y);

    CalibrationState state;
    auto record = [&](int iter, const BootstrapVector &s, bool accepted) {
        CalibrationRecord rec;
        rec.iter = iter;
        rec.s = s;
        PairInfidelity sys = systematic_infidelity_pair(obj.pulse_x(v), obj.pulse_y(v), experiment);
        rec.i_sys = {sys.x, sys.y};
        rec.i_n = obj.noise_infidelities(v);
        rec.accepted = accepted;
        state.history.push_back(rec);
        state.s_measured = s;
        state.iteration = iter;
        return sys.max() < config.success_threshold;
    };

    obj.residuals(v);
    state.measurements++;
    state.converged = record(0, obj.last_measurement(), true);

    ResidualFn f = [&](const Eigen::VectorXd &x) {
        state.measurements++;
        return obj.residuals(x);
    };
    ResidualFn model_f = [&](const Eigen::VectorXd &x) { return obj.model_residuals(x); };
    LmHooks hooks;
    hooks.jacobian = [&](const Eigen::VectorXd &x) {
        Eigen::MatrixXd jac;
        if (config.jacobian == JacobianSource::model) {
            jac = forward_difference_jacobian(model_f, x, model_f(x), bounds, config.fd_step);
        } else {
            jac = forward_difference_jacobian(f, x, f(x), bounds, config.fd_step);
        }
        truncate_outcome_block(jac);
        return jac;
    };
    LmConfig lm;
    lm.max_iter = 1;
    lm.lambda0 = config.lambda0;
    lm.nu = config.nu;
    lm.fd_step = config.fd_step;
    lm.gtol = 1e-300;
    lm.xtol = 1e-300;
    lm.damping_floor = config.damping_floor;

    for (int it = 1; it <= config.max_iter && !state.converged; it++) {
        LmResult step = lm_minimize(f, v, bounds, lm, hooks);
        bool accepted = step.iterations > 0;
        v = step.x;
        BootstrapVector s = step.residual.head(6);
        state.converged = record(it, s, accepted);
    }
    state.pulse_x = obj.pulse_x(v);
    state.pulse_y = obj.pulse_y(v);
    return state;
}

// ---- error injection -------------------------------------------------------------------

std::string to_string(InjectionMechanism m) {
    return m == InjectionMechanism::parameter_mismatch ? "parameter_mismatch" : "sample_offsets";
}

InjectedErrors inject_errors(const PulseSequence &pulse_x, const PulseSequence &pulse_y, InjectionMechanism mechanism,
                             double scale, uint64_t seed, int shots) {
    if (!(scale >= 0)) throw InputError("injection: scale must be non-negative");
    auto rng = substream(seed, 0);
    std::normal_distribution<double> normal;
    InjectedErrors out{matched_experiment(pulse_x, shots, mix_seed(seed, 1)), pulse_x, pulse_y, 0, mechanism, scale,
                       {}, 1};
    if (mechanism == InjectionMechanism::parameter_mismatch) {
        out.direction = {normal(rng), normal(rng), normal(rng)};
        auto dev = std::make_shared<DeviceModel>(pulse_x.device());
        dev->j0 *= std::exp(scale * out.direction[0]);
        dev->eps0 *= std::exp(scale * out.direction[1]);
        dev->tau_rise *= std::exp(scale * out.direction[2]);
        out.experiment.true_device = dev;
    } else {
        const int n = pulse_x.n_seg() + pulse_y.n_seg();
        for (int k = 0; k < n; k++) out.direction.push_back(normal(rng));
        auto shift = [&](const PulseSequence &p, int offset) {
            std::vector<double> e(p.eps().begin(), p.eps().end());
            for (size_t k = 0; k < e.size(); k++)
                e[k] = std::clamp(e[k] + scale * out.direction[offset + k], p.device().eps_min, p.device().eps_max);
            return p.with_eps(std::move(e));
        };
        out.pulse_x = shift(pulse_x, 0);
        out.pulse_y = shift(pulse_y, pulse_x.n_seg());
    }
    out.i_s = systematic_infidelity_pair(out.pulse_x, out.pulse_y, out.experiment).mean();
    return out;
}

InjectedErrors inject_errors_in_bin(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                    InjectionMechanism mechanism, double lo, double hi, uint64_t seed, int shots) {
    if (!(lo >= 0 && hi > lo)) throw InputError("injection: need 0 <= lo < hi");
    const double unit = mechanism == InjectionMechanism::parameter_mismatch ? 0.02 : 5.0;
    for (int attempt = 0; attempt < kMaxInjectionAttempts; attempt++) {
        uint64_t s = mix_seed(seed, static_cast<uint64_t>(attempt));
        auto rng = substream(s, 7);
        double goal = std::uniform_real_distribution<double>(lo, hi)(rng);
        auto at = [&](double scale) { return inject_errors(pulse_x, pulse_y, mechanism, scale, s, shots); };
        InjectedErrors base = at(0);
        if (base.i_s >= lo && base.i_s <= hi && goal <= base.i_s) {
            base.attempts = attempt + 1;
            return base;
        }
        // Bracket the goal, then bisect on the scale.
        double a = 0, b = unit;
        InjectedErrors hi_pt = at(b);
        for (int grow = 0; grow < 12 && hi_pt.i_s < goal; grow++) {
            a = b;
            b *= 2;
            hi_pt = at(b);
        }
        if (hi_pt.i_s < goal) continue;
        for (int it = 0; it < 60; it++) {
            double m = 0.5 * (a + b);
            InjectedErrors mid = at(m);
            if (mid.i_s >= lo && mid.i_s <= hi) {
                mid.attempts = attempt + 1;
                return mid;
            }
            (mid.i_s < goal ? a : b) = m;
        }
        if (hi_pt.i_s >= lo && hi_pt.i_s <= hi) {
            hi_pt.attempts = attempt + 1;
            return hi_pt;
        }
    }
    throw ConvergenceError("injection: could not reach the requested infidelity bin");
}

// ---- benchmark -------------------------------------------------------------------------

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    double pos = std::clamp(q, 0.0, 1.0) * (values.size() - 1);
    size_t i = static_cast<size_t>(std::floor(pos));
    size_t j = std::min(i + 1, values.size() - 1);
    return values[i] + (pos - i) * (values[j] - values[i]);
}

std::vector<BenchmarkRow> benchmark_success_rate(const PulseSequence &pulse_x, const PulseSequence &pulse_y,
                                                 const NoiseModel &noise,
                                                 std::span<const std::pair<double, double>> bins,
                                                 const BenchmarkOptions &options) {
    if (options.runs_per_bin < 1) throw InputError("benchmark: runs per bin must be at least 1");
    std::vector<BenchmarkRow> rows;
    for (size_t b = 0; b < bins.size(); b++) {
        BenchmarkRow row;
        row.bin_lo = bins[b].first;
        row.bin_hi = bins[b].second;
        row.runs = options.runs_per_bin;
        row.iterations.assign(row.runs, 0);
        row.final_i_n.assign(row.runs, 0);
        row.success.assign(row.runs, false);
        std::vector<char> success(row.runs, 0);
        parallel_runs(row.runs, options.workers, [&](int r) {
            uint64_t s = mix_seed(options.seed, b * 1000003ULL + static_cast<uint64_t>(r));
            InjectedErrors inj =
                inject_errors_in_bin(pulse_x, pulse_y, options.mechanism, row.bin_lo, row.bin_hi, s, options.shots);
            CalibrationState st =
                calibrate_loop(inj.pulse_x, inj.pulse_y, noise, inj.experiment, options.calibration);
            row.iterations[r] = st.iteration;
            const auto &last = st.history.back().i_n;
            row.final_i_n[r] = 0.5 * (last[0] + last[1]);
            success[r] = st.converged ? 1 : 0;
        });
        // Failed runs end at unrelated S = 0 solutions, so statistics use converged runs only.
        std::vector<double> iters, in_ok;
        int ok = 0;
        for (int r = 0; r < row.runs; r++) {
            row.success[r] = success[r] != 0;
            if (row.success[r]) {
                ok++;
                iters.push_back(row.iterations[r]);
                in_ok.push_back(row.final_i_n[r]);
            }
        }
        row.success_rate = static_cast<double>(ok) / row.runs;
        row.median_iters = percentile(iters, 0.5);
        row.in_p10 = percentile(in_ok, 0.1);
        row.in_p50 = percentile(in_ok, 0.5);
        row.in_p90 = percentile(in_ok, 0.9);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace pulseforge
