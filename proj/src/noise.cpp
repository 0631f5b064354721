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
#include <complex>
#include <mutex>
#include <numbers>

#include "pulseforge/error.hpp"

namespace pulseforge {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
// V² → µV²
constexpr double kMicroVoltSq = 1e12;
// Hz → rad/ns
constexpr double kHzToRadPerNs = kTwoPi * 1e-9;
// Linear width cap for quadrature panels, Hz. Keeps cos(ω·lag) resolved for
// sub-grids up to a few hundred ns long.
constexpr double kPanelCapHz = 5e6;
constexpr int kPanelNodes = 8;

void require_unitary(const Unitary2 &u) {
    if (unitarity_defect(u.matrix()) > 1e-8) throw InputError("fidelity: input matrix is not unitary");
}

using Mat2 = std::array<cplx, 4>;

Mat2 mul(const Mat2 &a, const Mat2 &b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Mat2 dag(const Mat2 &a) { return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])}; }

// |ĥ(ω)|² = |∫_0^dt e^{−iωt} dt|²
double step_window_sq(double omega, double dt) {
    double x = 0.5 * omega * dt;
    double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6 : std::sin(x) / x;
    return dt * dt * sinc * sinc;
}

// Panels covering [a, b]: at most 1/16 decade wide and at most kPanelCapHz.
std::vector<double> panel_edges(double a, double b) {
    std::vector<double> edges{a};
    double f = a;
    const double ratio = std::pow(10.0, 1.0 / 16);
    while (f < b) {
        double next = std::min({f * ratio, f + kPanelCapHz, b});
        edges.push_back(next);
        f = next;
    }
    return edges;
}

template <typename Fn>
void for_each_spectral_node(const NoiseModel &model, Fn &&fn) {
    static const QuadratureRule gl = gauss_legendre(kPanelNodes);
    auto band = [&](double a, double b) {
        if (!(b > a)) return;
        auto edges = panel_edges(a, b);
        for (size_t p = 0; p + 1 < edges.size(); p++) {
            double lo = edges[p], hi = edges[p + 1];
            double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
            for (int k = 0; k < kPanelNodes; k++) {
                double f = mid + half * gl.nodes[k];
                fn(f, half * gl.weights[k] * psd_eval(f, model));
            }
        }
    };
    double knee = std::min(model.f_knee, model.f_high);
    band(model.f_low, knee);
    band(knee, model.f_high);
}

// Composite Simpson in ln f over [a, b] with roughly `per_decade` points per decade.
template <typename Fn>
double log_simpson(double a, double b, int per_decade, Fn &&fn) {
    if (!(b > a)) return 0;
    double la = std::log(a), lb = std::log(b);
    int n = std::max(2, static_cast<int>(std::ceil((lb - la) / std::log(10.0) * per_decade)));
    if (n % 2) n++;
    double h = (lb - la) / n;
    double s = 0;
    for (int i = 0; i <= n; i++) {
        double f = std::exp(la + i * h);
        double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        s += w * fn(f) * f;
    }
    return s * h / 3;
}

}  // namespace

void NoiseModel::validate() const {
    if (!(sigma_dbz >= 0) || !(sigma_eps >= 0) || !(psd_amp >= 0))
        throw InputError("noise: widths and PSD amplitude must be non-negative");
    if (!(psd_exponent >= 0)) throw InputError("noise: PSD exponent must be non-negative");
    if (!(f_low > 0 && f_low < f_knee && f_knee <= f_high)) throw InputError("noise: need 0 < f_low < f_knee <= f_high");
    if (n_quad < 1) throw InputError("noise: n_quad must be at least 1");
}

NoiseModel NoiseModel::without_fast() const {
    NoiseModel m = *this;
    m.psd_amp = 0;
    return m;
}

double psd_eval(double f_hz, const NoiseModel &model) {
    if (!(f_hz >= model.f_low * (1 - 1e-12) && f_hz <= model.f_high * (1 + 1e-12)))
        throw InputError("psd: frequency " + std::to_string(f_hz) + " Hz outside the modeled band");
    double f = std::min(f_hz, model.f_knee);
    return model.psd_amp * std::pow(f, -model.psd_exponent);
}

double average_gate_fidelity(const Su2 &u, const Su2 &target) {
    double tr_half = target.overlap(u);
    return (4 * tr_half * tr_half + 2) / 6;
}

double average_gate_fidelity(const Unitary2 &u, const Unitary2 &target) {
    require_unitary(u);
    require_unitary(target);
    const auto &a = target.matrix();
    const auto &b = u.matrix();
    cplx tr = 0;
    // Dividing by the Frobenius norms (both 2 for exact unitaries) absorbs
    // rounding in the inputs, so F(U, U) = 1 to the last bit.
    double na = 0, nb = 0;
    for (int k = 0; k < 4; k++) {
        tr += std::conj(a[k]) * b[k];
        na += std::norm(a[k]);
        nb += std::norm(b[k]);
    }
    return (4 * std::norm(tr) / (na * nb) + 2) / 6;
}

double six_state_fidelity(const Unitary2 &u, const Unitary2 &target) {
    require_unitary(u);
    require_unitary(target);
    const cplx i(0, 1);
    const std::array<Mat2, 6> states = {
        Mat2{0.5, 0.5, 0.5, 0.5},         Mat2{0.5, -0.5, -0.5, 0.5},      // ±x
        Mat2{0.5, -0.5 * i, 0.5 * i, 0.5}, Mat2{0.5, 0.5 * i, -0.5 * i, 0.5},  // ±y
        Mat2{1.0, 0.0, 0.0, 0.0},         Mat2{0.0, 0.0, 0.0, 1.0},        // ±z
    };
    const Mat2 &um = u.matrix();
    const Mat2 &tm = target.matrix();
    double sum = 0;
    for (const auto &rho : states) {
        Mat2 a = mul(mul(tm, rho), dag(tm));
        Mat2 b = mul(mul(um, rho), dag(um));
        Mat2 p = mul(a, b);
        sum += std::real(p[0] + p[3]);
    }
    return sum / 6;
}

double ensemble_fidelity(std::span<const Unitary2> realizations, std::span<const double> weights,
                         const Unitary2 &target) {
    if (realizations.size() != weights.size()) throw InputError("ensemble: size mismatch");
    double f = 0;
    for (size_t k = 0; k < realizations.size(); k++) f += weights[k] * six_state_fidelity(realizations[k], target);
    return f;
}

// ---- toggling frame ---------------------------------------------------------

ToggleFrameCoupling toggling_coupling(const PulseSequence &pulse) {
    Waveform w = rendered_waveform(pulse);
    const DeviceModel &dev = pulse.device();
    ToggleFrameCoupling out;
    out.t_start = w.t_start;
    out.dt = w.dt;
    for (auto &c : out.c) c.resize(w.size());
    Su2 u;
    for (size_t n = 0; n < w.size(); n++) {
        double j = exchange_j(w.eps_mid[n], dev);
        Su2 mid = step_propagator(j, pulse.dbz(), 0.5 * w.dt[n]) * u;
        Vec3 r = mid.heisenberg_z();
        double g = j / (2 * dev.eps0);
        out.c[0][n] = g * r.x;
        out.c[1][n] = g * r.y;
        out.c[2][n] = g * r.z;
        u = step_propagator(j, pulse.dbz(), w.dt[n]) * u;
    }
    return out;
}

double filter_value(const ToggleFrameCoupling &coupling, double f_hz) {
    const double omega = f_hz * kHzToRadPerNs;
    std::array<cplx, 3> acc{};
    for (size_t n = 0; n < coupling.dt.size(); n++) {
        double t = coupling.t_start[n], dt = coupling.dt[n];
        // ∫_t^{t+dt} e^{−iωs} ds
        cplx seg;
        if (std::abs(omega * dt) < 1e-9) {
            seg = std::polar(dt, -omega * (t + 0.5 * dt));
        } else {
            seg = std::polar(1.0, -omega * t) * (1.0 - std::polar(1.0, -omega * dt)) / cplx(0, omega);
        }
        for (int k = 0; k < 3; k++) acc[k] += coupling.c[k][n] * seg;
    }
    return std::norm(acc[0]) + std::norm(acc[1]) + std::norm(acc[2]);
}

std::vector<double> log_grid(double f_min, double f_max, int points) {
    if (points < 1) throw InputError("grid: need at least one point");
    if (!(f_min > 0)) throw InputError("grid: f_min must be positive");
    if (points == 1) return {f_min};
    if (!(f_max > f_min)) throw InputError("grid: f_min must be below f_max");
    std::vector<double> g(points);
    double la = std::log(f_min), lb = std::log(f_max);
    for (int k = 0; k < points; k++) g[k] = std::exp(la + (lb - la) * k / (points - 1));
    g.back() = f_max;
    return g;
}

FilterFunctionTable filter_function(const PulseSequence &pulse, std::span<const double> frequencies_hz) {
    ToggleFrameCoupling c = toggling_coupling(pulse);
    FilterFunctionTable t;
    t.frequencies.assign(frequencies_hz.begin(), frequencies_hz.end());
    t.values.reserve(t.frequencies.size());
    for (double f : t.frequencies) t.values.push_back(filter_value(c, f));
    return t;
}

// ---- fast-noise kernel ------------------------------------------------------

FastNoiseKernel::FastNoiseKernel(const NoiseModel &model, double dt, size_t max_lag) : dt_(dt), kernel_(max_lag, 0.0) {
    model.validate();
    if (!(dt > 0)) throw InputError("kernel: dt must be positive");
    if (!model.has_fast() || max_lag == 0) return;
    for_each_spectral_node(model, [&](double f, double weight_psd) {
        double omega = f * kHzToRadPerNs;
        double base = weight_psd * kMicroVoltSq * step_window_sq(omega, dt);
        cplx z = std::polar(1.0, omega * dt);
        cplx zd = 1.0;
        for (size_t d = 0; d < kernel_.size(); d++) {
            kernel_[d] += base * zd.real();
            zd *= z;
        }
    });
}

double FastNoiseKernel::infidelity(const ToggleFrameCoupling &coupling) const {
    const size_t n = coupling.dt.size();
    if (n > kernel_.size()) throw InputError("kernel: pulse longer than the precomputed lag range");
    double total = 0;
    for (const auto &c : coupling.c) {
        double diag = 0, off = 0;
        for (size_t a = 0; a < n; a++) {
            if (c[a] == 0) continue;
            diag += c[a] * c[a];
            double row = 0;
            for (size_t b = a + 1; b < n; b++) row += c[b] * kernel_[b - a];
            off += c[a] * row;
        }
        total += diag * kernel_[0] + 2 * off;
    }
    return (2.0 / 3.0) * std::max(total, 0.0);
}

double fast_noise_infidelity_spectral(const PulseSequence &pulse, const NoiseModel &model, double rel_tol) {
    model.validate();
    if (!model.has_fast()) return 0;
    ToggleFrameCoupling c = toggling_coupling(pulse);
    auto integrand = [&](double f) { return psd_eval(f, model) * kMicroVoltSq * filter_value(c, f); };
    double knee = std::min(model.f_knee, model.f_high);
    auto estimate = [&](int per_decade) {
        return log_simpson(model.f_low, knee, per_decade, integrand) +
               log_simpson(knee, model.f_high, per_decade, integrand);
    };
    int per_decade = 200;
    double prev = estimate(per_decade);
    for (int round = 0; round < 8; round++) {
        per_decade *= 2;
        double next = estimate(per_decade);
        bool done = std::abs(next - prev) <= rel_tol * std::abs(next);
        prev = next;
        if (done) break;
    }
    return (2.0 / 3.0) * prev;
}

double fast_noise_infidelity(const PulseSequence &pulse, const NoiseModel &model) {
    return NoiseEvaluator(model).infidelity_eps_fast(pulse);
}

// ---- evaluator ----------------------------------------------------------------

struct NoiseEvaluator::KernelCache {
    std::mutex mu;
    std::shared_ptr<const FastNoiseKernel> kernel;
};

NoiseEvaluator::NoiseEvaluator(NoiseModel model)
    : model_(model), rule_(gauss_hermite(model.n_quad)), cache_(std::make_shared<KernelCache>()) {
    model_.validate();
}

std::shared_ptr<const FastNoiseKernel> NoiseEvaluator::kernel_for(double dt, size_t n) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto &k = cache_->kernel;
    if (!k || std::abs(k->dt() - dt) > 1e-12 * dt || k->max_lag() < n) {
        k = std::make_shared<FastNoiseKernel>(model_, dt, std::max(n, k ? k->max_lag() : size_t{0}));
    }
    return k;
}

double NoiseEvaluator::infidelity_dbz(const ExchangeProfile &profile, double dbz, const Su2 &reference) const {
    if (model_.sigma_dbz == 0) return 0;
    double f = 0;
    for (size_t i = 0; i < rule_.nodes.size(); i++) {
        Su2 u = propagate_profile(profile, dbz + model_.sigma_dbz * rule_.nodes[i]);
        f += rule_.weights[i] * average_gate_fidelity(u, reference);
    }
    return std::max(0.0, 1 - f);
}

double NoiseEvaluator::infidelity_eps_slow(const ExchangeProfile &profile, double dbz, double eps0,
                                           const Su2 &reference) const {
    if (model_.sigma_eps == 0) return 0;
    double f = 0;
    for (size_t i = 0; i < rule_.nodes.size(); i++) {
        double scale = std::exp(model_.sigma_eps * rule_.nodes[i] / eps0);
        Su2 u = propagate_profile(profile, dbz, scale);
        f += rule_.weights[i] * average_gate_fidelity(u, reference);
    }
    return std::max(0.0, 1 - f);
}

double NoiseEvaluator::infidelity_eps_fast(const PulseSequence &pulse) const {
    if (!model_.has_fast()) return 0;
    ToggleFrameCoupling c = toggling_coupling(pulse);
    bool uniform = true;
    for (double d : c.dt) uniform = uniform && std::abs(d - c.dt.front()) <= 1e-12 * c.dt.front();
    if (!uniform) return fast_noise_infidelity_spectral(pulse, model_);
    return kernel_for(c.dt.front(), c.dt.size())->infidelity(c);
}

GateReport NoiseEvaluator::evaluate(const PulseSequence &pulse) const {
    ExchangeProfile profile = exchange_profile(pulse);
    Su2 u0 = propagate_profile(profile, pulse.dbz());
    GateReport r;
    r.u_realized = Unitary2::from_su2(u0);
    r.rotation = decompose_rotation(u0);
    r.inf_systematic = std::max(0.0, 1 - average_gate_fidelity(u0, pulse.target().su2()));
    r.inf_dbz = infidelity_dbz(profile, pulse.dbz(), u0);
    r.inf_eps_slow = infidelity_eps_slow(profile, pulse.dbz(), pulse.device().eps0, u0);
    r.inf_eps_fast = infidelity_eps_fast(pulse);
    r.inf_total = r.inf_dbz + r.inf_eps_slow + r.inf_eps_fast + r.inf_systematic;
    return r;
}

double quasistatic_infidelity_dbz(const PulseSequence &pulse, const NoiseModel &model) {
    ExchangeProfile p = exchange_profile(pulse);
    return NoiseEvaluator(model).infidelity_dbz(p, pulse.dbz(), propagate_profile(p, pulse.dbz()));
}

double quasistatic_infidelity_eps(const PulseSequence &pulse, const NoiseModel &model) {
    ExchangeProfile p = exchange_profile(pulse);
    return NoiseEvaluator(model).infidelity_eps_slow(p, pulse.dbz(), pulse.device().eps0,
                                                     propagate_profile(p, pulse.dbz()));
}

GateReport evaluate_gate(const PulseSequence &pulse, const NoiseModel &model) {
    return NoiseEvaluator(model).evaluate(pulse);
}

}  // namespace pulseforge
