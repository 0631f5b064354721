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

#include "pulseforge/noise_trace.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "pulseforge/error.hpp"

namespace pulseforge {

namespace {

// fftw planning is not thread-safe.
std::mutex &planner_mutex() {
    static std::mutex mu;
    return mu;
}

struct FftwFree {
    void operator()(void *p) const { fftw_free(p); }
};

class InverseRealFft {
   public:
    explicit InverseRealFft(size_t n)
        : n_(n),
          spec_(static_cast<fftw_complex *>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))),
          out_(static_cast<double *>(fftw_malloc(sizeof(double) * n))) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_.get(), out_.get(), FFTW_ESTIMATE);
    }
    ~InverseRealFft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }
    InverseRealFft(const InverseRealFft &) = delete;
    InverseRealFft &operator=(const InverseRealFft &) = delete;

    fftw_complex *spectrum() { return spec_.get(); }
    const double *execute() {
        fftw_execute(plan_);
        return out_.get();
    }

   private:
    size_t n_;
    std::unique_ptr<fftw_complex, FftwFree> spec_;
    std::unique_ptr<double, FftwFree> out_;
    fftw_plan plan_;
};

size_t record_length(size_t n, double dt_ns, double f_low) {
    double needed = std::max(static_cast<double>(n), std::ceil(1e9 / (f_low * dt_ns)));
    size_t len = 1;
    while (static_cast<double>(len) < needed) len <<= 1;
    return len;
}

size_t sample_count(double duration_ns, double dt_ns) {
    if (!(dt_ns > 0) || !(duration_ns > 0)) throw InputError("noise trace: duration and dt must be positive");
    double r = duration_ns / dt_ns;
    double n = std::round(r);
    if (n < 1 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) throw InputError("noise trace: dt must divide duration");
    return static_cast<size_t>(n);
}

// Per-bin amplitude √(S·Δf)/2 in µV (so that 2·Re(Y e^{iθ}) carries variance S·Δf),
// optionally weighted by the sinc of the sample-interval average.
std::vector<double> bin_amplitudes(const NoiseModel &model, size_t len, double dt_ns, TraceSampling sampling) {
    std::vector<double> amp(len / 2 + 1, 0.0);
    if (!model.has_fast()) return amp;
    const double df = 1e9 / (static_cast<double>(len) * dt_ns);
    for (size_t k = 1; k < len / 2; k++) {
        double f = k * df;
        if (f < model.f_low || f > model.f_high) continue;
        double a = 0.5 * std::sqrt(psd_eval(f, model) * df) * 1e6;
        if (sampling == TraceSampling::step_average) {
            double x = std::numbers::pi * f * dt_ns * 1e-9;
            a *= std::sin(x) / x;
        }
        amp[k] = a;
    }
    return amp;
}

class TraceSynthesizer {
   public:
    TraceSynthesizer(const NoiseModel &model, size_t n, double dt_ns, TraceSampling sampling)
        : n_(n), len_(record_length(n, dt_ns, model.f_low)), amp_(bin_amplitudes(model, len_, dt_ns, sampling)),
          fft_(len_) {}

    std::vector<double> draw(std::mt19937_64 &rng) {
        std::normal_distribution<double> normal;
        fftw_complex *spec = fft_.spectrum();
        for (size_t k = 0; k < amp_.size(); k++) {
            if (amp_[k] == 0) {
                spec[k][0] = spec[k][1] = 0;
                continue;
            }
            spec[k][0] = amp_[k] * normal(rng);
            spec[k][1] = amp_[k] * normal(rng);
        }
        const double *x = fft_.execute();
        return std::vector<double>(x, x + n_);
    }

   private:
    size_t n_;
    size_t len_;
    std::vector<double> amp_;
    InverseRealFft fft_;
};

void check_aliasing(const NoiseModel &model, double dt_ns) {
    if (model.has_fast() && dt_ns > 1e9 / (2 * model.f_high) * (1 + 1e-12))
        throw InputError("noise trace: dt too large for f_high (aliasing)");
}

}  // namespace

std::mt19937_64 substream(uint64_t seed, uint64_t index) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(index),
                      static_cast<uint32_t>(index >> 32), 0x9e3779b9u};
    return std::mt19937_64(seq);
}

std::vector<double> generate_noise_trace(const NoiseModel &model, double duration_ns, double dt_ns, uint64_t seed,
                                         TraceSampling sampling) {
    model.validate();
    size_t n = sample_count(duration_ns, dt_ns);
    check_aliasing(model, dt_ns);
    if (!model.has_fast()) return std::vector<double>(n, 0.0);
    TraceSynthesizer synth(model, n, dt_ns, sampling);
    auto rng = substream(seed, 0);
    return synth.draw(rng);
}

MonteCarloEstimate mc_fast_noise_oracle(const PulseSequence &pulse, const NoiseModel &model, int n_traces,
                                        uint64_t seed, FidelityReference reference) {
    model.validate();
    if (n_traces < 100) throw InputError("monte carlo: need at least 100 traces");
    ExchangeProfile profile = exchange_profile(pulse);
    const double dt = profile.dt.front();
    for (double d : profile.dt) {
        if (std::abs(d - dt) > 1e-12 * dt) throw InputError("monte carlo: requires a uniform sub-grid");
    }
    check_aliasing(model, dt);
    const double eps0 = pulse.device().eps0;
    const Su2 ref = reference == FidelityReference::target ? pulse.target().su2() : propagate_profile(profile, pulse.dbz());

    std::unique_ptr<TraceSynthesizer> synth;
    if (model.has_fast()) synth = std::make_unique<TraceSynthesizer>(model, profile.j.size(), dt, TraceSampling::step_average);

    double sum = 0, sum_sq = 0;
    ExchangeProfile noisy = profile;
    for (int i = 0; i < n_traces; i++) {
        if (synth) {
            auto rng = substream(seed, static_cast<uint64_t>(i));
            std::vector<double> trace = synth->draw(rng);
            for (size_t k = 0; k < profile.j.size(); k++) noisy.j[k] = profile.j[k] * std::exp(trace[k] / eps0);
        }
        double inf = 1 - average_gate_fidelity(propagate_profile(noisy, pulse.dbz()), ref);
        sum += inf;
        sum_sq += inf * inf;
    }
    MonteCarloEstimate est;
    est.samples = n_traces;
    est.mean = sum / n_traces;
    double var = std::max(0.0, (sum_sq / n_traces - est.mean * est.mean)) * n_traces / (n_traces - 1);
    est.std_error = std::sqrt(var / n_traces);
    return est;
}

}  // namespace pulseforge
