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

#include <cstdint>
#include <random>
#include <vector>

#include "pulseforge/noise.hpp"

namespace pulseforge {

/// Independent, reproducible substream for (seed, index).
std::mt19937_64 substream(uint64_t seed, uint64_t index);

enum class TraceSampling {
    point,         ///< instantaneous values at the sample instants
    step_average,  ///< averages over each sample interval
};

/// Stationary Gaussian δε(t) trace in µV with the one-sided spectrum of
/// `model` on [f_low, f_high], synthesized by coloring independent complex
/// Gaussians and inverse-transforming. The synthesis record is long enough
/// to resolve f_low; the first duration/dt samples are returned.
///
/// Throws InputError if dt does not divide duration or dt > 1/(2·f_high).
std::vector<double> generate_noise_trace(const NoiseModel &model, double duration_ns, double dt_ns, uint64_t seed,
                                         TraceSampling sampling = TraceSampling::point);

struct MonteCarloEstimate {
    double mean = 0;
    double std_error = 0;
    int samples = 0;
};

enum class FidelityReference { target, realized };

/// Time-domain validation of the first-order fast-noise infidelity: each
/// trace perturbs the rendered detuning, J_k → J(ε_k + δε_k), and the mean
/// 1 − F against the reference is reported. Quasistatic channels are not
/// sampled. Requires n_traces ≥ 100 and a uniform sub-grid.
MonteCarloEstimate mc_fast_noise_oracle(const PulseSequence &pulse, const NoiseModel &model, int n_traces,
                                        uint64_t seed, FidelityReference reference = FidelityReference::target);

}  // namespace pulseforge
