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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pulseforge/calibration.hpp"
#include "pulseforge/lm.hpp"
#include "pulseforge/model.hpp"
#include "pulseforge/noise.hpp"
#include "pulseforge/noise_trace.hpp"
#include "pulseforge/optimizer.hpp"

namespace pulseforge::io {

using Json = nlohmann::ordered_json;

inline constexpr int kPulseSchemaVersion = 1;

// ---- pulses -------------------------------------------------------------------

Json target_to_json(const GateTarget &target);
GateTarget target_from_json(const Json &j);

/// Device block of the pulse schema (t_sample lives at the top level).
Json device_to_json(const DeviceModel &device);

Json pulse_to_json(const PulseSequence &pulse);
/// Throws InputError on schema violations, including an unknown "version".
PulseSequence pulse_from_json(const Json &j);

PulseSequence read_pulse(const std::filesystem::path &path);
void write_pulse(const std::filesystem::path &path, const PulseSequence &pulse);

// ---- results ------------------------------------------------------------------

Json report_to_json(const GateReport &report);
/// Pulse schema plus infidelity breakdown, restarts, seed and cost history.
/// Wall time goes under "timing", the only field allowed to differ between runs.
Json result_to_json(const OptimizationResult &result);
Json robustness_to_json(const RobustnessResult &result);
Json mc_to_json(const MonteCarloEstimate &mc, double perturbative, int traces, uint64_t seed);
Json calibration_to_json(const CalibrationState &state, const InjectedErrors *injected = nullptr);

void write_scan_csv(std::ostream &out, std::span<const ScanCell> cells);
void write_filter_csv(std::ostream &out, const FilterFunctionTable &table);
void write_benchmark_csv(std::ostream &out, std::span<const BenchmarkRow> rows);

/// %.15g, with "nan" for missing values.
std::string format_number(double v);

// ---- configuration ----------------------------------------------------------------

struct OptimizerSettings {
    int restarts = 100;
    int n_seg = 18;
    int n_dbz = 2;
    bool sqrt_components = false;
    std::optional<LmConfig> lm;
};

struct CalibrationSettings {
    int shots = 10000;
    int runs_per_bin = 100;
    InjectionMechanism mechanism = InjectionMechanism::sample_offsets;
    CalibrationConfig loop{};
};

struct RunConfig {
    DeviceModel device{};
    NoiseModel noise{};
    OptimizerSettings optimizer{};
    CalibrationSettings calibration{};
    std::optional<uint64_t> seed;
    std::string output_dir = ".";

    void validate() const;
};

/// Every block is optional and falls back to defaults; unknown keys are rejected.
RunConfig run_config_from_json(const Json &j);
RunConfig load_run_config(const std::filesystem::path &path);
Json run_config_to_json(const RunConfig &config);

/// Precedence: explicit flag, then PULSEFORGE_SEED, then the config, then 0.
uint64_t resolve_seed(std::optional<uint64_t> flag, const RunConfig &config);

// ---- files ----------------------------------------------------------------------

Json read_json(const std::filesystem::path &path);
void write_json(const std::filesystem::path &path, const Json &j);
void write_text(const std::filesystem::path &path, const std::string &text);

/// FNV-1a 64 of the compact serialization, as 16 hex digits.
std::string content_hash(const Json &j);

/// Provenance record written next to every output.
Json make_manifest(const std::string &command, const std::vector<std::string> &arguments, const RunConfig &config,
                   uint64_t seed, const std::vector<std::filesystem::path> &outputs);
std::filesystem::path manifest_path(const std::filesystem::path &output);

}  // namespace pulseforge::io
