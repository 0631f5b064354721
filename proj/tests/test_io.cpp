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


#include "pulseforge/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "pulseforge/error.hpp"

using namespace pulseforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    fs::path d = fs::temp_directory_path() / "pulseforge_test_io";
    fs::create_directories(d);
    return d / name;
}

PulseSequence sample_pulse() {
    auto dev = std::make_shared<DeviceModel>();
    return PulseSequence::clocked(dev, {-300.1234567890123, 12.5, -1250, 349.999}, 1, GateTarget::y90m(), "probe");
}

}  // namespace

TEST(pulse_json, round_trip) {
    PulseSequence p = sample_pulse();
    fs::path f = scratch("p.json");
    io::write_pulse(f, p);
    PulseSequence q = io::read_pulse(f);
    EXPECT_EQ(p, q);
    EXPECT_EQ(io::pulse_to_json(p).dump(), io::pulse_to_json(q).dump());
}

TEST(pulse_json, rejects_bad_input) {
    io::Json j = io::pulse_to_json(sample_pulse());
    io::Json v = j;
    v["version"] = 99;
    EXPECT_THROW(io::pulse_from_json(v), InputError);
    io::Json extra = j;
    extra["surprise"] = 1;
    EXPECT_THROW(io::pulse_from_json(extra), InputError);
    io::Json missing = j;
    missing.erase("eps_uV");
    EXPECT_THROW(io::pulse_from_json(missing), InputError);
    io::Json clock = j;
    clock["dbz_rad_per_ns"] = clock["dbz_rad_per_ns"].get<double>() * 1.001;
    EXPECT_THROW(io::pulse_from_json(clock), InputError);
}

TEST(pulse_json, corrupted_file) {
    fs::path f = scratch("broken.json");
    std::ofstream(f) << "{\"version\": 1, \"eps_uV\": [1, 2";
    EXPECT_THROW(io::read_pulse(f), InputError);
    EXPECT_THROW(io::read_pulse(scratch("does_not_exist.json")), InputError);
}

TEST(run_config, defaults_and_round_trip) {
    io::RunConfig c = io::run_config_from_json(io::Json::object());
    EXPECT_EQ(c.device, DeviceModel{});
    EXPECT_EQ(c.noise, NoiseModel{});
    EXPECT_FALSE(c.seed.has_value());
    c.seed = 17;
    c.device.tau_rise = 0.8;
    c.calibration.mechanism = InjectionMechanism::parameter_mismatch;
    io::RunConfig d = io::run_config_from_json(io::run_config_to_json(c));
    EXPECT_EQ(io::run_config_to_json(c).dump(), io::run_config_to_json(d).dump());
    EXPECT_EQ(d.seed, 17u);
}

TEST(run_config, unknown_keys_rejected) {
    EXPECT_THROW(io::run_config_from_json(io::Json::parse(R"({"devise": {}})")), InputError);
    EXPECT_THROW(io::run_config_from_json(io::Json::parse(R"({"device": {"j0": 1}})")), InputError);
    EXPECT_THROW(io::run_config_from_json(io::Json::parse(R"({"device": {"eps0_uV": -1}})")), InputError);
    EXPECT_NO_THROW(io::run_config_from_json(io::Json::parse(R"({"device": {"eps0_uV": 200}})")));
}

TEST(seed, precedence) {
    io::RunConfig c;
    unsetenv("PULSEFORGE_SEED");
    EXPECT_EQ(io::resolve_seed(std::nullopt, c), 0u);
    c.seed = 5;
    EXPECT_EQ(io::resolve_seed(std::nullopt, c), 5u);
    setenv("PULSEFORGE_SEED", "9", 1);
    EXPECT_EQ(io::resolve_seed(std::nullopt, c), 9u);
    EXPECT_EQ(io::resolve_seed(3, c), 3u);
    setenv("PULSEFORGE_SEED", "x1", 1);
    EXPECT_THROW(io::resolve_seed(std::nullopt, c), InputError);
    unsetenv("PULSEFORGE_SEED");
}

TEST(manifest, stable_hash_and_fields) {
    io::RunConfig c;
    io::Json a = io::make_manifest("optimize", {"--nseg", "18"}, c, 42, {"out.json"});
    io::Json b = io::make_manifest("optimize", {"--nseg", "18"}, c, 42, {"out.json"});
    EXPECT_EQ(a.dump(), b.dump());
    EXPECT_EQ(a["seed"], 42);
    EXPECT_EQ(a["config_hash"].get<std::string>().size(), 16u);
    c.device.j0 = 1.1;
    EXPECT_NE(io::make_manifest("optimize", {}, c, 42, {})["config_hash"], a["config_hash"]);
    EXPECT_EQ(io::manifest_path("dir/out.csv"), fs::path("dir/out.csv.manifest.json"));
}

TEST(csv, formatting) {
    EXPECT_EQ(io::format_number(0.5), "0.5");
    EXPECT_EQ(io::format_number(std::nan("")), "nan");
    FilterFunctionTable t{{1e6, 2e6}, {0.25, 1.0 / 3}};
    std::ostringstream os;
    io::write_filter_csv(os, t);
    std::string s = os.str();
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}

TEST(csv, benchmark_rows) {
    BenchmarkRow r;
    r.bin_lo = 0;
    r.bin_hi = 0.05;
    r.runs = 10;
    r.success_rate = 0.9;
    std::vector<BenchmarkRow> rows{r, r, r, r};
    std::ostringstream os;
    io::write_benchmark_csv(os, rows);
    std::string s = os.str();
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 5);
}
