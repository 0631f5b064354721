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

#include <fftw3.h>

#include <Eigen/Core>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include "pulseforge/error.hpp"

namespace pulseforge::io {

namespace {

void require_object(const Json &j, const std::string &where) {
    if (!j.is_object()) throw InputError(where + ": expected a JSON object");
}

void check_keys(const Json &j, std::initializer_list<const char *> allowed, const std::string &where) {
    require_object(j, where);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char *k : allowed) known = known || it.key() == k;
        if (!known) throw InputError(where + ": unknown key \"" + it.key() + "\"");
    }
}

template <typename T>
T get_as(const Json &v, const std::string &what) {
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw InputError(what + ": expected a number");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw InputError(what + ": expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw InputError(what + ": expected an integer");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw InputError(what + ": expected a string");
        }
        return v.get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw InputError(what + ": " + e.what());
    }
}

template <typename T>
T required(const Json &j, const char *key, const std::string &where) {
    if (!j.contains(key)) throw InputError(where + ": missing \"" + key + "\"");
    return get_as<T>(j.at(key), where + "." + key);
}

template <typename T>
void optional_field(const Json &j, const char *key, const std::string &where, T &out) {
    if (j.contains(key)) out = get_as<T>(j.at(key), where + "." + key);
}

Vec3 vec3_from(const Json &j, const std::string &where) {
    if (!j.is_array() || j.size() != 3) throw InputError(where + ": expected an array of 3 numbers");
    return {get_as<double>(j[0], where), get_as<double>(j[1], where), get_as<double>(j[2], where)};
}

Json vec3_to(const Vec3 &v) { return Json::array({v.x, v.y, v.z}); }

DeviceModel device_from_pulse_json(const Json &j, double t_sample) {
    const std::string where = "pulse.device";
    check_keys(j, {"j0_rad_per_ns", "eps0_uV", "tau_rise_ns", "eps_min_uV", "eps_max_uV", "n_sub"}, where);
    DeviceModel d;
    d.j0 = required<double>(j, "j0_rad_per_ns", where);
    d.eps0 = required<double>(j, "eps0_uV", where);
    d.tau_rise = required<double>(j, "tau_rise_ns", where);
    d.eps_min = required<double>(j, "eps_min_uV", where);
    d.eps_max = required<double>(j, "eps_max_uV", where);
    d.n_sub = required<int>(j, "n_sub", where);
    d.t_sample = t_sample;
    d.validate();
    return d;
}

Json lm_to_json(const LmConfig &c) {
    return Json{{"max_iter", c.max_iter}, {"lambda0", c.lambda0}, {"nu", c.nu},           {"gtol", c.gtol},
                {"xtol", c.xtol},         {"ftol", c.ftol},       {"fd_step", c.fd_step}, {"damping_floor", c.damping_floor}};
}

LmConfig lm_from_json(const Json &j, LmConfig c) {
    const std::string where = "optimizer.lm";
    check_keys(j, {"max_iter", "lambda0", "nu", "gtol", "xtol", "ftol", "fd_step", "damping_floor"}, where);
    optional_field(j, "max_iter", where, c.max_iter);
    optional_field(j, "lambda0", where, c.lambda0);
    optional_field(j, "nu", where, c.nu);
    optional_field(j, "gtol", where, c.gtol);
    optional_field(j, "xtol", where, c.xtol);
    optional_field(j, "ftol", where, c.ftol);
    optional_field(j, "fd_step", where, c.fd_step);
    optional_field(j, "damping_floor", where, c.damping_floor);
    c.validate();
    return c;
}

InjectionMechanism mechanism_from(const std::string &s) {
    if (s == "parameter_mismatch") return InjectionMechanism::parameter_mismatch;
    if (s == "sample_offsets") return InjectionMechanism::sample_offsets;
    throw InputError("calibration.mechanism: expected parameter_mismatch or sample_offsets, got \"" + s + "\"");
}

JacobianSource jacobian_from(const std::string &s) {
    if (s == "model") return JacobianSource::model;
    if (s == "measured") return JacobianSource::measured;
    throw InputError("calibration.jacobian: expected model or measured, got \"" + s + "\"");
}

Json vector_json(std::span<const double> v) { return Json(std::vector<double>(v.begin(), v.end())); }

}  // namespace

// ---- pulses ---------------------------------------------------------------------

Json target_to_json(const GateTarget &t) { return Json{{"axis", vec3_to(t.axis)}, {"angle", t.angle}}; }

GateTarget target_from_json(const Json &j) {
    check_keys(j, {"axis", "angle"}, "target");
    if (!j.contains("axis")) throw InputError("target: missing \"axis\"");
    return GateTarget::make(vec3_from(j.at("axis"), "target.axis"), required<double>(j, "angle", "target"));
}

Json device_to_json(const DeviceModel &d) {
    return Json{{"j0_rad_per_ns", d.j0}, {"eps0_uV", d.eps0},       {"tau_rise_ns", d.tau_rise},
                {"eps_min_uV", d.eps_min}, {"eps_max_uV", d.eps_max}, {"n_sub", d.n_sub}};
}

Json pulse_to_json(const PulseSequence &p) {
    return Json{{"version", kPulseSchemaVersion},
                {"name", p.name()},
                {"target", target_to_json(p.target())},
                {"t_sample_ns", p.device().t_sample},
                {"eps_uV", vector_json(p.eps())},
                {"n_dbz", p.n_dbz()},
                {"dbz_rad_per_ns", p.dbz()},
                {"device", device_to_json(p.device())}};
}

PulseSequence pulse_from_json(const Json &j) {
    const std::string where = "pulse";
    require_object(j, where);
    if (!j.contains("version")) throw InputError("pulse: missing \"version\"");
    int version = get_as<int>(j.at("version"), "pulse.version");
    if (version != kPulseSchemaVersion) throw InputError("pulse: unsupported schema version " + std::to_string(version));
    check_keys(j, {"version", "name", "target", "t_sample_ns", "eps_uV", "n_dbz", "dbz_rad_per_ns", "device"}, where);
    for (const char *k : {"target", "eps_uV", "device"})
        if (!j.contains(k)) throw InputError(where + ": missing \"" + k + "\"");
    std::string name;
    optional_field(j, "name", where, name);
    double t_sample = required<double>(j, "t_sample_ns", where);
    auto device = std::make_shared<const DeviceModel>(device_from_pulse_json(j.at("device"), t_sample));
    const Json &eps_j = j.at("eps_uV");
    if (!eps_j.is_array()) throw InputError("pulse.eps_uV: expected an array");
    std::vector<double> eps;
    for (const auto &v : eps_j) eps.push_back(get_as<double>(v, "pulse.eps_uV"));
    return PulseSequence::with_dbz(device, std::move(eps), required<int>(j, "n_dbz", where),
                                   required<double>(j, "dbz_rad_per_ns", where), target_from_json(j.at("target")),
                                   std::move(name));
}

PulseSequence read_pulse(const std::filesystem::path &path) { return pulse_from_json(read_json(path)); }

void write_pulse(const std::filesystem::path &path, const PulseSequence &pulse) { write_json(path, pulse_to_json(pulse)); }

// ---- results ------------------------------------------------------------------------

Json report_to_json(const GateReport &r) {
    Json u = Json::array();
    for (const auto &c : r.u_realized.matrix()) u.push_back(Json::array({c.real(), c.imag()}));
    return Json{{"rotation",
                 {{"axis", vec3_to(r.rotation.axis)}, {"angle", r.rotation.angle}, {"degenerate", r.rotation.degenerate}}},
                {"unitary_re_im", u},
                {"infidelity",
                 {{"dbz", r.inf_dbz},
                  {"eps_slow", r.inf_eps_slow},
                  {"eps_fast", r.inf_eps_fast},
                  {"systematic", r.inf_systematic},
                  {"noise", r.inf_noise()},
                  {"total", r.inf_total}}}};
}

Json result_to_json(const OptimizationResult &result) {
    if (!result.best) throw ConvergenceError("optimize: no restart produced a pulse");
    Json j = pulse_to_json(*result.best);
    j["infidelity"] = {{"dbz", result.report.inf_dbz},
                       {"eps_slow", result.report.inf_eps_slow},
                       {"eps_fast", result.report.inf_eps_fast},
                       {"systematic", result.report.inf_systematic},
                       {"total", result.report.inf_total}};
    j["restarts"] = result.restarts;
    j["seed"] = result.seed;
    j["best_restart"] = result.best_restart;
    j["cost_history_best"] = result.cost_history_best;
    j["timing"] = {{"wall_time_s", result.wall_time_s}};
    return j;
}

Json robustness_to_json(const RobustnessResult &r) {
    Json cases = Json::array();
    for (const auto &c : r.cases)
        cases.push_back({{"j0_factor", c.j0_factor},
                         {"eps0_factor", c.eps0_factor},
                         {"tau_factor", c.tau_factor},
                         {"inf_noise", c.inf_noise},
                         {"inf_systematic", c.inf_systematic}});
    return Json{{"nominal", r.nominal}, {"worst", r.worst}, {"cases", cases}};
}

Json mc_to_json(const MonteCarloEstimate &mc, double perturbative, int traces, uint64_t seed) {
    return Json{{"perturbative", perturbative},
                {"monte_carlo", {{"mean", mc.mean}, {"std_error", mc.std_error}, {"samples", mc.samples}}},
                {"relative_difference", perturbative > 0 ? std::abs(mc.mean - perturbative) / perturbative : 0.0},
                {"traces", traces},
                {"seed", seed}};
}

Json calibration_to_json(const CalibrationState &state, const InjectedErrors *injected) {
    Json hist = Json::array();
    for (const auto &h : state.history) {
        hist.push_back({{"iter", h.iter},
                        {"S", std::vector<double>(h.s.data(), h.s.data() + 6)},
                        {"I_sys", {h.i_sys[0], h.i_sys[1]}},
                        {"I_n", {h.i_n[0], h.i_n[1]}},
                        {"accepted", h.accepted}});
    }
    Json j{{"converged", state.converged},
           {"iterations", state.iteration},
           {"measurement_rounds", state.measurements},
           {"history", hist}};
    if (injected) {
        j["injection"] = {{"mechanism", to_string(injected->mechanism)},
                          {"scale", injected->scale},
                          {"I_s", injected->i_s},
                          {"direction", injected->direction},
                          {"attempts", injected->attempts}};
    }
    if (state.pulse_x) j["pulse_x"] = pulse_to_json(*state.pulse_x);
    if (state.pulse_y) j["pulse_y"] = pulse_to_json(*state.pulse_y);
    return j;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

void write_scan_csv(std::ostream &out, std::span<const ScanCell> cells) {
    out << "n_seg,n_dbz,I_total,I_dbz,I_slow,I_fast\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto &c : cells) {
        const GateReport *r = c.result ? &c.result->report : nullptr;
        out << c.n_seg << ',' << c.n_dbz << ',' << format_number(r ? r->inf_total : nan) << ','
            << format_number(r ? r->inf_dbz : nan) << ',' << format_number(r ? r->inf_eps_slow : nan) << ','
            << format_number(r ? r->inf_eps_fast : nan) << '\n';
    }
}

void write_filter_csv(std::ostream &out, const FilterFunctionTable &t) {
    out << "f_hz,F\n";
    for (size_t i = 0; i < t.frequencies.size(); i++)
        out << format_number(t.frequencies[i]) << ',' << format_number(t.values[i]) << '\n';
}

void write_benchmark_csv(std::ostream &out, std::span<const BenchmarkRow> rows) {
    out << "bin_lo,bin_hi,success_rate,median_iters,In_p10,In_p50,In_p90\n";
    for (const auto &r : rows) {
        out << format_number(r.bin_lo) << ',' << format_number(r.bin_hi) << ',' << format_number(r.success_rate) << ','
            << format_number(r.median_iters) << ',' << format_number(r.in_p10) << ',' << format_number(r.in_p50)
            << ',' << format_number(r.in_p90) << '\n';
    }
}

// ---- configuration ----------------------------------------------------------------------

void RunConfig::validate() const {
    device.validate();
    noise.validate();
    if (optimizer.restarts < 1) throw InputError("optimizer.restarts must be at least 1");
    if (optimizer.n_seg < 1) throw InputError("optimizer.n_seg must be at least 1");
    if (optimizer.lm) optimizer.lm->validate();
    if (calibration.shots < 1) throw InputError("calibration.shots must be at least 1");
    if (calibration.runs_per_bin < 1) throw InputError("calibration.runs_per_bin must be at least 1");
    if (calibration.loop.max_iter < 0) throw InputError("calibration.max_iter must be non-negative");
    if (!(calibration.loop.w_n >= 0) || !(calibration.loop.w_n_prime >= 0))
        throw InputError("calibration weights must be non-negative");
    if (!(calibration.loop.fd_step > 0)) throw InputError("calibration.fd_step_uV must be positive");
}

RunConfig run_config_from_json(const Json &j) {
    check_keys(j, {"device", "noise", "optimizer", "calibration", "seed", "output_dir"}, "config");
    RunConfig c;
    if (j.contains("device")) {
        const Json &d = j.at("device");
        const std::string w = "config.device";
        check_keys(d, {"j0_rad_per_ns", "eps0_uV", "tau_rise_ns", "eps_min_uV", "eps_max_uV", "t_sample_ns", "n_sub"},
                   w);
        optional_field(d, "j0_rad_per_ns", w, c.device.j0);
        optional_field(d, "eps0_uV", w, c.device.eps0);
        optional_field(d, "tau_rise_ns", w, c.device.tau_rise);
        optional_field(d, "eps_min_uV", w, c.device.eps_min);
        optional_field(d, "eps_max_uV", w, c.device.eps_max);
        optional_field(d, "t_sample_ns", w, c.device.t_sample);
        optional_field(d, "n_sub", w, c.device.n_sub);
    }
    if (j.contains("noise")) {
        const Json &n = j.at("noise");
        const std::string w = "config.noise";
        check_keys(n, {"sigma_dbz_rad_per_ns", "sigma_eps_uV", "psd_amp_V2_per_Hz", "psd_exponent", "f_low_hz",
                       "f_knee_hz", "f_high_hz", "n_quad"},
                   w);
        optional_field(n, "sigma_dbz_rad_per_ns", w, c.noise.sigma_dbz);
        optional_field(n, "sigma_eps_uV", w, c.noise.sigma_eps);
        optional_field(n, "psd_amp_V2_per_Hz", w, c.noise.psd_amp);
        optional_field(n, "psd_exponent", w, c.noise.psd_exponent);
        optional_field(n, "f_low_hz", w, c.noise.f_low);
        optional_field(n, "f_knee_hz", w, c.noise.f_knee);
        optional_field(n, "f_high_hz", w, c.noise.f_high);
        optional_field(n, "n_quad", w, c.noise.n_quad);
    }
    if (j.contains("optimizer")) {
        const Json &o = j.at("optimizer");
        const std::string w = "config.optimizer";
        check_keys(o, {"restarts", "n_seg", "n_dbz", "sqrt_components", "lm"}, w);
        optional_field(o, "restarts", w, c.optimizer.restarts);
        optional_field(o, "n_seg", w, c.optimizer.n_seg);
        optional_field(o, "n_dbz", w, c.optimizer.n_dbz);
        optional_field(o, "sqrt_components", w, c.optimizer.sqrt_components);
        if (o.contains("lm")) c.optimizer.lm = lm_from_json(o.at("lm"), LmConfig{});
    }
    if (j.contains("calibration")) {
        const Json &k = j.at("calibration");
        const std::string w = "config.calibration";
        check_keys(k, {"shots", "runs_per_bin", "mechanism", "w_n", "w_n_prime", "max_iter", "success_threshold",
                       "jacobian", "fd_step_uV", "lambda0", "nu", "damping_floor", "exact_measurements"},
                   w);
        auto &loop = c.calibration.loop;
        optional_field(k, "shots", w, c.calibration.shots);
        optional_field(k, "runs_per_bin", w, c.calibration.runs_per_bin);
        if (k.contains("mechanism")) c.calibration.mechanism = mechanism_from(get_as<std::string>(k["mechanism"], w));
        optional_field(k, "w_n", w, loop.w_n);
        optional_field(k, "w_n_prime", w, loop.w_n_prime);
        optional_field(k, "max_iter", w, loop.max_iter);
        optional_field(k, "success_threshold", w, loop.success_threshold);
        if (k.contains("jacobian")) loop.jacobian = jacobian_from(get_as<std::string>(k["jacobian"], w));
        optional_field(k, "fd_step_uV", w, loop.fd_step);
        optional_field(k, "lambda0", w, loop.lambda0);
        optional_field(k, "nu", w, loop.nu);
        optional_field(k, "damping_floor", w, loop.damping_floor);
        optional_field(k, "exact_measurements", w, loop.exact_measurements);
    }
    if (j.contains("seed")) c.seed = get_as<uint64_t>(j.at("seed"), "config.seed");
    optional_field(j, "output_dir", "config", c.output_dir);
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path &path) { return run_config_from_json(read_json(path)); }

Json run_config_to_json(const RunConfig &c) {
    Json dev{{"j0_rad_per_ns", c.device.j0},     {"eps0_uV", c.device.eps0},       {"tau_rise_ns", c.device.tau_rise},
             {"eps_min_uV", c.device.eps_min},   {"eps_max_uV", c.device.eps_max}, {"t_sample_ns", c.device.t_sample},
             {"n_sub", c.device.n_sub}};
    Json noise{{"sigma_dbz_rad_per_ns", c.noise.sigma_dbz},
               {"sigma_eps_uV", c.noise.sigma_eps},
               {"psd_amp_V2_per_Hz", c.noise.psd_amp},
               {"psd_exponent", c.noise.psd_exponent},
               {"f_low_hz", c.noise.f_low},
               {"f_knee_hz", c.noise.f_knee},
               {"f_high_hz", c.noise.f_high},
               {"n_quad", c.noise.n_quad}};
    Json opt{{"restarts", c.optimizer.restarts},
             {"n_seg", c.optimizer.n_seg},
             {"n_dbz", c.optimizer.n_dbz},
             {"sqrt_components", c.optimizer.sqrt_components}};
    if (c.optimizer.lm) opt["lm"] = lm_to_json(*c.optimizer.lm);
    const auto &loop = c.calibration.loop;
    Json cal{{"shots", c.calibration.shots},
             {"runs_per_bin", c.calibration.runs_per_bin},
             {"mechanism", to_string(c.calibration.mechanism)},
             {"w_n", loop.w_n},
             {"w_n_prime", loop.w_n_prime},
             {"max_iter", loop.max_iter},
             {"success_threshold", loop.success_threshold},
             {"jacobian", loop.jacobian == JacobianSource::model ? "model" : "measured"},
             {"fd_step_uV", loop.fd_step},
             {"lambda0", loop.lambda0},
             {"nu", loop.nu},
             {"damping_floor", loop.damping_floor},
             {"exact_measurements", loop.exact_measurements}};
    Json j{{"device", dev}, {"noise", noise}, {"optimizer", opt}, {"calibration", cal}};
    if (c.seed) j["seed"] = *c.seed;
    j["output_dir"] = c.output_dir;
    return j;
}

uint64_t resolve_seed(std::optional<uint64_t> flag, const RunConfig &config) {
    if (flag) return *flag;
    if (const char *env = std::getenv("PULSEFORGE_SEED"); env && *env) {
        char *end = nullptr;
        errno = 0;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (errno != 0 || *end != '\0' || env[0] == '-')
            throw InputError(std::string("PULSEFORGE_SEED is not a non-negative integer: ") + env);
        return v;
    }
    return config.seed.value_or(0);
}

// ---- files -----------------------------------------------------------------------------

Json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw InputError(path.string() + ": malformed JSON: " + e.what());
    }
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("write failed for " + path.string());
}

void write_json(const std::filesystem::path &path, const Json &j) { write_text(path, j.dump(2) + "\n"); }

std::string content_hash(const Json &j) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::filesystem::path manifest_path(const std::filesystem::path &output) {
    auto p = output;
    p += ".manifest.json";
    return p;
}

Json make_manifest(const std::string &command, const std::vector<std::string> &arguments, const RunConfig &config,
                   uint64_t seed, const std::vector<std::filesystem::path> &outputs) {
    Json cfg = run_config_to_json(config);
    Json outs = Json::array();
    for (const auto &p : outputs) outs.push_back(p.filename().string());
    Json libs;
    libs["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION);
    libs["fftw"] = std::string(fftw_version);
    libs["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    Json m;
    m["tool"] = "pulseforge";
    m["version"] = PULSEFORGE_VERSION;
    m["command"] = command;
    m["arguments"] = arguments;
    m["seed"] = seed;
    m["config_hash"] = content_hash(cfg);
    m["config"] = cfg;
    m["outputs"] = outs;
    m["libraries"] = libs;
    m["compiler"] = std::string(__VERSION__);
    return m;
}

}  // namespace pulseforge::io
