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

// Command-line front end. Every command is a thin wrapper over the library;
// outputs are JSON (structured results) or CSV (plot series), each with a
// manifest next to it.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pulseforge/calibration.hpp"
#include "pulseforge/error.hpp"
#include "pulseforge/io.hpp"
#include "pulseforge/noise.hpp"
#include "pulseforge/noise_trace.hpp"
#include "pulseforge/optimizer.hpp"

namespace fs = std::filesystem;
using namespace pulseforge;
using io::Json;

namespace {

struct Common {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::string out;
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

void add_common(CLI::App *cmd, Common &c, bool with_seed, bool with_workers) {
    cmd->add_option("--config", c.config_path, "Run configuration (JSON)");
    cmd->add_option("--out", c.out, "Output file (stdout when omitted)");
    if (with_seed) cmd->add_option("--seed", c.seed, "Seed (overrides PULSEFORGE_SEED and the config)");
    if (with_workers) cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
}

io::RunConfig load_config(const Common &c) {
    return c.config_path.empty() ? io::run_config_from_json(Json::object()) : io::load_run_config(c.config_path);
}

std::vector<std::string> g_args;

void emit(const Common &c, const std::string &command, const io::RunConfig &cfg, uint64_t seed,
          const std::string &text) {
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    fs::path out = c.out;
    io::write_text(out, text);
    io::write_json(io::manifest_path(out), io::make_manifest(command, g_args, cfg, seed, {out}));
}

GateTarget parse_target(const std::string &name, const std::vector<double> &axis, std::optional<double> angle) {
    if (name == "x90") return GateTarget::x90();
    if (name == "y90m") return GateTarget::y90m();
    if (name == "x180") return GateTarget::x180();
    if (name == "custom") {
        if (axis.size() != 3 || !angle) throw InputError("custom target needs --axis x,y,z and --angle");
        return GateTarget::make({axis[0], axis[1], axis[2]}, *angle);
    }
    throw InputError("unknown target " + name);
}

std::pair<double, double> parse_bin(const std::string &s) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw InputError("bin must be lo:hi, got " + s);
    try {
        return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::exception &) {
        throw InputError("bin must be lo:hi, got " + s);
    }
}

std::vector<std::pair<double, double>> parse_bins(const std::string &s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw InputError("--bins must be lo:hi:n, got " + s);
    double lo, hi;
    int n;
    try {
        lo = std::stod(parts[0]);
        hi = std::stod(parts[1]);
        n = std::stoi(parts[2]);
    } catch (const std::exception &) {
        throw InputError("--bins must be lo:hi:n, got " + s);
    }
    if (!(hi > lo) || lo < 0 || n < 1) throw InputError("--bins needs 0 <= lo < hi and n >= 1");
    std::vector<std::pair<double, double>> bins;
    for (int i = 0; i < n; i++) bins.push_back({lo + (hi - lo) * i / n, lo + (hi - lo) * (i + 1) / n});
    return bins;
}

std::string default_gate(const char *file) { return (fs::path(PULSEFORGE_DATA_DIR) / "gates" / file).string(); }

}  // namespace

int main(int argc, char **argv) {
    g_args.assign(argv + 1, argv + argc);
    CLI::App app{"pulseforge: noise-robust singlet-triplet gate synthesis and calibration"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(PULSEFORGE_VERSION));

    Common common;

    // optimize
    auto *opt = app.add_subcommand("optimize", "Multistart search for one gate");
    add_common(opt, common, true, true);
    std::string target = "x90";
    std::vector<double> axis;
    std::optional<double> angle;
    std::optional<int> nseg, ndbz, restarts;
    bool sqrt_components = false;
    std::string name;
    opt->add_option("--target", target, "x90 | y90m | x180 | custom")
        ->check(CLI::IsMember({"x90", "y90m", "x180", "custom"}));
    opt->add_option("--axis", axis, "Custom rotation axis x,y,z")->delimiter(',')->expected(3);
    opt->add_option("--angle", angle, "Custom rotation angle, rad");
    opt->add_option("--nseg", nseg, "Number of AWG samples");
    opt->add_option("--ndbz", ndbz, "ΔBz clock index");
    opt->add_option("--restarts", restarts, "Random restarts");
    opt->add_flag("--sqrt-components", sqrt_components, "Use √I for the noise residuals");
    opt->add_option("--name", name, "Name stored in the pulse");
    std::string pulse_out;
    opt->add_option("--pulse-out", pulse_out, "Also write the winning pulse as a bare pulse file");

    // evaluate
    auto *eval = app.add_subcommand("evaluate", "Infidelity breakdown of a pulse file");
    add_common(eval, common, false, false);
    std::string pulse_path;
    eval->add_option("pulse", pulse_path, "Pulse file")->required();

    // filterfn
    auto *ff = app.add_subcommand("filterfn", "Fast-noise filter function on a log grid (CSV)");
    add_common(ff, common, false, false);
    double fmin = 1e4, fmax = 3e9;
    int points = 600;
    ff->add_option("pulse", pulse_path, "Pulse file")->required();
    ff->add_option("--fmin", fmin, "Lowest frequency, Hz");
    ff->add_option("--fmax", fmax, "Highest frequency, Hz");
    ff->add_option("--points", points, "Grid points")->check(CLI::PositiveNumber);

    // scan
    auto *scan = app.add_subcommand("scan", "Optimize over a grid of (n_seg, n_dbz) (CSV)");
    add_common(scan, common, true, true);
    std::vector<int> nseg_list{12, 18, 24, 30}, ndbz_list{1, 2, 3};
    scan->add_option("--nseg-list", nseg_list, "Comma-separated n_seg values")->delimiter(',');
    scan->add_option("--ndbz-list", ndbz_list, "Comma-separated n_dbz values")->delimiter(',');
    scan->add_option("--restarts", restarts, "Restarts per cell");
    scan->add_option("--target", target, "x90 | y90m | x180")->check(CLI::IsMember({"x90", "y90m", "x180"}));
    scan->add_flag("--sqrt-components", sqrt_components, "Use √I for the noise residuals");

    // robustness
    auto *rob = app.add_subcommand("robustness", "Noise infidelity under ± device-parameter errors");
    add_common(rob, common, false, false);
    double magnitude = 0.2;
    rob->add_option("pulse", pulse_path, "Pulse file")->required();
    rob->add_option("--magnitude", magnitude, "Relative perturbation of j0, eps0, tau_rise");
    bool all_corners = false;
    rob->add_flag("--all-corners", all_corners, "Perturb all three parameters at once as well");

    // mc-validate
    auto *mc = app.add_subcommand("mc-validate", "Perturbative fast-noise infidelity vs time-domain Monte Carlo");
    add_common(mc, common, true, false);
    int traces = 1000;
    mc->add_option("pulse", pulse_path, "Pulse file")->required();
    mc->add_option("--traces", traces, "Noise traces")->check(CLI::Range(100, 100000000));

    // calibrate
    auto *cal = app.add_subcommand("calibrate", "Closed-loop bootstrap calibration of a gate pair");
    add_common(cal, common, true, false);
    std::string x_path = default_gate("x90_n18_d2.json"), y_path = default_gate("y90m_n18_d2.json");
    std::string bin, mechanism_name;
    std::optional<double> scale;
    std::optional<int> shots;
    cal->add_option("--x", x_path, "π/2 x pulse file");
    cal->add_option("--y", y_path, "π/2 −y pulse file");
    cal->add_option("--bin", bin, "Inject errors with pair infidelity in lo:hi");
    cal->add_option("--scale", scale, "Inject errors of this scale instead");
    cal->add_option("--mechanism", mechanism_name, "sample_offsets | parameter_mismatch")
        ->check(CLI::IsMember({"sample_offsets", "parameter_mismatch"}));
    cal->add_option("--shots", shots, "Single shots per sequence");

    // bench-calibration
    auto *bench = app.add_subcommand("bench-calibration", "Calibration success rate per initial-infidelity bin (CSV)");
    add_common(bench, common, true, true);
    std::optional<int> runs;
    std::string bins_spec = "0:0.2:4";
    bench->add_option("--x", x_path, "π/2 x pulse file");
    bench->add_option("--y", y_path, "π/2 −y pulse file");
    bench->add_option("--runs", runs, "Runs per bin");
    bench->add_option("--bins", bins_spec, "lo:hi:n equal-width bins");
    bench->add_option("--shots", shots, "Single shots per sequence");
    bench->add_option("--mechanism", mechanism_name, "sample_offsets | parameter_mismatch")
        ->check(CLI::IsMember({"sample_offsets", "parameter_mismatch"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 1;
    }

    try {
        io::RunConfig cfg = load_config(common);
        const std::string command = app.get_subcommands().front()->get_name();

        if (opt->parsed()) {
            uint64_t seed = io::resolve_seed(common.seed, cfg);
            GateProblem problem;
            problem.device = std::make_shared<const DeviceModel>(cfg.device);
            problem.noise = cfg.noise;
            problem.target = parse_target(target, axis, angle);
            problem.n_seg = nseg.value_or(cfg.optimizer.n_seg);
            problem.n_dbz = ndbz.value_or(cfg.optimizer.n_dbz);
            problem.sqrt_components = sqrt_components || cfg.optimizer.sqrt_components;
            if (problem.n_seg < 1) throw InputError("--nseg must be at least 1");
            MultistartOptions mo;
            mo.n_restarts = restarts.value_or(cfg.optimizer.restarts);
            if (mo.n_restarts < 1) throw InputError("--restarts must be at least 1");
            mo.seed = seed;
            mo.workers = common.workers;
            mo.lm = cfg.optimizer.lm;
            OptimizationResult r = multistart_optimize(problem, mo);
            if (!name.empty() && r.best) {
                r.best = PulseSequence::with_dbz(r.best->device_ptr(), {r.best->eps().begin(), r.best->eps().end()},
                                                 r.best->n_dbz(), r.best->dbz(), r.best->target(), name);
            }
            emit(common, command, cfg, seed, io::result_to_json(r).dump(2) + "\n");
            if (!pulse_out.empty()) {
                io::write_pulse(pulse_out, *r.best);
                io::write_json(io::manifest_path(pulse_out), io::make_manifest(command, g_args, cfg, seed, {pulse_out}));
            }
        } else if (eval->parsed()) {
            PulseSequence p = io::read_pulse(pulse_path);
            emit(common, command, cfg, 0, io::report_to_json(evaluate_gate(p, cfg.noise)).dump(2) + "\n");
        } else if (ff->parsed()) {
            if (!(fmin > 0) || !(fmax > fmin)) throw InputError("need 0 < fmin < fmax");
            PulseSequence p = io::read_pulse(pulse_path);
            std::ostringstream csv;
            io::write_filter_csv(csv, filter_function(p, log_grid(fmin, fmax, points)));
            emit(common, command, cfg, 0, csv.str());
        } else if (scan->parsed()) {
            uint64_t seed = io::resolve_seed(common.seed, cfg);
            GateProblem base;
            base.device = std::make_shared<const DeviceModel>(cfg.device);
            base.noise = cfg.noise;
            base.target = parse_target(target, {}, std::nullopt);
            base.sqrt_components = sqrt_components || cfg.optimizer.sqrt_components;
            MultistartOptions mo;
            mo.n_restarts = restarts.value_or(cfg.optimizer.restarts);
            mo.seed = seed;
            mo.workers = common.workers;
            mo.lm = cfg.optimizer.lm;
            auto cells = scan_grid(base, nseg_list, ndbz_list, mo);
            std::ostringstream csv;
            io::write_scan_csv(csv, cells);
            emit(common, command, cfg, seed, csv.str());
        } else if (rob->parsed()) {
            PulseSequence p = io::read_pulse(pulse_path);
            emit(common, command, cfg, 0, io::robustness_to_json(robustness_scan(p, cfg.noise, magnitude,
                                                      all_corners ? RobustnessMode::all_corners : RobustnessMode::exchange_or_rise)).dump(2) + "\n");
        } else if (mc->parsed()) {
            uint64_t seed = io::resolve_seed(common.seed, cfg);
            PulseSequence p = io::read_pulse(pulse_path);
            MonteCarloEstimate est = mc_fast_noise_oracle(p, cfg.noise, traces, seed, FidelityReference::realized);
            double pert = fast_noise_infidelity(p, cfg.noise);
            emit(common, command, cfg, seed, io::mc_to_json(est, pert, traces, seed).dump(2) + "\n");
        } else if (cal->parsed()) {
            uint64_t seed = io::resolve_seed(common.seed, cfg);
            PulseSequence px = io::read_pulse(x_path), py = io::read_pulse(y_path);
            InjectionMechanism mech =
                mechanism_name.empty() ? cfg.calibration.mechanism
                                       : (mechanism_name == "sample_offsets" ? InjectionMechanism::sample_offsets
                                                                             : InjectionMechanism::parameter_mismatch);
            int n_shots = shots.value_or(cfg.calibration.shots);
            if (!bin.empty() && scale) throw InputError("use either --bin or --scale");
            std::optional<InjectedErrors> inj;
            if (!bin.empty()) {
                auto [lo, hi] = parse_bin(bin);
                inj = inject_errors_in_bin(px, py, mech, lo, hi, seed, n_shots);
            } else {
                inj = inject_errors(px, py, mech, scale.value_or(0.0), seed, n_shots);
            }
            CalibrationState st = calibrate_loop(inj->pulse_x, inj->pulse_y, cfg.noise, inj->experiment,
                                                 cfg.calibration.loop);
            emit(common, command, cfg, seed, io::calibration_to_json(st, &*inj).dump(2) + "\n");
        } else if (bench->parsed()) {
            uint64_t seed = io::resolve_seed(common.seed, cfg);
            PulseSequence px = io::read_pulse(x_path), py = io::read_pulse(y_path);
            BenchmarkOptions bo;
            bo.runs_per_bin = runs.value_or(cfg.calibration.runs_per_bin);
            bo.shots = shots.value_or(cfg.calibration.shots);
            bo.seed = seed;
            bo.workers = common.workers;
            bo.mechanism = mechanism_name.empty() ? cfg.calibration.mechanism
                           : mechanism_name == "sample_offsets" ? InjectionMechanism::sample_offsets
                                                                : InjectionMechanism::parameter_mismatch;
            bo.calibration = cfg.calibration.loop;
            auto bins = parse_bins(bins_spec);
            auto rows = benchmark_success_rate(px, py, cfg.noise, bins, bo);
            std::ostringstream csv;
            io::write_benchmark_csv(csv, rows);
            emit(common, command, cfg, seed, csv.str());
        }
    } catch (const Error &e) {
        std::cerr << "pulseforge: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception &e) {
        std::cerr << "pulseforge: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
