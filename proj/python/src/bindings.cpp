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


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "pulseforge/calibration.hpp"
#include "pulseforge/error.hpp"
#include "pulseforge/io.hpp"
#include "pulseforge/model.hpp"
#include "pulseforge/noise.hpp"
#include "pulseforge/noise_trace.hpp"
#include "pulseforge/optimizer.hpp"

namespace py = pybind11;
using namespace pulseforge;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using CArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

py::object to_python(const io::Json &j) { return py::module_::import("json").attr("loads")(j.dump()); }

io::Json from_python(const py::object &o) {
    return io::Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Array to_numpy(std::span<const double> v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<double> to_vector(const Array &a) {
    if (a.ndim() != 1) throw InputError("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

CArray to_numpy(const Unitary2 &u) {
    CArray out({2, 2});
    std::copy(u.matrix().begin(), u.matrix().end(), out.mutable_data());
    return out;
}

Unitary2 unitary_from(const CArray &a) {
    if (a.ndim() != 2 || a.shape(0) != 2 || a.shape(1) != 2) throw InputError("expected a 2x2 matrix");
    std::array<std::complex<double>, 4> m;
    std::copy(a.data(), a.data() + 4, m.begin());
    return Unitary2(m);
}

Vec3 vec3_from(const std::array<double, 3> &a) { return {a[0], a[1], a[2]}; }
std::array<double, 3> vec3_to(const Vec3 &v) { return {v.x, v.y, v.z}; }

std::shared_ptr<const DeviceModel> share(const DeviceModel &d) { return std::make_shared<const DeviceModel>(d); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Noise-aware pulse synthesis and calibration for singlet-triplet qubits";
    m.attr("__version__") = PULSEFORGE_VERSION;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InputError>(m, "InputError", base.ptr());
    py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());

    py::class_<DeviceModel>(m, "DeviceModel")
        .def(py::init<>())
        .def_readwrite("j0", &DeviceModel::j0)
        .def_readwrite("eps0", &DeviceModel::eps0)
        .def_readwrite("tau_rise", &DeviceModel::tau_rise)
        .def_readwrite("eps_min", &DeviceModel::eps_min)
        .def_readwrite("eps_max", &DeviceModel::eps_max)
        .def_readwrite("t_sample", &DeviceModel::t_sample)
        .def_readwrite("n_sub", &DeviceModel::n_sub)
        .def("validate", &DeviceModel::validate)
        .def("gate_time", &DeviceModel::gate_time, py::arg("n_seg"))
        .def("j_min", &DeviceModel::j_min)
        .def("to_dict", [](const DeviceModel &d) { return to_python(io::device_to_json(d)); })
        .def("__eq__", [](const DeviceModel &a, const DeviceModel &b) { return a == b; });

    py::class_<NoiseModel>(m, "NoiseModel")
        .def(py::init<>())
        .def_readwrite("sigma_dbz", &NoiseModel::sigma_dbz)
        .def_readwrite("sigma_eps", &NoiseModel::sigma_eps)
        .def_readwrite("psd_amp", &NoiseModel::psd_amp)
        .def_readwrite("psd_exponent", &NoiseModel::psd_exponent)
        .def_readwrite("f_low", &NoiseModel::f_low)
        .def_readwrite("f_knee", &NoiseModel::f_knee)
        .def_readwrite("f_high", &NoiseModel::f_high)
        .def_readwrite("n_quad", &NoiseModel::n_quad)
        .def("validate", &NoiseModel::validate)
        .def("without_fast", &NoiseModel::without_fast)
        .def("psd", [](const NoiseModel &n, double f) { return psd_eval(f, n); }, py::arg("f_hz"));

    py::class_<GateTarget>(m, "GateTarget")
        .def(py::init([](const std::array<double, 3> &axis, double angle) {
                 return GateTarget::make(vec3_from(axis), angle);
             }),
             py::arg("axis"), py::arg("angle"))
        .def_static("x90", &GateTarget::x90)
        .def_static("y90m", &GateTarget::y90m)
        .def_static("x180", &GateTarget::x180)
        .def_property_readonly("axis", [](const GateTarget &t) { return vec3_to(t.axis); })
        .def_readonly("angle", &GateTarget::angle)
        .def("unitary", [](const GateTarget &t) { return to_numpy(t.unitary()); });

    py::class_<PulseSequence>(m, "PulseSequence")
        .def_static(
            "clocked",
            [](const Array &eps, int n_dbz, const GateTarget &target, const DeviceModel &device,
               const std::string &name) {
                return PulseSequence::clocked(share(device), to_vector(eps), n_dbz, target, name);
            },
            py::arg("eps"), py::arg("n_dbz"), py::arg("target"), py::arg("device") = DeviceModel{},
            py::arg("name") = "")
        .def_static("from_dict", [](const py::object &o) { return io::pulse_from_json(from_python(o)); })
        .def_static("read", [](const std::string &path) { return io::read_pulse(path); })
        .def("write", [](const PulseSequence &p, const std::string &path) { io::write_pulse(path, p); })
        .def("to_dict", [](const PulseSequence &p) { return to_python(io::pulse_to_json(p)); })
        .def_property_readonly("eps", [](const PulseSequence &p) { return to_numpy(p.eps()); })
        .def_property_readonly("device", &PulseSequence::device)
        .def_property_readonly("n_seg", &PulseSequence::n_seg)
        .def_property_readonly("n_dbz", &PulseSequence::n_dbz)
        .def_property_readonly("dbz", &PulseSequence::dbz)
        .def_property_readonly("total_time", &PulseSequence::total_time)
        .def_property_readonly("target", &PulseSequence::target)
        .def_property_readonly("name", &PulseSequence::name)
        .def("unitary", [](const PulseSequence &p) { return to_numpy(propagate(p)); })
        .def("with_eps", [](const PulseSequence &p, const Array &eps) { return p.with_eps(to_vector(eps)); })
        .def("__eq__", [](const PulseSequence &a, const PulseSequence &b) { return a == b; });

    m.def("exchange_j", &exchange_j, py::arg("eps"), py::arg("device") = DeviceModel{});
    m.def("clocked_dbz", &clocked_dbz, py::arg("n_dbz"), py::arg("total_time"), py::arg("j_min"));

    m.def(
        "average_gate_fidelity",
        [](const CArray &u, const CArray &t) { return average_gate_fidelity(unitary_from(u), unitary_from(t)); },
        py::arg("u"), py::arg("target"));
    m.def(
        "six_state_fidelity",
        [](const CArray &u, const CArray &t) { return six_state_fidelity(unitary_from(u), unitary_from(t)); },
        py::arg("u"), py::arg("target"));

    m.def(
        "evaluate",
        [](const PulseSequence &p, const NoiseModel &noise) {
            GateReport r;
            {
                py::gil_scoped_release release;
                r = evaluate_gate(p, noise);
            }
            return to_python(io::report_to_json(r));
        },
        py::arg("pulse"), py::arg("noise") = NoiseModel{});
    m.def("quasistatic_infidelity_dbz", &quasistatic_infidelity_dbz, py::arg("pulse"),
          py::arg("noise") = NoiseModel{});
    m.def("quasistatic_infidelity_eps", &quasistatic_infidelity_eps, py::arg("pulse"),
          py::arg("noise") = NoiseModel{});
    m.def("fast_noise_infidelity", &fast_noise_infidelity, py::arg("pulse"), py::arg("noise") = NoiseModel{});
    m.def(
        "filter_function",
        [](const PulseSequence &p, const Array &freqs) {
            auto f = to_vector(freqs);
            return to_numpy(filter_function(p, f).values);
        },
        py::arg("pulse"), py::arg("frequencies_hz"));
    m.def(
        "mc_fast_noise",
        [](const PulseSequence &p, const NoiseModel &noise, int traces, uint64_t seed, bool realized) {
            MonteCarloEstimate mc;
            {
                py::gil_scoped_release release;
                mc = mc_fast_noise_oracle(p, noise, traces, seed,
                                          realized ? FidelityReference::realized : FidelityReference::target);
            }
            py::dict d;
            d["mean"] = mc.mean;
            d["std_error"] = mc.std_error;
            d["samples"] = mc.samples;
            return d;
        },
        py::arg("pulse"), py::arg("noise") = NoiseModel{}, py::arg("traces") = 1000, py::arg("seed") = 0,
        py::arg("realized_reference") = true);

    m.def(
        "optimize",
        [](const GateTarget &target, int n_seg, int n_dbz, int restarts, uint64_t seed, int workers,
           bool sqrt_components, const NoiseModel &noise, const DeviceModel &device) {
            GateProblem problem{share(device), noise, target, n_seg, n_dbz, sqrt_components};
            MultistartOptions options;
            options.n_restarts = restarts;
            options.seed = seed;
            options.workers = workers;
            OptimizationResult result;
            {
                py::gil_scoped_release release;
                result = multistart_optimize(problem, options);
            }
            return py::make_tuple(*result.best, to_python(io::result_to_json(result)));
        },
        py::arg("target"), py::arg("n_seg") = 18, py::arg("n_dbz") = 2, py::arg("restarts") = 100,
        py::arg("seed") = 0, py::arg("workers") = 1, py::arg("sqrt_components") = false,
        py::arg("noise") = NoiseModel{}, py::arg("device") = DeviceModel{});

    m.def("bootstrap_linear_map", [] {
        const auto &l = bootstrap_linear_map();
        py::array_t<double> out({6, 6});
        for (int r = 0; r < 6; r++)
            for (int c = 0; c < 6; c++) out.mutable_at(r, c) = l(r, c);
        return out;
    });
    m.def(
        "bootstrap_outcomes",
        [](const PulseSequence &x, const PulseSequence &y) {
            BootstrapVector s = bootstrap_outcomes(x, y, matched_experiment(x), true);
            return to_numpy(std::span<const double>(s.data(), 6));
        },
        py::arg("pulse_x"), py::arg("pulse_y"));
    m.def(
        "fit_error_params",
        [](const Array &s) {
            auto v = to_vector(s);
            if (v.size() != 6) throw InputError("fit_error_params: expected 6 outcomes");
            GateErrorParams p = fit_error_params(Eigen::Map<const Eigen::Matrix<double, 6, 1>>(v.data()));
            py::dict d;
            d["phi"] = p.phi;
            d["chi"] = p.chi;
            d["n_y"] = p.n_y;
            d["n_z"] = p.n_z;
            d["v_x"] = p.v_x;
            d["v_z"] = p.v_z;
            return d;
        },
        py::arg("s"));
    m.def(
        "calibrate",
        [](const PulseSequence &x, const PulseSequence &y, const std::string &mechanism, double lo, double hi,
           uint64_t seed, int max_iter, const NoiseModel &noise) {
            InjectionMechanism mech;
            if (mechanism == "sample_offsets") mech = InjectionMechanism::sample_offsets;
            else if (mechanism == "parameter_mismatch") mech = InjectionMechanism::parameter_mismatch;
            else throw InputError("calibrate: unknown mechanism '" + mechanism + "'");
            CalibrationConfig config;
            config.max_iter = max_iter;
            CalibrationState state;
            InjectedErrors injected = [&] {
                py::gil_scoped_release release;
                InjectedErrors inj = inject_errors_in_bin(x, y, mech, lo, hi, seed);
                state = calibrate_loop(inj.pulse_x, inj.pulse_y, noise, inj.experiment, config);
                return inj;
            }();
            return to_python(io::calibration_to_json(state, &injected));
        },
        py::arg("pulse_x"), py::arg("pulse_y"), py::arg("mechanism") = "sample_offsets", py::arg("bin_lo") = 0.05,
        py::arg("bin_hi") = 0.1, py::arg("seed") = 0, py::arg("max_iter") = 25, py::arg("noise") = NoiseModel{});
}
