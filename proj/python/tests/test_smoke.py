# Copyright 2026 The pulseforge Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import math
from pathlib import Path

import numpy as np
import pytest

import pulseforge as pf

GATES = Path(__file__).resolve().parents[2] / "data" / "gates"


@pytest.fixture(scope="module")
def x90():
    return pf.PulseSequence.read(str(GATES / "x90_n18_d2.json"))


@pytest.fixture(scope="module")
def y90m():
    return pf.PulseSequence.read(str(GATES / "y90m_n18_d2.json"))


def test_device_defaults():
    d = pf.DeviceModel()
    assert d.eps0 == 250.0
    assert d.gate_time(18) == pytest.approx(22.0)
    assert pf.exchange_j(0.0, d) == pytest.approx(1.0)
    assert pf.exchange_j(250.0, d) == pytest.approx(math.e)


def test_clock_infeasible():
    with pytest.raises(pf.InfeasibleError):
        pf.PulseSequence.clocked(np.full(18, -1250.0), 0, pf.GateTarget.x90())


def test_bad_target_axis():
    with pytest.raises(pf.InputError):
        pf.GateTarget((1.0, 1.0, 0.0), math.pi / 2)


def test_idle_pulse_is_identity():
    p = pf.PulseSequence.clocked(np.full(18, -1250.0), 2, pf.GateTarget.x90())
    assert p.dbz * p.total_time == pytest.approx(4 * math.pi, rel=1e-3)
    f = pf.average_gate_fidelity(p.unitary(), np.eye(2))
    assert f == pytest.approx(1.0, abs=1e-12)


def test_shipped_gate(x90):
    assert x90.n_seg == 18 and x90.n_dbz == 2
    r = pf.evaluate(x90)
    inf = r["infidelity"]
    assert inf["systematic"] < 1e-8
    assert inf["total"] < 5e-3
    assert inf["total"] == pytest.approx(inf["dbz"] + inf["eps_slow"] + inf["eps_fast"] + inf["systematic"])
    f = pf.average_gate_fidelity(x90.unitary(), x90.target.unitary())
    assert 1 - f == pytest.approx(inf["systematic"], abs=1e-12)


def test_dict_round_trip(x90):
    again = pf.PulseSequence.from_dict(x90.to_dict())
    assert again == x90
    np.testing.assert_array_equal(again.eps, x90.eps)


def test_fidelity_matches_six_state():
    rng = np.random.default_rng(1)
    for _ in range(20):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        u = np.array([[q[0] - 1j * q[3], -q[2] - 1j * q[1]], [q[2] - 1j * q[1], q[0] + 1j * q[3]]])
        assert pf.average_gate_fidelity(u, np.eye(2)) == pytest.approx(pf.six_state_fidelity(u, np.eye(2)), abs=1e-12)


def test_filter_function(x90):
    f = np.logspace(6, 9, 31)
    vals = pf.filter_function(x90, f)
    assert vals.shape == f.shape
    assert np.all(vals >= 0)
    assert f[np.argmax(vals)] > 1e7


def test_bootstrap(x90, y90m):
    assert np.linalg.matrix_rank(pf.bootstrap_linear_map()) == 5
    s = pf.bootstrap_outcomes(x90, y90m)
    assert np.max(np.abs(s)) < 1e-4
    fit = pf.fit_error_params(np.zeros(6))
    assert all(v == 0 for v in fit.values())


def test_optimize_small():
    pulse, result = pf.optimize(pf.GateTarget.x90(), n_seg=12, n_dbz=1, restarts=2, seed=3)
    assert pulse.n_seg == 12
    assert result["restarts"] == 2
    assert result["infidelity"]["total"] < 0.1
