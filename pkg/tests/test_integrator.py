import math
import random

import pytest

from conftest import SINGLE
from presympmp.engine import AlgorithmOptions, primary_constraints, run_algorithm
from presympmp.hamiltonian import build_hamiltonian
from presympmp.integrator import (
    ConstraintViolation,
    FreeControlError,
    InitialData,
    InitialDataError,
    ResidualBlowUp,
    StepRejected,
    integrate,
    verify_endpoints,
)
from presympmp.model import load_problem


def closed_form(t, vy0, pz, qz):
    u2 = 2 * (vy0 - 1)
    return {
        "x": 2.0, "y": -u2 * t * t / 2 + vy0 * t, "z": 2 * u2 * t * t + 4 * (1 - vy0) * t,
        "v_x": 0.0, "v_y": -u2 * t + vy0, "v_z": 4 * u2 * t + 4 * (1 - vy0),
        "p_x": 0.0, "p_y": 4 * pz, "p_z": pz, "q_x": 0.0, "q_y": -4 * pz * t + 4 * qz, "q_z": -pz * t + qz,
        "u1": 0.0, "u2": u2,
    }


def tr3_init(vy0, pz, qz):
    return {"y": 0, "z": 0, "v_y": vy0, "v_z": 4 * (1 - vy0), "p_z": pz, "q_z": qz,
            "u2": 2 * (vy0 - 1), "v_y0": vy0}


def max_error(tr, vy0, pz, qz):
    worst = 0.0
    for k, t in enumerate(tr.times):
        row = tr.at(k)
        for name, val in closed_form(t, vy0, pz, qz).items():
            worst = max(worst, abs(row[name] - val))
    return worst


def random_triples(n, seed=0):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        vy0, pz, qz = (round(rng.uniform(-3, 3), 6) for _ in range(3))
        if vy0 != 1 and (pz, qz) != (0, 0) and qz != 0:
            out.append((vy0, pz, qz))
    return out


@pytest.mark.parametrize("vy0,pz,qz", random_triples(3))
def test_tr3_closed_forms(hs0, abnormal_leaf, vy0, pz, qz):
    tr = integrate(hs0, abnormal_leaf, tr3_init(vy0, pz, qz), (0, 1), 1e-3)
    assert len(tr.times) == 1001
    assert max_error(tr, vy0, pz, qz) <= 1e-8
    assert tr.max_h_drift <= 1e-9
    assert tr.max_residual <= 1e-9


def test_tr3_endpoints(tr3, hs0, abnormal_leaf):
    vy0 = 2.0
    tr = integrate(hs0, abnormal_leaf, tr3_init(vy0, 1.0, 1.0), (0, 1), 1e-3)
    rep = verify_endpoints(tr, tr3, 1e-8, {"v_y0": vy0})
    assert [(e, c) for e, c, *_ in rep.failures()] == [("b", "v_y")]
    (row,) = rep.failures()
    assert abs(row[4] - abs(vy0)) <= 1e-8
    final = tr.at(len(tr.times) - 1)
    for name, val in zip(("x", "y", "z", "v_x", "v_y", "v_z"), (2, 1, 0, 0, 0, 4)):
        assert abs(final[name] - val) <= 1e-8


def test_free_control_refused(hs0, abnormal_leaf):
    init = tr3_init(2.0, 1.0, 1.0)
    del init["u2"]
    with pytest.raises(FreeControlError, match="u2"):
        integrate(hs0, abnormal_leaf, init)


def test_missing_initial_value(hs0, abnormal_leaf):
    init = tr3_init(2.0, 1.0, 1.0)
    del init["q_z"]
    with pytest.raises(InitialDataError, match="q_z"):
        integrate(hs0, abnormal_leaf, init)


def test_initial_data_violation(hs0, abnormal_leaf):
    init = dict(tr3_init(2.0, 1.0, 1.0), x=2.001)
    with pytest.raises(ConstraintViolation, match="x"):
        integrate(hs0, abnormal_leaf, init)


def test_inequation_violation(hs0, abnormal_leaf):
    with pytest.raises(ConstraintViolation, match="q_z"):
        integrate(hs0, abnormal_leaf, tr3_init(2.0, 1.0, 0.0))


def test_step_rejection(hs0, abnormal_leaf):
    init = tr3_init(2.0, 1.0, 1.0)
    with pytest.raises(StepRejected):
        integrate(hs0, abnormal_leaf, init, (0, 1), 2.0)
    with pytest.raises(StepRejected):
        integrate(hs0, abnormal_leaf, init, (0, 1), 0.3)


def test_residual_blow_up(hs0):
    # the primary branch alone is not invariant: q_x drifts once p_x != 0
    b = primary_constraints(hs0)
    b.status = "stabilized"
    init = {"x": 2, "y": 0, "z": 0, "v_x": 0, "v_y": 1, "v_z": 0, "p_x": 1, "p_y": 0, "p_z": 0,
            "q_y": 4, "q_z": 1, "u1": 0, "u2": 0, "v_y0": 1}
    with pytest.raises(ResidualBlowUp) as info:
        integrate(hs0, b, init)
    assert len(info.value.trajectory.times) > 1


def normal_single(cost):
    p = load_problem({"states": ["x"], "controls": ["u"], "vector_field": ["u"], "cost": cost})
    hs = build_hamiltonian(p, -1)
    (leaf,) = run_algorithm(hs).final()
    return p, hs, leaf


def test_zero_dynamics_constant():
    _, hs, leaf = normal_single("u^2/2")
    tr = integrate(hs, leaf, {"x": 0.75, "lam_x": 0.0}, (0, 1), 0.1)
    assert all(row == tr.samples[0] for row in tr.samples)


def test_single_integrator_line():
    _, hs, leaf = normal_single("u^2/2")
    tr = integrate(hs, leaf, {"x": 0.5, "lam_x": 1.25}, (0, 1), 1e-2)
    for k, t in enumerate(tr.times):
        row = tr.at(k)
        assert abs(row["u"] - 1.25) <= 1e-15
        assert abs(row["x"] - (0.5 + 1.25 * t)) <= 1e-13


def test_fourth_order_on_a_curved_solution():
    # x'' = x: x = a cosh t + b sinh t
    _, hs, leaf = normal_single("(u^2 + x^2)/2")
    a, b = 0.7, -0.4

    def err(h):
        tr = integrate(hs, leaf, {"x": a, "lam_x": b}, (0, 1), h)
        return abs(tr.at(len(tr.times) - 1)["x"] - (a * math.cosh(1) + b * math.sinh(1)))

    ratio = err(0.1) / err(0.05)
    assert 12 <= ratio <= 20


def test_endpoints_self_consistent():
    p = load_problem(SINGLE)
    hs = build_hamiltonian(p, -1)
    (leaf,) = run_algorithm(hs).final()
    tr = integrate(hs, leaf, {"x": 0.0, "lam_x": 1.0}, (0, 1), 0.25)
    assert verify_endpoints(tr, p, 0.0).passed
    tr2 = integrate(hs, leaf, {"x": 0.0, "lam_x": 1.001}, (0, 1), 0.25)
    rep = verify_endpoints(tr2, p, 1e-9)
    assert not rep.passed
    assert abs(rep.failures()[0][4] - 1e-3) < 1e-12


def test_dump_format(hs0, abnormal_leaf):
    tr = integrate(hs0, abnormal_leaf, tr3_init(2.0, 1.0, 1.0), (0, 1), 0.25)
    lines = tr.dump().splitlines()
    assert lines[0].split("\t")[0] == "t" and lines[0].endswith("residual\tH_drift")
    assert len(lines) == 6
    assert lines[1].split("\t")[0] == "0"
    assert tr.dump() == integrate(hs0, abnormal_leaf, tr3_init(2.0, 1.0, 1.0), (0, 1), 0.25).dump()


def test_initial_data_expressions():
    d = InitialData.load({"v_y": "v_y0", "v_z": "4*(1 - v_y0)", "p_z": "1/2"}, {"v_y0": 3})
    assert d.values == {"v_y": 3.0, "v_z": -8.0, "p_z": 0.5, "v_y0": 3.0}
    with pytest.raises(InitialDataError):
        InitialData.load({"y": "w + 1"}, {})


