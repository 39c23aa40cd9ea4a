import sys
from pathlib import Path

import pytest

from presympmp.engine import AlgorithmOptions, run_algorithm
from presympmp.hamiltonian import build_hamiltonian
from presympmp.model import load_problem, momentum_vars, parse_pin

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"
TR3 = PROBLEMS / "control_affine_tr3.json"
TR3_CURVE = PROBLEMS / "control_affine_tr3_curve.json"
TR3_INIT = PROBLEMS / "control_affine_tr3_init.json"
SINGLE = PROBLEMS / "single_integrator.json"
SINGLE_FREE = PROBLEMS / "single_integrator_free.json"
PIN = "x*(x-1)*q_z*u2 != 0"


def table(problem):
    t = dict(problem.table())
    t.update({v.name: v for v in momentum_vars(problem)})
    return t


@pytest.fixture(scope="session")
def tr3():
    return load_problem(TR3)


@pytest.fixture(scope="session")
def tr3_table(tr3):
    return table(tr3)


@pytest.fixture(scope="session")
def tr3_pin(tr3_table):
    return parse_pin(PIN, tr3_table)


@pytest.fixture(scope="session")
def hs0(tr3):
    return build_hamiltonian(tr3, 0)


@pytest.fixture(scope="session")
def hs1(tr3):
    return build_hamiltonian(tr3, -1)


@pytest.fixture(scope="session")
def abnormal_tree(hs0, tr3_pin):
    return run_algorithm(hs0, AlgorithmOptions(pins=(tr3_pin,)))


@pytest.fixture(scope="session")
def abnormal_leaf(abnormal_tree):
    (leaf,) = abnormal_tree.final()
    return leaf


@pytest.fixture(scope="session")
def normal_tree(hs1):
    return run_algorithm(hs1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
