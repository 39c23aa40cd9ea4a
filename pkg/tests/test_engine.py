import random
from fractions import Fraction

import pytest

from conftest import table
from presympmp.engine import (
    AlgorithmOptions,
    Branch,
    add_free_time_constraint,
    delete_zero_fiber,
    primary_constraints,
    run_algorithm,
    split_branch,
    stabilize_once,
)
from presympmp.hamiltonian import apply_XH, build_hamiltonian
from presympmp.model import load_problem
from presympmp.symexpr import Expr, Var, constraint_form, eval_at, parse, reduces_to_zero

PAPER_NF0 = ["q_x", "(1-x)*q_y + x^2*q_z", "p_x", "(-1+x)*p_y - x^2*p_z - v_x*q_y + 2*x*v_x*q_z",
             "x - 2", "v_x", "-q_y + 4*q_z", "p_y - 4*p_z", "u1"]


def single(cost="u^2/2", time=None, states=("x",), field=("u",)):
    d = {"states": list(states), "controls": ["u"], "vector_field": list(field), "cost": cost}
    if time:
        d["time"] = time
    return load_problem(d)


def exprs(problem, strs):
    t = table(problem)
    return [parse(s, t, strict=True) for s in strs]


def branch_gens(b):
    gens = [c.expr for c in b.equations]
    gens += [Expr((Expr.of(v) - e).num) for v, e in b.point_subst().items()]
    return gens


def test_primary_constraints(tr3, hs0, hs1):
    b0 = primary_constraints(hs0)
    assert [c.expr for c in b0.equations] == [constraint_form(e) for e in exprs(tr3, ["q_x", "(1-x)*q_y + x^2*q_z"])]
    assert [c.provenance() for c in b0.equations] == ["primary(1)", "primary(2)"]
    b1 = primary_constraints(hs1)
    want = [constraint_form(e) for e in exprs(tr3, ["q_x - u1", "(1-x)*q_y + x^2*q_z - u2"])]
    assert [c.expr for c in b1.equations] == want


def test_primary_single_integrator():
    hs = build_hamiltonian(single(), 0)
    b = primary_constraints(hs)
    assert [str(c.expr) for c in b.equations] == ["lam_x"]


def test_stabilize_once_tr3(tr3, hs0):
    b = primary_constraints(hs0)
    out = stabilize_once(hs0, b)
    (leaf,) = out.branches
    got = [constraint_form(e) for e in out.new_constraints]
    for want in exprs(tr3, ["p_x", "(-1+x)*p_y - x^2*p_z - v_x*q_y + 2*x*v_x*q_z"]):
        assert constraint_form(want) in got or any(reduces_to_zero(want, branch_gens(leaf)) for _ in [0])


def test_pinned_abnormal_chain(tr3, abnormal_tree, abnormal_leaf):
    assert abnormal_tree.status == "complete"
    leaf = abnormal_leaf
    gens = branch_gens(leaf)
    paper = exprs(tr3, PAPER_NF0)
    nz = leaf.nonzero()
    for e in paper:
        assert reduces_to_zero(e, gens, nz), e
    for g in gens:
        assert reduces_to_zero(g, paper, nz), g
    assert leaf.steps <= 5
    t = table(tr3)
    assert leaf.subst[Var("C_u1", "control-velocity")].is_zero()
    assert Var("u2", "control") not in leaf.subst
    assert "lambda != 0" in leaf.markers
    assert {str(q) for q in leaf.inequations} == {"x", "x - 1", "q_z", "u2"}
    assert t["x"] in leaf.subst


def test_normal_chain(tr3, normal_tree):
    (leaf,) = normal_tree.final()
    assert len(normal_tree.nodes) == 1
    want = [constraint_form(e) for e in exprs(tr3, ["q_x - u1", "(1-x)*q_y + x^2*q_z - u2"])]
    assert [c.expr for c in leaf.equations] == want
    assert leaf.constraint_steps == 0
    assert {v.name for v in leaf.solved_control_velocities} == {"C_u1", "C_u2"}
    assert {v.name for v in leaf.solved_controls} == {"u1", "u2"}


def test_single_integrator_abnormal_is_zero_fiber():
    tree = run_algorithm(build_hamiltonian(single(), 0))
    assert tree.final() == []
    assert any("zero fiber" in b.reason for b in tree.nodes.values())


def test_delete_zero_fiber_cases():
    p = single(states=("x", "y"), field=("u", "0"))
    hs = build_hamiltonian(p, 0)
    tree = run_algorithm(hs, AlgorithmOptions(zero_fiber=False))
    (leaf,) = tree.final()
    delete_zero_fiber(leaf, hs.chart)
    assert leaf.status == "stabilized" and "lambda != 0" in leaf.markers
    with pytest.raises(ValueError):
        delete_zero_fiber(leaf, build_hamiltonian(p, -1).chart)


def test_free_time_unit_cost():
    p = single(cost="1", time="free")
    assert run_algorithm(build_hamiltonian(p, -1)).final() == []
    t0 = run_algorithm(build_hamiltonian(p, 0))
    assert t0.final() == []
    assert t0.free_time


def test_add_free_time_constraint_direct():
    p = single(cost="1", time="free")
    hs = build_hamiltonian(p, -1)
    tree = run_algorithm(hs, AlgorithmOptions(free_time=False))
    (leaf,) = tree.final()
    out = add_free_time_constraint(hs, leaf)
    assert all(b.status == "empty" for b in out) or out == []
    assert leaf.status == "empty"


def test_free_time_tr3_no_diagnostic(hs0, tr3_pin):
    tree = run_algorithm(hs0, AlgorithmOptions(pins=(tr3_pin,), free_time=True))
    assert not any("X_H(H)" in d for d in tree.diagnostics)
    assert any("free-time-H" in c.provenance() for b in tree.nodes.values() for c in b.equations)


def test_budget_exhaustion(hs0):
    tree = run_algorithm(hs0, AlgorithmOptions(max_steps=1))
    assert tree.status == "budget-exhausted" and tree.diagnostics
    tree = run_algorithm(hs0, AlgorithmOptions(max_branches=2))
    assert tree.status == "budget-exhausted"


def _children_ok(tree):
    for b in tree.nodes.values():
        for cid in b.children:
            child = tree.nodes[cid]
            if child.status == "empty":
                continue
            gens = branch_gens(child)
            nz = child.nonzero()
            for g in branch_gens(b):
                assert reduces_to_zero(g, gens, nz)


def test_monotonicity_unpinned(hs0):
    tree = run_algorithm(hs0)
    assert tree.status == "complete"
    _children_ok(tree)


@pytest.mark.parametrize("which", ["abnormal", "normal"])
def test_stabilization_soundness_and_H_constancy(which, hs0, hs1, abnormal_leaf, normal_tree):
    hs, leaf = (hs0, abnormal_leaf) if which == "abnormal" else (hs1, normal_tree.final()[0])
    gens = branch_gens(leaf)
    nz = leaf.nonzero()
    for c in leaf.equations:
        r = leaf.reduce(apply_XH(hs, c.expr))
        assert reduces_to_zero(Expr(r.num), [g for _, g in leaf.residual], nz)
    dH = leaf.reduce(apply_XH(hs, hs.H))
    assert reduces_to_zero(Expr(dH.num), gens, nz)


def test_determinism(hs0, tr3_pin, abnormal_tree):
    again = run_algorithm(hs0, AlgorithmOptions(pins=(tr3_pin,)))
    assert again.to_dict() == abnormal_tree.to_dict()


# --- split coverage ---------------------------------------------------------

XS = [Var(n, "state") for n in ("a", "b", "c")]


def _rand_linear(rng):
    while True:
        coeffs = [rng.randint(-3, 3) for _ in XS]
        if any(coeffs):
            break
    e = Expr.const(rng.randint(-3, 3))
    for k, v in zip(coeffs, XS):
        e = e + k * Expr.of(v)
    return constraint_form(e)


def _on_factor(rng, f):
    v = next(w for w in XS if f.num.degree_in(w) == 1)
    pt = {w: Fraction(rng.randint(-30, 30), rng.randint(1, 7)) for w in XS if w != v}
    rest = eval_at(f, {**pt, v: 0})
    slope = eval_at(f, {**pt, v: 1}) - rest
    pt[v] = -rest / slope
    return pt


def _member(b, pt):
    if any(eval_at(g, pt) != 0 for g in branch_gens(b)):
        return False
    return all(eval_at(q, pt) != 0 for q in b.inequations)


@pytest.mark.parametrize("seed", range(20))
def test_split_coverage(seed):
    rng = random.Random(seed)
    factors = []
    while len(factors) < rng.randint(2, 3):
        f = _rand_linear(rng)
        if f not in factors:
            factors.append(f)
    product = Expr.const(1)
    for f in factors:
        product = product * f
    root = Branch("0")
    leaves = [b for b in split_branch(root, product) if b.status != "empty"]
    assert len(leaves) >= 1
    for _ in range(64):
        pt = _on_factor(rng, rng.choice(factors))
        assert eval_at(product, pt) == 0
        hits = sum(_member(b, pt) for b in leaves)
        assert hits == 1
