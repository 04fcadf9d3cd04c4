import random

import pytest

from qrelax.milp import (
    BINARY, EQ, GE, LE, ExternalSolverError, MilpModel,
    lp_relax, solve_builtin, solve_external, write_mps,
)
from qrelax.rational import rat
from qrelax.simplex import SizeLimitError, solve_lp

from conftest import brute_force_mip
from mps_reader import parse_mps


def small_model():
    m = MilpModel("small")
    x = m.add_var("x", 0, 1)
    y = m.add_var("y", 0, 1, kind=BINARY)
    m.add_row({x: 1, y: 1}, LE, 1, "cap")
    m.set_objective({x: -1, y: -2})
    return m, x, y


# -- MPS writer -----------------------------------------------------------

def test_mps_empty_model():
    text = write_mps(MilpModel("empty"))
    assert text.startswith("NAME empty")
    for section in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert section in text


def test_mps_binary_markers():
    m = MilpModel()
    m.add_var("b", kind=BINARY)
    text = write_mps(m)
    assert "'INTORG'" in text and "'INTEND'" in text
    assert " BV BND  b" in text
    assert text.index("'INTORG'") < text.index("b  OBJ") < text.index("'INTEND'")


def test_mps_single_row():
    m = MilpModel()
    x = m.add_var("x", 0, 1)
    y = m.add_var("y", 0, 1)
    m.add_row({x: 1, y: 1}, LE, 1, "r")
    m.set_objective({x: 1})
    text = write_mps(m)
    assert " L  r" in text
    assert text.count("  r  1.0") == 2


def test_mps_roundtrip():
    m = MilpModel("rt")
    x = m.add_var("x", rat(-1, 2), rat(3, 2))
    f = m.add_var("free", None, None)
    b = m.add_var("b", kind=BINARY)
    m.add_row({x: rat(1, 3), f: -1}, LE, rat(5, 4), "r1")
    m.add_row({x: 2, b: 1}, GE, 0, "r2")
    m.add_row({f: 1, b: -1}, EQ, rat(1, 8), "r3")
    m.set_objective({x: rat(7, 2), b: -1}, constant=rat(9, 8))
    back = parse_mps(write_mps(m))
    assert [(v.name, v.lb, v.ub, v.kind) for v in back.vars] == \
        [(v.name, v.lb, v.ub, v.kind) for v in m.vars]
    orig_rows = {(r.name, r.sense, r.rhs, tuple(sorted(r.coefs.items()))) for r in m.rows}
    back_rows = {(r.name, r.sense, r.rhs, tuple(sorted(r.coefs.items()))) for r in back.rows}
    assert orig_rows == back_rows
    assert back.obj_coefs == m.obj_coefs
    assert back.obj_constant == m.obj_constant


# -- lp_relax --------------------------------------------------------------

def test_lp_relax_drops_binaries():
    m = MilpModel()
    for k in range(3):
        m.add_var(f"b{k}", kind=BINARY)
    relaxed = lp_relax(m)
    assert relaxed.n_binaries() == 0
    assert len(relaxed.rows) == len(m.rows)


def test_lp_relax_idempotent():
    m, _, _ = small_model()
    once = lp_relax(m)
    twice = lp_relax(once)
    assert write_mps(once) == write_mps(twice)


def test_lp_relax_keeps_objective():
    m, _, _ = small_model()
    relaxed = lp_relax(m)
    assert relaxed.obj_coefs == m.obj_coefs
    assert relaxed.direction == m.direction


# -- builtin solver ---------------------------------------------------------

def test_builtin_max_of_two_lines():
    m = MilpModel()
    x = m.add_var("x", 0, 1)
    z = m.add_var("z", None, None)
    m.add_row({z: 1, x: -2}, GE, -1)
    m.add_row({z: 1}, GE, 0)
    m.add_row({x: 1}, EQ, rat(3, 4))
    m.set_objective({z: 1})
    res = solve_builtin(m)
    assert res.status == "optimal" and res.objective == rat(1, 2)


def test_builtin_integrality():
    m = MilpModel()
    x = m.add_var("x", kind=BINARY)
    m.add_row({x: 1}, GE, rat(3, 10))
    m.set_objective({x: 1})
    res = solve_builtin(m)
    assert res.objective == 1 and res.assignment[x] == 1


def test_builtin_infeasible():
    m = MilpModel()
    x = m.add_var("x", 0, 1)
    m.add_row({x: 0}, GE, 1)
    m.set_objective({x: 1})
    assert solve_builtin(m).status == "infeasible"


def test_builtin_respects_fixings():
    m, x, y = small_model()
    res = solve_builtin(m, fixings={y: 0})
    assert res.assignment[y] == 0 and res.objective == -1


def test_builtin_size_limit():
    m = MilpModel()
    for k in range(25):
        m.add_var(f"b{k}", kind=BINARY)
    m.set_objective({})
    with pytest.raises(SizeLimitError):
        solve_builtin(m)


def test_builtin_matches_bruteforce_on_random_models(rng):
    for trial in range(25):
        m = MilpModel(f"rnd{trial}")
        nb = rng.randint(1, 5)
        nc = rng.randint(1, 3)
        ids = [m.add_var(f"b{k}", kind=BINARY) for k in range(nb)]
        ids += [m.add_var(f"x{k}", 0, rng.randint(1, 3)) for k in range(nc)]
        # rows satisfied at an interior point, so always feasible
        point = {i: (rat(1, 2) if m.vars[i].kind == BINARY else rat(1, 4))
                 for i in ids}
        for r in range(rng.randint(1, 4)):
            coefs = {i: rat(rng.randint(-3, 3)) for i in ids if rng.random() < 0.7}
            if not coefs:
                continue
            act = sum(c * point[i] for i, c in coefs.items())
            m.add_row(coefs, LE, act + rng.randint(0, 2))
        m.set_objective({i: rat(rng.randint(-3, 3)) for i in ids})
        got = solve_builtin(m)
        want = brute_force_mip(m)
        assert got.status == "optimal"
        assert got.objective == want


def test_lp_bound_below_mip_on_random_models(rng):
    for trial in range(50):
        m = MilpModel(f"bnd{trial}")
        nb = rng.randint(1, 4)
        ids = [m.add_var(f"b{k}", kind=BINARY) for k in range(nb)]
        ids.append(m.add_var("x", 0, 2))
        for r in range(rng.randint(1, 3)):
            coefs = {i: rat(rng.randint(-2, 2)) for i in ids}
            m.add_row(coefs, LE, rng.randint(1, 4))
        m.set_objective({i: rat(rng.randint(-3, 3)) for i in ids})
        mip = solve_builtin(m)
        if mip.status != "optimal":
            continue
        lp = solve_lp(lp_relax(m))
        assert lp.objective <= mip.objective


# -- external bridge ---------------------------------------------------------

def test_external_fake_solver_zero_solution(tmp_path):
    m = MilpModel("ext")
    x = m.add_var("x", 0, 1)
    m.add_row({x: 1}, GE, 0)
    m.set_objective({x: 1}, constant=rat(7, 2))
    template = "grep -q ENDATA {mps} && printf 'x 0\\n# c\\n' > {sol}"
    res = solve_external(m, template)
    assert res.status == "optimal"
    assert res.objective == rat(7, 2)


def test_external_template_validation():
    m = MilpModel()
    m.add_var("x", 0, 1)
    with pytest.raises(ExternalSolverError, match="template"):
        solve_external(m, "solver --out {sol}")


def test_external_rejects_bound_violation():
    m = MilpModel()
    x = m.add_var("x", 0, 1)
    m.set_objective({x: 1})
    template = "true {mps} && printf 'x 1.001\\n' > {sol}"
    with pytest.raises(ExternalSolverError, match="rejected"):
        solve_external(m, template)


def test_external_rejects_row_violation():
    m = MilpModel()
    x = m.add_var("x", 0, 1)
    m.add_row({x: 1}, GE, rat(1, 2), "half")
    m.set_objective({x: 1})
    template = "true {mps} && printf 'x 0.25\\n' > {sol}"
    with pytest.raises(ExternalSolverError, match="rejected"):
        solve_external(m, template)


def test_external_nonzero_exit():
    m = MilpModel()
    m.add_var("x", 0, 1)
    with pytest.raises(ExternalSolverError, match="status"):
        solve_external(m, "cp {mps} /dev/null && false && touch {sol}")
