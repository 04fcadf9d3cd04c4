"""Whole-instance relaxation: substitute every quadratic term by an
auxiliary variable bound by the configured per-term relaxation.

Auxiliaries are shared aggressively: one sawtooth block or binary
expansion per variable, one p-block per unordered pair, one z variable
per quadratic pair.  That sharing is what the per-method binary-count
formulas assume on dense instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import model as qp
from .bilinear import (
    Method,
    SEPARABLE,
    SharedBlocks,
    emit_bilinear,
    emit_univariate,
)
from .milp import BINARY, CONTINUOUS, EQ, GE, LE, MilpError, MilpModel, solve_builtin, solve_external
from .rational import ZERO, rat


class CompileError(MilpError):
    pass


@dataclass
class TermMap:
    z_of_pair: dict = field(default_factory=dict)   # (i, j) -> z var id
    handles: dict = field(default_factory=dict)     # (i, j) -> TermHandle
    var_ids: dict = field(default_factory=dict)     # instance var index -> model var id


@dataclass
class RelaxationReport:
    method: str
    L: int
    L1: int
    n_binaries: int
    n_continuous: int
    n_rows: int
    n_terms: int
    predicted_binaries: int
    density: float
    dense: bool

    def to_json(self):
        return json.dumps(self.__dict__, indent=2)


def count_binaries(n, method, L):
    """Worst-case binary count on a dense instance with n quadratic variables."""
    method = Method(method)
    if method == Method.MCCORMICK:
        return 0
    if method in (Method.BIN2, Method.BIN3):
        # n variable blocks plus (n-1)^2/2 pair blocks
        return (n * n + 1) * L // 2
    return n * L


def _aggregate_density(prob):
    """Density of the union of quadratic supports over all forms."""
    n = prob.n_continuous()
    if n == 0:
        return 0.0
    support = set()
    for form in prob.forms():
        for i, j, c in form.quad:
            if c != 0:
                support.add((i, j))
    merged = qp.QuadraticForm([(i, j, rat(1)) for i, j in sorted(support)], {}, ZERO)
    return qp.density(merged, n)


def relax_problem(prob, cfg):
    """Compile an instance into a linear MIP plus term map and report."""
    model = MilpModel(prob.name)
    tmap = TermMap()

    fixed = {}
    for k, v in enumerate(prob.vars):
        if v.kind == qp.BINARY:
            tmap.var_ids[k] = model.add_var(v.name, 0, 1, BINARY)
        elif v.lb is not None and v.ub is not None and v.lb == v.ub:
            fixed[k] = v.lb
            tmap.var_ids[k] = model.add_var(v.name, v.lb, v.ub)
        else:
            tmap.var_ids[k] = model.add_var(v.name, v.lb, v.ub)

    for k in prob.quad_var_indices():
        v = prob.vars[k]
        if v.lb is None or v.ub is None:
            raise CompileError(f"quadratic variable {v.name!r} is unbounded")

    shared = SharedBlocks(model, cfg)

    def term_var(i, j):
        key = (i, j) if i <= j else (j, i)
        if key in tmap.z_of_pair:
            return tmap.z_of_pair[key]
        i, j = key
        vi, vj = prob.vars[i], prob.vars[j]
        xi, xj = tmap.var_ids[i], tmap.var_ids[j]
        z = model.add_var(f"z_{vi.name}_{vj.name}", None, None, origin="aux-z")
        tmap.z_of_pair[key] = z
        if i in fixed and j in fixed:
            model.add_row({z: 1}, EQ, fixed[i] * fixed[j], f"zfix_{vi.name}_{vj.name}")
        elif i in fixed:
            model.add_row({z: 1, xj: -fixed[i]}, EQ, 0, f"zfix_{vi.name}_{vj.name}")
        elif j in fixed:
            model.add_row({z: 1, xi: -fixed[j]}, EQ, 0, f"zfix_{vi.name}_{vj.name}")
        elif i == j:
            tmap.handles[key] = emit_univariate(model, xi, z, cfg, shared)
        else:
            tmap.handles[key] = emit_bilinear(model, xi, xj, z, cfg, shared)
        return z

    def linearize(form):
        coefs = {}
        for i, j, c in form.quad:
            z = term_var(i, j)
            coefs[z] = coefs.get(z, ZERO) + c
        for i, c in form.lin.items():
            vid = tmap.var_ids[i]
            coefs[vid] = coefs.get(vid, ZERO) + c
        return coefs, form.constant

    obj_coefs, obj_const = linearize(prob.objective)
    sense_map = {"<=": LE, ">=": GE, "==": EQ}
    for k, (form, sense, rhs) in enumerate(prob.constraints):
        coefs, const = linearize(form)
        model.add_row(coefs, sense_map[sense], rhs - const, f"con{k}")
    model.set_objective(obj_coefs, obj_const)

    dens = _aggregate_density(prob)
    nq = len(prob.quad_var_indices())
    report = RelaxationReport(
        method=cfg.method.value,
        L=cfg.L,
        L1=cfg.L1,
        n_binaries=model.n_binaries(),
        n_continuous=sum(1 for v in model.vars if v.kind == CONTINUOUS),
        n_rows=len(model.rows),
        n_terms=len(tmap.z_of_pair),
        predicted_binaries=count_binaries(nq, cfg.method, cfg.L),
        density=dens,
        dense=dens >= qp.DENSE_THRESHOLD,
    )
    return model, tmap, report


def dual_bound(prob, cfg, solver="builtin"):
    """Optimal value of the MIP relaxation; a valid lower bound for the
    minimization instance."""
    model, _, _ = relax_problem(prob, cfg)
    if solver == "builtin":
        result = solve_builtin(model)
    elif callable(solver):
        result = solver(model)
    else:
        result = solve_external(model, solver)
    if result.status != "optimal":
        raise CompileError(f"relaxation solve failed: {result.status}")
    return result.objective
