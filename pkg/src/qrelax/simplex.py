"""Exact rational two-phase simplex and small-scale branch and bound.

Rows are kept as sparse dicts because emitted relaxations touch only a
handful of variables per row; pivots then cost O(nnz(col) * nnz(row))
instead of O(m*n).  Bland's rule is used throughout, so no cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

from .milp import BINARY, EQ, GE, INFEASIBLE, LE, MAX, MIN, OPTIMAL, UNBOUNDED, MilpError, SolveResult
from .rational import ZERO, rat

MAX_BRANCH_BINARIES = 24


class SizeLimitError(MilpError):
    pass


@dataclass
class _Standard:
    rows: list          # list of dict col -> rat
    rhs: list           # list of rat, all >= 0
    n_cols: int
    artificial_from: int
    # mapping back to model variables: var index -> ("shift", col, lb) |
    # ("neg", col, ub) | ("split", col_plus, col_minus) | ("fixed", value)
    var_map: dict


def _build_standard(model, overrides):
    """Rewrite bounded/free variables into nonnegative columns."""
    rows = []
    rhs = []
    var_map = {}
    col = 0
    # substitution constants per model var folded into row rhs later
    sub_const = {}
    sub_cols = {}  # var -> list of (col, sign)

    bound_rows = []  # (col, upper_value) for ub rows added after substitution
    for i, v in enumerate(model.vars):
        lb, ub = overrides.get(i, (v.lb, v.ub))
        if lb is not None and ub is not None and lb > ub:
            return None  # trivially infeasible node
        if lb is not None and ub is not None and lb == ub:
            var_map[i] = ("fixed", lb)
            sub_const[i] = lb
            sub_cols[i] = []
            continue
        if lb is not None:
            var_map[i] = ("shift", col, lb)
            sub_const[i] = lb
            sub_cols[i] = [(col, rat(1))]
            if ub is not None:
                bound_rows.append((col, ub - lb))
            col += 1
        elif ub is not None:
            var_map[i] = ("neg", col, ub)
            sub_const[i] = ub
            sub_cols[i] = [(col, rat(-1))]
            col += 1
        else:
            var_map[i] = ("split", col, col + 1)
            sub_const[i] = ZERO
            sub_cols[i] = [(col, rat(1)), (col + 1, rat(-1))]
            col += 2

    structural = col

    def expand(coefs):
        out = {}
        shift = ZERO
        for i, c in coefs.items():
            shift += c * sub_const[i]
            for cc, sign in sub_cols[i]:
                val = out.get(cc, ZERO) + c * sign
                if val == 0:
                    out.pop(cc, None)
                else:
                    out[cc] = val
        return out, shift

    # structural rows with slack/surplus
    pending = []
    for row in model.rows:
        coefs, shift = expand(row.coefs)
        b = row.rhs - shift
        pending.append((coefs, row.sense, b))
    for ccol, upper in bound_rows:
        pending.append(({ccol: rat(1)}, LE, upper))

    slack_basis = {}
    for coefs, sense, b in pending:
        if sense == LE:
            coefs = dict(coefs)
            coefs[col] = rat(1)
            slack = col
            col += 1
        elif sense == GE:
            coefs = dict(coefs)
            coefs[col] = rat(-1)
            slack = None
            col += 1
        else:
            coefs = dict(coefs)
            slack = None
        if b < 0:
            coefs = {c: -v for c, v in coefs.items()}
            b = -b
            slack = None  # slack coefficient became -1
        if not coefs and b != 0:
            return None  # 0 == nonzero: infeasible
        if not coefs:
            continue
        rows.append(coefs)
        rhs.append(b)
        if slack is not None:
            slack_basis[len(rows) - 1] = slack

    std = _Standard(rows, rhs, col, col, var_map)
    std._slack_basis = slack_basis
    std._structural = structural
    return std


def _pivot(rows, rhs, cost, basis, r, e):
    prow = rows[r]
    pval = prow[e]
    if pval != 1:
        inv = 1 / pval
        rows[r] = prow = {c: v * inv for c, v in prow.items()}
        rhs[r] = rhs[r] * inv
    for i, row in enumerate(rows):
        if i == r:
            continue
        factor = row.get(e)
        if factor is None or factor == 0:
            continue
        for c, v in prow.items():
            nv = row.get(c, ZERO) - factor * v
            if nv == 0:
                row.pop(c, None)
            else:
                row[c] = nv
        rhs[i] = rhs[i] - factor * rhs[r]
    cfac = cost.get(e)
    if cfac:
        for c, v in prow.items():
            nv = cost.get(c, ZERO) - cfac * v
            if nv == 0:
                cost.pop(c, None)
            else:
                cost[c] = nv
    basis[r] = e


def _iterate(rows, rhs, cost, basis, banned=frozenset()):
    """Run Bland simplex to optimality. Returns 'optimal' or 'unbounded'."""
    while True:
        entering = None
        for c, v in cost.items():
            if v < 0 and c not in banned and (entering is None or c < entering):
                entering = c
        if entering is None:
            return "optimal"
        leaving = None
        best_ratio = None
        for i, row in enumerate(rows):
            a = row.get(entering)
            if a is not None and a > 0:
                ratio = rhs[i] / a
                if best_ratio is None or ratio < best_ratio or (
                        ratio == best_ratio and basis[i] < basis[leaving]):
                    best_ratio = ratio
                    leaving = i
        if leaving is None:
            return "unbounded"
        _pivot(rows, rhs, cost, basis, leaving, entering)


@dataclass
class LpSolution:
    status: str
    objective: object = None
    values: dict = None


def solve_lp(model, overrides=None):
    """Exact LP optimum of the model (binary kinds treated as bounds)."""
    overrides = overrides or {}
    std = _build_standard(model, overrides)
    if std is None:
        return LpSolution(INFEASIBLE)
    rows, rhs = std.rows, std.rhs
    n = std.n_cols
    basis = [None] * len(rows)

    # phase 1: artificial columns where no slack can serve as basis
    cost = {}
    art_cols = []
    z_needed = False
    for i in range(len(rows)):
        slack = std._slack_basis.get(i)
        if slack is not None:
            basis[i] = slack
            continue
        rows[i][n] = rat(1)
        basis[i] = n
        art_cols.append(n)
        n += 1
        z_needed = True
        for c, v in rows[i].items():
            if c in art_cols:
                continue
            nv = cost.get(c, ZERO) - v
            if nv == 0:
                cost.pop(c, None)
            else:
                cost[c] = nv
    if z_needed:
        art_set = set(art_cols)
        _iterate(rows, rhs, cost, basis, banned=art_set)
        infeas = sum((rhs[i] for i in range(len(rows)) if basis[i] in art_set), ZERO)
        if infeas != 0:
            return LpSolution(INFEASIBLE)
        # drive leftover zero-level artificials out of the basis
        for i in range(len(rows)):
            if basis[i] in art_set:
                pivot_col = None
                for c in rows[i]:
                    if c not in art_set and rows[i][c] != 0:
                        pivot_col = c if pivot_col is None or c < pivot_col else pivot_col
                if pivot_col is not None:
                    _pivot(rows, rhs, cost, basis, i, pivot_col)
        keep = [i for i in range(len(rows)) if basis[i] not in art_set]
        rows[:] = [rows[i] for i in keep]
        rhs[:] = [rhs[i] for i in keep]
        basis[:] = [basis[i] for i in keep]
        for row in rows:
            for c in art_cols:
                row.pop(c, None)

    # phase 2 objective in standard columns (constants do not affect pivoting)
    obj = {}
    sign = rat(1) if model.direction == MIN else rat(-1)
    for i, c in model.obj_coefs.items():
        kind = std.var_map[i]
        if kind[0] == "fixed":
            continue
        if kind[0] == "shift":
            obj[kind[1]] = obj.get(kind[1], ZERO) + sign * c
        elif kind[0] == "neg":
            obj[kind[1]] = obj.get(kind[1], ZERO) - sign * c
        else:
            obj[kind[1]] = obj.get(kind[1], ZERO) + sign * c
            obj[kind[2]] = obj.get(kind[2], ZERO) - sign * c

    cost = dict(obj)
    for i, b in enumerate(basis):
        cb = obj.get(b)
        if cb:
            for c, v in rows[i].items():
                nv = cost.get(c, ZERO) - cb * v
                if nv == 0:
                    cost.pop(c, None)
                else:
                    cost[c] = nv

    status = _iterate(rows, rhs, cost, basis)
    if status == "unbounded":
        return LpSolution(UNBOUNDED)

    col_val = {}
    for i, b in enumerate(basis):
        col_val[b] = rhs[i]

    values = {}
    for i in range(len(model.vars)):
        kind = std.var_map[i]
        if kind[0] == "fixed":
            values[i] = kind[1]
        elif kind[0] == "shift":
            values[i] = kind[2] + col_val.get(kind[1], ZERO)
        elif kind[0] == "neg":
            values[i] = kind[2] - col_val.get(kind[1], ZERO)
        else:
            values[i] = col_val.get(kind[1], ZERO) - col_val.get(kind[2], ZERO)

    objective = model.objective_value(values)
    return LpSolution(OPTIMAL, objective, values)


def branch_and_bound(model, fixings=None):
    """Exact MIP optimum: DFS over binaries in declaration order, 0 first.

    Nodes are pruned against the incumbent by their exact LP bound; a node
    whose LP optimum is already integral in the remaining binaries closes
    immediately.  Ties keep the first incumbent found, so reports are
    reproducible; the objective value itself is unique.
    """
    fixings = dict(fixings or {})
    for i, val in fixings.items():
        if model.vars[i].kind != BINARY:
            raise MilpError(f"fixing on non-binary variable {model.vars[i].name}")
        if val not in (0, 1):
            raise MilpError("fixings must be 0 or 1")

    base_overrides = {i: (rat(v), rat(v)) for i, v in fixings.items()}
    free_bins = [i for i in model.binaries() if i not in fixings]
    if len(free_bins) > MAX_BRANCH_BINARIES:
        raise SizeLimitError(
            f"{len(free_bins)} free binaries exceeds the builtin limit of {MAX_BRANCH_BINARIES}")

    minimize = model.direction == MIN
    best = [None]  # LpSolution
    saw_unbounded = [False]

    def better(a, b):
        return a < b if minimize else a > b

    def descend(depth, overrides):
        res = solve_lp(model, overrides)
        if res.status == INFEASIBLE:
            return
        if res.status == UNBOUNDED:
            if depth == len(free_bins):
                saw_unbounded[0] = True
                return
        else:
            if best[0] is not None and not better(res.objective, best[0].objective):
                return
            integral = all(res.values[b] in (0, 1) for b in free_bins[depth:])
            if integral:
                best[0] = res
                return
        var = free_bins[depth]
        for branch in (0, 1):
            overrides[var] = (rat(branch), rat(branch))
            descend(depth + 1, overrides)
            del overrides[var]

    descend(0, dict(base_overrides))
    if saw_unbounded[0]:
        return SolveResult(UNBOUNDED)
    if best[0] is None:
        return SolveResult(INFEASIBLE)
    return SolveResult(OPTIMAL, best[0].objective, best[0].values)
