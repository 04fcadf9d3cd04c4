"""Linear MIP model IR, MPS writer and solver bridges.

The IR is deliberately small: a flat variable list, sparse rows and a
sparse objective, everything stored as exact rationals.  Emitters mutate
a model while it is being built; afterwards it is treated as immutable,
so independent solves can share one model freely.
"""

from __future__ import annotations

import os
import subprocess
import tempfile
from dataclasses import dataclass, field

from .rational import ZERO, rat, to_rat

CONTINUOUS = "continuous"
BINARY = "binary"

LE = "<="
GE = ">="
EQ = "=="

MIN = "min"
MAX = "max"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

#: provenance tags for auxiliary variables
ORIGINS = (
    "original", "aux-g", "aux-alpha", "aux-beta", "aux-u", "aux-v",
    "aux-delta", "aux-z", "aux-p", "aux-hat",
)


class MilpError(Exception):
    pass


class ExternalSolverError(MilpError):
    pass


@dataclass
class MilpVar:
    name: str
    lb: object  # rational or None for -inf
    ub: object  # rational or None for +inf
    kind: str = CONTINUOUS
    origin: str = "original"

    def __post_init__(self):
        if self.kind == BINARY:
            if self.lb is None or self.ub is None or not (0 <= self.lb and self.ub <= 1):
                raise MilpError(f"binary variable {self.name} must have bounds within [0,1]")
        if self.lb is not None and self.ub is not None and self.lb > self.ub:
            raise MilpError(f"variable {self.name}: lb > ub")
        if self.origin not in ORIGINS:
            raise MilpError(f"variable {self.name}: unknown origin tag {self.origin!r}")


@dataclass
class Row:
    coefs: dict  # var index -> rational
    sense: str
    rhs: object
    name: str = ""


@dataclass
class SolveResult:
    status: str
    objective: object = None
    assignment: dict = field(default_factory=dict)


class MilpModel:
    def __init__(self, name="model"):
        self.name = name
        self.vars: list[MilpVar] = []
        self.rows: list[Row] = []
        self.obj_coefs: dict = {}
        self.obj_constant = ZERO
        self.direction = MIN

    # -- construction ---------------------------------------------------

    def add_var(self, name, lb=ZERO, ub=None, kind=CONTINUOUS, origin="original"):
        lb = None if lb is None else to_rat(lb)
        ub = None if ub is None else to_rat(ub)
        if kind == BINARY:
            lb = rat(0) if lb is None else lb
            ub = rat(1) if ub is None else ub
        self.vars.append(MilpVar(name, lb, ub, kind, origin))
        return len(self.vars) - 1

    def add_row(self, coefs, sense, rhs, name=""):
        if sense not in (LE, GE, EQ):
            raise MilpError(f"bad row sense {sense!r}")
        clean = {}
        for idx, c in coefs.items():
            if not 0 <= idx < len(self.vars):
                raise MilpError(f"row {name!r} references undeclared variable {idx}")
            c = to_rat(c)
            if c != 0:
                clean[idx] = c
        self.rows.append(Row(clean, sense, to_rat(rhs), name or f"r{len(self.rows)}"))
        return len(self.rows) - 1

    def set_objective(self, coefs, constant=ZERO, direction=MIN):
        self.obj_coefs = {i: to_rat(c) for i, c in coefs.items() if to_rat(c) != 0}
        self.obj_constant = to_rat(constant)
        self.direction = direction

    def add_objective_term(self, idx, coef):
        self.obj_coefs[idx] = self.obj_coefs.get(idx, ZERO) + to_rat(coef)
        if self.obj_coefs[idx] == 0:
            del self.obj_coefs[idx]

    # -- queries ---------------------------------------------------------

    def binaries(self):
        return [i for i, v in enumerate(self.vars) if v.kind == BINARY]

    def n_binaries(self):
        return len(self.binaries())

    def objective_value(self, assignment):
        total = self.obj_constant
        for i, c in self.obj_coefs.items():
            total += c * assignment.get(i, ZERO)
        return total

    def row_activity(self, row, assignment):
        return sum((c * assignment.get(i, ZERO) for i, c in row.coefs.items()), ZERO)

    def check_assignment(self, assignment, tol=ZERO):
        """Return list of (kind, name, violation) entries above tol."""
        bad = []
        for i, v in enumerate(self.vars):
            x = assignment.get(i, ZERO)
            if v.lb is not None and v.lb - x > tol:
                bad.append(("bound", v.name, v.lb - x))
            if v.ub is not None and x - v.ub > tol:
                bad.append(("bound", v.name, x - v.ub))
            if v.kind == BINARY:
                frac = min(abs(x), abs(1 - x))
                if frac > tol:
                    bad.append(("integrality", v.name, frac))
        for row in self.rows:
            act = self.row_activity(row, assignment)
            if row.sense == LE and act - row.rhs > tol:
                bad.append(("row", row.name, act - row.rhs))
            elif row.sense == GE and row.rhs - act > tol:
                bad.append(("row", row.name, row.rhs - act))
            elif row.sense == EQ and abs(act - row.rhs) > tol:
                bad.append(("row", row.name, abs(act - row.rhs)))
        return bad


def lp_relax(model):
    """Copy of the model with every binary relaxed to continuous [0,1]."""
    relaxed = MilpModel(model.name)
    for v in model.vars:
        kind = CONTINUOUS if v.kind == BINARY else v.kind
        relaxed.add_var(v.name, v.lb, v.ub, kind, v.origin)
    for row in model.rows:
        relaxed.add_row(dict(row.coefs), row.sense, row.rhs, row.name)
    relaxed.set_objective(dict(model.obj_coefs), model.obj_constant, model.direction)
    return relaxed


# -- MPS writer ----------------------------------------------------------

def _num(value):
    """Shortest decimal that round-trips to the stored double."""
    return repr(float(value))


def write_mps(model):
    lines = [f"NAME {model.name}", "ROWS", " N  OBJ"]
    sense_tag = {LE: "L", GE: "G", EQ: "E"}
    for row in model.rows:
        lines.append(f" {sense_tag[row.sense]}  {row.name}")
    lines.append("COLUMNS")
    marker_count = 0
    for i, v in enumerate(model.vars):
        entries = []
        if i in model.obj_coefs:
            entries.append(("OBJ", model.obj_coefs[i]))
        for row in model.rows:
            if i in row.coefs:
                entries.append((row.name, row.coefs[i]))
        if v.kind == BINARY:
            lines.append(f"    MARKER{marker_count}  'MARKER'  'INTORG'")
        for rname, coef in entries:
            lines.append(f"    {v.name}  {rname}  {_num(coef)}")
        if not entries:
            # MPS requires every column to appear; emit a zero objective entry
            lines.append(f"    {v.name}  OBJ  0.0")
        if v.kind == BINARY:
            lines.append(f"    MARKER{marker_count + 1}  'MARKER'  'INTEND'")
            marker_count += 2
    lines.append("RHS")
    for row in model.rows:
        if row.rhs != 0:
            lines.append(f"    RHS  {row.name}  {_num(row.rhs)}")
    if model.obj_constant != 0:
        lines.append(f"    RHS  OBJ  {_num(-model.obj_constant)}")
    lines.append("BOUNDS")
    for v in model.vars:
        if v.kind == BINARY:
            lines.append(f" BV BND  {v.name}")
            continue
        if v.lb is None and v.ub is None:
            lines.append(f" FR BND  {v.name}")
            continue
        if v.lb is not None and v.ub is not None and v.lb == v.ub:
            lines.append(f" FX BND  {v.name}  {_num(v.lb)}")
            continue
        if v.lb is None:
            lines.append(f" MI BND  {v.name}")
        elif v.lb != 0:
            lines.append(f" LO BND  {v.name}  {_num(v.lb)}")
        if v.ub is not None:
            lines.append(f" UP BND  {v.name}  {_num(v.ub)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def write_lp_debug(model):
    """Human-readable dump; debug format only, no compatibility promise."""
    out = [f"\\ {model.name}", f"{model.direction}imize" if model.direction == MIN else "maximize"]
    terms = " + ".join(f"{_num(c)} {model.vars[i].name}" for i, c in model.obj_coefs.items())
    out.append(f"  obj: {terms or '0'} + {_num(model.obj_constant)}")
    out.append("subject to")
    for row in model.rows:
        lhs = " + ".join(f"{_num(c)} {model.vars[i].name}" for i, c in row.coefs.items())
        out.append(f"  {row.name}: {lhs or '0'} {row.sense} {_num(row.rhs)}")
    out.append("bounds")
    for v in model.vars:
        lo = "-inf" if v.lb is None else _num(v.lb)
        hi = "+inf" if v.ub is None else _num(v.ub)
        out.append(f"  {lo} <= {v.name} <= {hi}  [{v.kind}]")
    return "\n".join(out) + "\n"


# -- builtin exact solve (engine lives in simplex.py) ---------------------

def solve_builtin(model, fixings=None):
    from .simplex import branch_and_bound

    return branch_and_bound(model, fixings or {})


# -- external file-based solver bridge ------------------------------------

SOLVER_CMD_ENV = "RELAX_SOLVER_CMD"
EXTERNAL_TOL = to_rat(1e-6)


def solve_external(model, cmd_template=None, keep_files=False):
    """Write MPS, invoke `cmd_template` and read back a 'name value' file.

    The template must contain {mps} and {sol} placeholders.  The returned
    solution is rejected if it violates any row or bound by more than 1e-6.
    """
    template = cmd_template or os.environ.get(SOLVER_CMD_ENV)
    if not template:
        raise ExternalSolverError("no solver command template configured")
    if "{mps}" not in template or "{sol}" not in template:
        raise ExternalSolverError("solver template must contain {mps} and {sol}")

    tmpdir = tempfile.mkdtemp(prefix="qrelax_")
    mps_path = os.path.join(tmpdir, "model.mps")
    sol_path = os.path.join(tmpdir, "model.sol")
    with open(mps_path, "w") as fh:
        fh.write(write_mps(model))
    cmd = template.format(mps=mps_path, sol=sol_path)
    proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
    if proc.returncode != 0:
        raise ExternalSolverError(f"solver exited with status {proc.returncode}: {proc.stderr.strip()}")
    try:
        with open(sol_path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ExternalSolverError(f"no solution file produced: {exc}") from exc

    by_name = {v.name: i for i, v in enumerate(model.vars)}
    assignment = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ExternalSolverError(f"unparsable solution line {lineno}: {line!r}")
        name, value = parts
        if name not in by_name:
            raise ExternalSolverError(f"unparsable solution: unknown variable {name!r}")
        try:
            assignment[by_name[name]] = to_rat(float(value))
        except ValueError as exc:
            raise ExternalSolverError(f"unparsable solution value on line {lineno}") from exc

    violations = model.check_assignment(assignment, tol=EXTERNAL_TOL)
    if violations:
        kind, name, amount = violations[0]
        raise ExternalSolverError(
            f"external solution rejected: {kind} {name} violated by {float(amount):g}")
    if not keep_files:
        for path in (mps_path, sol_path):
            try:
                os.unlink(path)
            except OSError:
                pass
        try:
            os.rmdir(tmpdir)
        except OSError:
            pass
    return SolveResult(OPTIMAL, model.objective_value(assignment), assignment)
