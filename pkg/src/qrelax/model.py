"""MIQCQP instances: parsing, validation and canonicalization.

An instance is a box-constrained quadratic program with optional binary
variables in the linear parts: minimize x'Qx + c'x subject to quadratic
rows and variable bounds.  Quadratic terms are restricted to continuous
variables with finite bounds, which is what every relaxation here needs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .rational import ZERO, to_rat

CONTINUOUS = "continuous"
BINARY = "binary"

SENSES = ("<=", ">=", "==")


class InstanceError(Exception):
    """Validation failure; `path` is the JSON path of the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class VarDecl:
    name: str
    lb: object
    ub: object
    kind: str = CONTINUOUS


@dataclass
class QuadraticForm:
    quad: list = field(default_factory=list)   # (i, j, coef) with i <= j
    lin: dict = field(default_factory=dict)    # var index -> coef
    constant: object = ZERO

    def value(self, point):
        total = self.constant
        for i, j, c in self.quad:
            total += c * point[i] * point[j]
        for i, c in self.lin.items():
            total += c * point[i]
        return total


@dataclass
class Miqcqp:
    name: str
    vars: list
    objective: QuadraticForm
    constraints: list  # (QuadraticForm, sense, rhs)

    def n_continuous(self):
        return sum(1 for v in self.vars if v.kind == CONTINUOUS)

    def quad_var_indices(self):
        used = set()
        for form in self.forms():
            for i, j, _ in form.quad:
                used.add(i)
                used.add(j)
        return sorted(used)

    def forms(self):
        yield self.objective
        for form, _, _ in self.constraints:
            yield form


def density(form, n):
    """Fraction of nonzero entries in the implied symmetric n x n matrix."""
    if n < 1:
        raise InstanceError("density needs at least one continuous variable")
    nonzero = 0
    for i, j, c in form.quad:
        if c != 0:
            nonzero += 1 if i == j else 2
    return nonzero / (n * n)


DENSE_THRESHOLD = 0.25


def is_dense(form, n):
    return density(form, n) >= DENSE_THRESHOLD


def _canonical_quad(entries, vars_, path):
    merged = {}
    for k, (i, j, coef) in enumerate(entries):
        for pos, idx in ((0, i), (1, j)):
            if vars_[idx].kind != CONTINUOUS:
                raise InstanceError(
                    "quadratic term on non-continuous variable", f"{path}/quad/{k}/{pos}")
            if vars_[idx].lb is None or vars_[idx].ub is None:
                raise InstanceError(
                    f"quadratic variable {vars_[idx].name!r} must have finite bounds",
                    f"{path}/quad/{k}/{pos}")
        key = (i, j) if i <= j else (j, i)
        merged[key] = merged.get(key, ZERO) + coef
    return [(i, j, c) for (i, j), c in sorted(merged.items()) if c != 0]


def _parse_form(obj, by_name, vars_, path):
    if obj is None:
        return QuadraticForm()
    if not isinstance(obj, dict):
        raise InstanceError("form must be an object", path)
    entries = []
    for k, item in enumerate(obj.get("quad", [])):
        if not (isinstance(item, (list, tuple)) and len(item) == 3):
            raise InstanceError("quad entry must be [var, var, coef]", f"{path}/quad/{k}")
        a, b, coef = item
        for pos, name in ((0, a), (1, b)):
            if name not in by_name:
                raise InstanceError(f"unknown variable {name!r}", f"{path}/quad/{k}/{pos}")
        entries.append((by_name[a], by_name[b], _number(coef, f"{path}/quad/{k}/2")))
    lin = {}
    for name, coef in obj.get("lin", {}).items():
        if name not in by_name:
            raise InstanceError(f"unknown variable {name!r}", f"{path}/lin/{name}")
        idx = by_name[name]
        lin[idx] = lin.get(idx, ZERO) + _number(coef, f"{path}/lin/{name}")
    lin = {i: c for i, c in sorted(lin.items()) if c != 0}
    constant = _number(obj.get("constant", 0), f"{path}/constant")
    return QuadraticForm(_canonical_quad(entries, vars_, path), lin, constant)


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise InstanceError(f"expected a number, got {value!r}", path)
    try:
        return to_rat(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceError(str(exc), path)


def _bound(value, path):
    if value is None:
        return None
    if isinstance(value, float) and math.isinf(value):
        return None
    return _number(value, path)


def parse_instance(text):
    """Parse and canonicalize an instance from its JSON document."""
    try:
        doc = json.loads(text) if isinstance(text, (str, bytes)) else text
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceError("top-level document must be an object")

    vars_ = []
    by_name = {}
    for k, vobj in enumerate(doc.get("variables", [])):
        path = f"/variables/{k}"
        if not isinstance(vobj, dict) or "name" not in vobj:
            raise InstanceError("variable needs a name", path)
        name = vobj["name"]
        if name in by_name:
            raise InstanceError(f"duplicate variable {name!r}", f"{path}/name")
        kind = vobj.get("kind", CONTINUOUS)
        if kind not in (CONTINUOUS, BINARY):
            raise InstanceError(f"unknown kind {kind!r}", f"{path}/kind")
        if kind == BINARY:
            lb = _bound(vobj.get("lb", 0), f"{path}/lb")
            ub = _bound(vobj.get("ub", 1), f"{path}/ub")
            if lb != 0 or ub != 1:
                raise InstanceError("binary variables must have bounds [0,1]", f"{path}/lb")
        else:
            lb = _bound(vobj.get("lb"), f"{path}/lb")
            ub = _bound(vobj.get("ub"), f"{path}/ub")
        if lb is not None and ub is not None and lb > ub:
            raise InstanceError("lb > ub", f"{path}/lb")
        by_name[name] = len(vars_)
        vars_.append(VarDecl(name, lb, ub, kind))

    objective = _parse_form(doc.get("objective"), by_name, vars_, "/objective")
    constraints = []
    for k, cobj in enumerate(doc.get("constraints", [])):
        path = f"/constraints/{k}"
        if not isinstance(cobj, dict):
            raise InstanceError("constraint must be an object", path)
        sense = cobj.get("sense", "<=")
        if sense not in SENSES:
            raise InstanceError(f"unknown sense {sense!r}", f"{path}/sense")
        form = _parse_form(cobj.get("form"), by_name, vars_, f"{path}/form")
        rhs = _number(cobj.get("rhs", 0), f"{path}/rhs")
        constraints.append((form, sense, rhs))

    return Miqcqp(doc.get("name", "instance"), vars_, objective, constraints)


def _form_to_json(form, vars_):
    return {
        "quad": [[vars_[i].name, vars_[j].name, float(c)] for i, j, c in form.quad],
        "lin": {vars_[i].name: float(c) for i, c in form.lin.items()},
        "constant": float(form.constant),
    }


def instance_to_json(prob):
    """Serialize back to the instance schema (canonical field order)."""
    doc = {
        "name": prob.name,
        "variables": [
            {
                "name": v.name,
                "lb": None if v.lb is None else float(v.lb),
                "ub": None if v.ub is None else float(v.ub),
                "kind": v.kind,
            }
            for v in prob.vars
        ],
        "objective": _form_to_json(prob.objective, prob.vars),
        "constraints": [
            {"form": _form_to_json(f, prob.vars), "sense": s, "rhs": float(r)}
            for f, s, r in prob.constraints
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=False)
