"""Minimal free-format MPS reader used only to round-trip the writer."""

from qrelax.milp import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel
from qrelax.rational import to_rat

_SENSES = {"L": LE, "G": GE, "E": EQ}


def parse_mps(text):
    model = MilpModel()
    section = None
    row_sense = {}
    row_order = []
    columns = {}       # var -> {row: coef}
    obj = {}
    rhs = {}
    obj_rhs = 0.0
    bounds = {}
    kinds = {}
    in_integer = False
    order = []

    for raw in text.splitlines():
        line = raw.rstrip()
        if not line or line.startswith("*"):
            continue
        head = line.split()
        if head[0] == "NAME":
            model.name = head[1] if len(head) > 1 else "model"
            continue
        if head[0] in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES", "ENDATA"):
            section = head[0]
            continue
        if section == "ROWS":
            tag, name = head
            if tag == "N":
                continue
            row_sense[name] = _SENSES[tag]
            row_order.append(name)
        elif section == "COLUMNS":
            if len(head) >= 3 and head[1] == "'MARKER'":
                in_integer = head[2] == "'INTORG'"
                continue
            name = head[0]
            if name not in columns:
                columns[name] = {}
                kinds[name] = BINARY if in_integer else CONTINUOUS
                order.append(name)
            for rname, value in zip(head[1::2], head[2::2]):
                if rname == "OBJ":
                    obj[name] = obj.get(name, 0) + to_rat(float(value))
                else:
                    columns[name][rname] = columns[name].get(rname, 0) + to_rat(float(value))
        elif section == "RHS":
            for rname, value in zip(head[1::2], head[2::2]):
                if rname == "OBJ":
                    obj_rhs = to_rat(float(value))
                else:
                    rhs[rname] = to_rat(float(value))
        elif section == "BOUNDS":
            tag = head[0]
            name = head[2]
            value = to_rat(float(head[3])) if len(head) > 3 else None
            lo, hi = bounds.get(name, (to_rat(0), None))
            if tag == "BV":
                lo, hi = to_rat(0), to_rat(1)
            elif tag == "FR":
                lo, hi = None, None
            elif tag == "MI":
                lo = None
            elif tag == "FX":
                lo = hi = value
            elif tag == "LO":
                lo = value
            elif tag == "UP":
                hi = value
            bounds[name] = (lo, hi)

    ids = {}
    for name in order:
        lo, hi = bounds.get(name, (to_rat(0), None))
        ids[name] = model.add_var(name, lo, hi, kinds[name])
    for rname in row_order:
        coefs = {ids[v]: c for v, col in columns.items() for r, c in col.items()
                 if r == rname}
        model.add_row(coefs, row_sense[rname], rhs.get(rname, 0), rname)
    model.set_objective({ids[v]: c for v, c in obj.items() if c != 0}, -obj_rhs)
    return model
