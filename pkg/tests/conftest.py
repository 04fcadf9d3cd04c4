"""Shared fixtures and generators for the test suite."""

import itertools
import random

import numpy as np
import pytest

from qrelax import model as qp
from qrelax.milp import MilpModel
from qrelax.rational import rat
from qrelax.simplex import solve_lp


def make_boxqp(rng, n, pair_prob=0.5, diag_prob=0.8, bound_kinds=((0, 1), (-1, 1), (0, 2)),
               name="boxqp", max_blocks=None):
    """Random box-constrained QP with dyadic data.

    `max_blocks` caps |quad vars| + |off-diagonal pairs| so that every
    relaxation stays within the builtin solver's branching budget.
    """
    while True:
        variables = []
        for i in range(n):
            lb, ub = bound_kinds[rng.randrange(len(bound_kinds))]
            variables.append({"name": f"x{i}", "lb": lb, "ub": ub})
        quad = []
        for i in range(n):
            if rng.random() < diag_prob:
                quad.append([f"x{i}", f"x{i}", rng.randint(-2, 2)])
        pairs = 0
        for i, j in itertools.combinations(range(n), 2):
            if rng.random() < pair_prob:
                quad.append([f"x{i}", f"x{j}", rng.randint(-2, 2)])
                pairs += 1
        quad = [t for t in quad if t[2] != 0]
        if not quad:
            continue
        used = {v for t in quad for v in t[:2]}
        if max_blocks is not None and len(used) + pairs > max_blocks:
            continue
        lin = {f"x{i}": rng.randint(-2, 2) for i in range(n) if rng.random() < 0.5}
        doc = {"name": name, "variables": variables,
               "objective": {"quad": quad, "lin": lin, "constant": 0}}
        return qp.parse_instance(doc)


def dense_boxqp(n, seed=0):
    """All diagonals plus (n-1)^2/2 off-diagonal pairs (n odd): the support
    whose per-method binary counts hit the worst-case formulas exactly."""
    assert n % 2 == 1, "pair count (n-1)^2/2 must be integral"
    rng = random.Random(seed)
    variables = [{"name": f"x{i}", "lb": 0, "ub": 1} for i in range(n)]
    quad = [[f"x{i}", f"x{i}", rng.choice([-2, -1, 1, 2])] for i in range(n)]
    wanted = (n - 1) ** 2 // 2
    pairs = list(itertools.combinations(range(n), 2))
    rng.shuffle(pairs)
    for i, j in pairs[:wanted]:
        quad.append([f"x{i}", f"x{j}", rng.choice([-2, -1, 1, 2])])
    doc = {"name": f"dense{n}", "variables": variables,
           "objective": {"quad": quad}}
    return qp.parse_instance(doc)


def grid_minimum(prob, grid_exp=7):
    """Brute-force minimum of the objective over the box grid (floats)."""
    n = len(prob.vars)
    axes = []
    for v in prob.vars:
        lo, hi = float(v.lb), float(v.ub)
        axes.append(np.linspace(lo, hi, (1 << grid_exp) + 1))
    best = np.inf
    form = prob.objective
    # vectorize over the last two axes, loop over leading ones
    lead = axes[:-2] if n > 2 else [np.array([0.0])] * 0
    tail = axes[-2:] if n >= 2 else axes
    if n == 1:
        x = axes[0]
        val = np.full_like(x, float(form.constant))
        for i, j, c in form.quad:
            val += float(c) * x * x
        for i, c in form.lin.items():
            val += float(c) * x
        return float(val.min())
    mesh_tail = np.meshgrid(*tail, indexing="ij")
    for lead_pt in itertools.product(*lead):
        point = list(lead_pt) + mesh_tail
        val = np.full(mesh_tail[0].shape, float(form.constant))
        for i, j, c in form.quad:
            val = val + float(c) * point[i] * point[j]
        for i, c in form.lin.items():
            val = val + float(c) * point[i]
        best = min(best, float(val.min()))
    return best


def brute_force_mip(model):
    """Reference optimum: enumerate every binary pattern, LP each."""
    bins = model.binaries()
    assert len(bins) <= 12
    best = None
    for bits in itertools.product((0, 1), repeat=len(bins)):
        overrides = {b: (rat(v), rat(v)) for b, v in zip(bins, bits)}
        res = solve_lp(model, overrides)
        if res.status != "optimal":
            continue
        if best is None:
            best = res.objective
        elif model.direction == "min":
            best = min(best, res.objective)
        else:
            best = max(best, res.objective)
    return best


@pytest.fixture
def rng():
    return random.Random(20240811)
