"""Univariate machinery for z = x*x built from the tooth map G(x) = min(2x, 2-2x).

The j-fold composition G^j is a sawtooth with 2^(j-1) teeth; subtracting
scaled teeth from x gives the piecewise linear interpolation of x^2 at
the dyadic grid i/2^L:

    F_L(x) = x - sum_{j=1..L} 4^{-j} G^j(x),

which overestimates x^2 by at most 4^{-L}/4.  Shifting each F_j down by
its own maximum error yields supporting cuts whose upper envelope
underestimates x^2 by at most 4^{-L1}/16.  The emitters below write the
corresponding mixed-integer rows into a MilpModel, including the affine
change of variables that maps a general interval onto [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .milp import BINARY, EQ, GE, LE, MilpError, MilpModel
from .rational import ONE, ZERO, pow2, rat, to_rat


# -- exact scalar evaluation ----------------------------------------------

def tooth(x, j):
    """G^j(x): j-fold tooth map composition on [0, 1]; G^0 is the identity."""
    x = to_rat(x)
    if not 0 <= x <= 1:
        raise ValueError(f"tooth argument {x} outside [0, 1]")
    for _ in range(j):
        x = 2 * x if 2 * x <= 1 else 2 * (1 - x)
    return x


def tooth_path(x, depth):
    """[G^0(x), ..., G^depth(x)] computed in one sweep."""
    x = to_rat(x)
    out = [x]
    for _ in range(depth):
        x = 2 * x if 2 * x <= 1 else 2 * (1 - x)
        out.append(x)
    return out


def pwl_square(x, L):
    """F_L(x): interpolates x^2 exactly at i/2^L, overestimates in between."""
    path = tooth_path(x, L)
    total = path[0]
    for j in range(1, L + 1):
        total -= pow2(-2 * j) * path[j]
    return total


def epi_lower(x, L1):
    """Pointwise lower envelope of the depth-L1 epigraph cuts at x.

    max(0, 2x - 1, max_j F_j(x) - 4^{-j}/4) for j = 0..L1.
    """
    x = to_rat(x)
    path = tooth_path(x, L1)
    best = ZERO
    if 2 * x - 1 > best:
        best = 2 * x - 1
    value = x
    for j in range(L1 + 1):
        if j > 0:
            value -= pow2(-2 * j) * path[j]
        cut = value - pow2(-2 * j - 2)
        if cut > best:
            best = cut
    return best


def max_overestimation(L):
    """Largest F_L(x) - x^2 over [0, 1]; attained at grid midpoints."""
    return pow2(-2 * L - 2)


def max_underestimation(L1):
    """Largest x^2 - epi_lower(x, L1); attained halfway between cut tangencies."""
    return pow2(-2 * L1 - 4)


# -- vectorized float evaluation (exact on dyadic inputs) ------------------

def tooth_np(x, j):
    x = np.asarray(x, dtype=np.float64)
    for _ in range(j):
        x = np.minimum(2.0 * x, 2.0 * (1.0 - x))
    return x


def pwl_square_np(x, L):
    g = np.asarray(x, dtype=np.float64)
    total = g.copy()
    for j in range(1, L + 1):
        g = np.minimum(2.0 * g, 2.0 * (1.0 - g))
        total -= 0.25 ** j * g
    return total


def epi_lower_np(x, L1):
    x = np.asarray(x, dtype=np.float64)
    best = np.maximum(0.0, 2.0 * x - 1.0)
    g = x.copy()
    value = x.copy()
    for j in range(L1 + 1):
        if j > 0:
            g = np.minimum(2.0 * g, 2.0 * (1.0 - g))
            value = value - 0.25 ** j * g
        np.maximum(best, value - 0.25 ** j * 0.25, out=best)
    return best


# -- witnesses -------------------------------------------------------------

@dataclass
class SawtoothWitness:
    g: list       # length L1+1, g[0] is the transformed coordinate
    alpha: list   # length L, binary branch choices
    zmin: object  # smallest feasible z at this x (transformed scale)
    zmax: object  # largest feasible z at this x (transformed scale)


@dataclass(frozen=True)
class SawtoothDepths:
    L: int
    L1: int

    def __post_init__(self):
        if self.L < 0 or self.L1 < self.L:
            raise ValueError("need 0 <= L <= L1")


def sawtooth_witness(x, depths, lb=ZERO, ub=ONE):
    """A binary-feasible completion at x: g follows the tooth recursion,
    alpha picks the active branch (ties resolve to 0)."""
    lb, ub = to_rat(lb), to_rat(ub)
    if ub <= lb:
        raise ValueError("witness needs a nondegenerate interval")
    xhat = (to_rat(x) - lb) / (ub - lb)
    if not 0 <= xhat <= 1:
        raise ValueError(f"{x} outside [{lb}, {ub}]")
    g = tooth_path(xhat, depths.L1)
    alpha = [1 if g[j - 1] > rat(1, 2) else 0 for j in range(1, depths.L + 1)]
    return SawtoothWitness(g, alpha,
                           zmin=epi_lower(xhat, depths.L1),
                           zmax=pwl_square(xhat, depths.L))


# -- emitters ---------------------------------------------------------------

@dataclass
class SquareBlock:
    """Handle for one emitted z ~ x^2 block (ids into the model)."""
    x: int
    z: int
    xhat: int
    zhat: int
    g: list
    alpha: list
    depths: SawtoothDepths
    lb: object
    ub: object


def _require_interval(model, x):
    v = model.vars[x]
    if v.lb is None or v.ub is None:
        raise MilpError(f"variable {v.name} needs finite bounds")
    if v.ub <= v.lb:
        raise MilpError(f"variable {v.name} has a zero-width interval")
    return v.lb, v.ub


def _emit_binary_rows(model, g, alpha, prefix):
    """The four branch rows per level: g_j sandwiched by the chosen tooth arm."""
    for j in range(1, len(alpha) + 1):
        gj, gp, aj = g[j], g[j - 1], alpha[j - 1]
        model.add_row({gj: 1, gp: -2}, LE, 0, f"{prefix}_up0_{j}")
        model.add_row({gj: 1, gp: -2, aj: 2}, GE, 0, f"{prefix}_lo0_{j}")
        model.add_row({gj: 1, gp: 2}, LE, 2, f"{prefix}_up1_{j}")
        model.add_row({gj: 1, gp: 2, aj: -2}, GE, 0, f"{prefix}_lo1_{j}")


def _emit_chain_rows(model, g, levels, prefix):
    """Binary-free chain rows g_j <= 2 g_{j-1}, g_j <= 2(1 - g_{j-1})."""
    for j in levels:
        model.add_row({g[j]: 1, g[j - 1]: -2}, LE, 0, f"{prefix}_t0_{j}")
        model.add_row({g[j]: 1, g[j - 1]: 2}, LE, 2, f"{prefix}_t1_{j}")


def emit_S(model, xhat, L, prefix="s"):
    """Binary sawtooth system: L+1 chain variables, L binaries, 4L rows."""
    g = [model.add_var(f"{prefix}_g{j}", 0, 1, origin="aux-g") for j in range(L + 1)]
    alpha = [model.add_var(f"{prefix}_a{j}", 0, 1, BINARY, origin="aux-alpha")
             for j in range(1, L + 1)]
    model.add_row({g[0]: 1, xhat: -1}, EQ, 0, f"{prefix}_g0")
    _emit_binary_rows(model, g, alpha, prefix)
    return g, alpha


def emit_T(model, xhat, L1, prefix="t"):
    """LP chain system: the binary-free projection of the sawtooth rows."""
    g = [model.add_var(f"{prefix}_g{j}", 0, 1, origin="aux-g") for j in range(L1 + 1)]
    model.add_row({g[0]: 1, xhat: -1}, EQ, 0, f"{prefix}_g0")
    _emit_chain_rows(model, g, range(1, L1 + 1), prefix)
    return g


def _emit_hat_links(model, x, z, lb, ub, prefix):
    """Affine change of variables onto the unit interval.

    xhat = (x - lb) / w   and   zhat = (z - lb*(2x - lb)) / w^2,
    emitted as explicit equality rows so projections stay inspectable.
    """
    w = ub - lb
    xhat = model.add_var(f"{prefix}_xh", 0, 1, origin="aux-hat")
    zhat = model.add_var(f"{prefix}_zh", None, None, origin="aux-hat")
    model.add_row({xhat: w, x: -1}, EQ, -lb, f"{prefix}_xhdef")
    model.add_row({zhat: w * w, z: -1, x: 2 * lb}, EQ, lb * lb, f"{prefix}_zhdef")
    return xhat, zhat


def _emit_z_cuts(model, zhat, xhat, g, L, L1, prefix, upper=True):
    """Upper interpolant row (optional) and the shifted lower cut family."""
    if upper:
        coefs = {zhat: 1, xhat: -1}
        for j in range(1, L + 1):
            coefs[g[j]] = pow2(-2 * j)
        model.add_row(coefs, LE, 0, f"{prefix}_ub")
    for j in range(L1 + 1):
        coefs = {zhat: 1, xhat: -1}
        for i in range(1, j + 1):
            coefs[g[i]] = pow2(-2 * i)
        model.add_row(coefs, GE, -pow2(-2 * j - 2), f"{prefix}_lb{j}")
    model.add_row({zhat: 1}, GE, 0, f"{prefix}_lb_zero")
    model.add_row({zhat: 1, xhat: -2}, GE, -1, f"{prefix}_lb_end")


def emit_tightened_sawtooth(model, x, z, depths, prefix="st"):
    """Two-sided relaxation of z = x^2 on the variable's interval.

    Upper side: the depth-L interpolant with binary branch selection.
    Lower side: the depth-L1 cut family, binary-free beyond level L.
    """
    lb, ub = _require_interval(model, x)
    L, L1 = depths.L, depths.L1
    xhat, zhat = _emit_hat_links(model, x, z, lb, ub, prefix)
    g = [model.add_var(f"{prefix}_g{j}", 0, 1, origin="aux-g") for j in range(L1 + 1)]
    alpha = [model.add_var(f"{prefix}_a{j}", 0, 1, BINARY, origin="aux-alpha")
             for j in range(1, L + 1)]
    model.add_row({g[0]: 1, xhat: -1}, EQ, 0, f"{prefix}_g0")
    _emit_binary_rows(model, g, alpha, prefix)
    _emit_chain_rows(model, g, range(L + 1, L1 + 1), prefix)
    _emit_z_cuts(model, zhat, xhat, g, L, L1, prefix, upper=True)
    return SquareBlock(x, z, xhat, zhat, g, alpha, depths, lb, ub)


def emit_sawtooth_epigraph(model, p, zp, L1, prefix="se"):
    """Binary-free outer approximation of z >= p^2 on p's interval."""
    lb, ub = _require_interval(model, p)
    xhat, zhat = _emit_hat_links(model, p, zp, lb, ub, prefix)
    g = [model.add_var(f"{prefix}_g{j}", 0, 1, origin="aux-g") for j in range(L1 + 1)]
    model.add_row({g[0]: 1, xhat: -1}, EQ, 0, f"{prefix}_g0")
    _emit_chain_rows(model, g, range(1, L1 + 1), prefix)
    _emit_z_cuts(model, zhat, xhat, g, 0, L1, prefix, upper=False)
    return SquareBlock(p, zp, xhat, zhat, g, [], SawtoothDepths(0, L1), lb, ub)


def witness_assignment(block, x, model=None):
    """Full variable assignment for `block` at the point (x, x^2)."""
    x = to_rat(x)
    w = block.ub - block.lb
    xhat = (x - block.lb) / w
    depths = block.depths
    wit = sawtooth_witness(x, SawtoothDepths(len(block.alpha), depths.L1),
                           block.lb, block.ub)
    zhat = xhat * xhat
    values = {block.x: x, block.z: x * x, block.xhat: xhat, block.zhat: zhat}
    for j, gid in enumerate(block.g):
        values[gid] = wit.g[j]
    for k, aid in enumerate(block.alpha):
        values[aid] = rat(wit.alpha[k])
    return values
