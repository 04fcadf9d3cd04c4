"""Per-term relaxation emitters and envelope oracles for z = xy and z = x*x.

Eight methods are supported.  The separable family (bin2, bin3, hybs)
rewrites xy through squares of x, y and x+-y and relaxes the squares with
sawtooth blocks; the discretization family (nmdt, dnmdt and their
tightened univariate variants) writes one or both factors in base-2 and
relaxes the residual products with McCormick envelopes.

Every emitter has a closed-form twin in EnvelopeOracle that returns the
exact pointwise min/max of z over the projected mixed-integer set at a
fixed point.  The two are cross-checked against the builtin rational
solver in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .milp import BINARY, EQ, GE, LE, MilpError
from .rational import HALF, ONE, ZERO, pow2, rat, to_rat
from .sawtooth import (
    SawtoothDepths,
    SquareBlock,
    emit_sawtooth_epigraph,
    emit_tightened_sawtooth,
    epi_lower,
    epi_lower_np,
    pwl_square,
    pwl_square_np,
)


class Method(str, Enum):
    MCCORMICK = "mccormick"
    BIN2 = "bin2"
    BIN3 = "bin3"
    HYBS = "hybs"
    NMDT = "nmdt"
    TNMDT = "tnmdt"
    DNMDT = "dnmdt"
    TDNMDT = "tdnmdt"


SEPARABLE = (Method.BIN2, Method.BIN3, Method.HYBS)
NMDT_FAMILY = (Method.NMDT, Method.TNMDT, Method.DNMDT, Method.TDNMDT)
DOUBLY_DISCRETIZED = (Method.DNMDT, Method.TDNMDT)


def default_lower_depth(L):
    """Study default: L1 = max(2, ceil(1.5 L))."""
    return max(2, math.ceil(3 * L / 2))


@dataclass
class RelaxationConfig:
    method: Method
    L: int = 2
    L1: int = None
    lam: object = HALF           # dnmdt mixing weight
    include_mccormick: bool = True
    discretize: str = None       # nmdt side override: "x" or "y"

    def __post_init__(self):
        self.method = Method(self.method)
        if self.L < 0:
            raise ValueError("depth L must be nonnegative")
        if self.L1 is None:
            self.L1 = default_lower_depth(self.L)
        if self.L1 < self.L:
            raise ValueError(f"lower depth L1={self.L1} must be >= L={self.L}")
        self.lam = to_rat(self.lam)
        if not 0 <= self.lam <= 1:
            raise ValueError("lambda must lie in [0, 1]")

    @property
    def depths(self):
        return SawtoothDepths(self.L, self.L1)


# ---------------------------------------------------------------------------
# McCormick emitters
# ---------------------------------------------------------------------------

def _bounds(model, i):
    v = model.vars[i]
    if v.lb is None or v.ub is None:
        raise MilpError(f"variable {v.name} needs finite bounds")
    return v.lb, v.ub


def emit_mccormick(model, x, y, z, prefix="mc"):
    """Convex hull of z = xy on the box (four rows); square form if x is y."""
    if x == y:
        return emit_mccormick_square(model, x, z, prefix)
    if model.vars[x].kind == BINARY:
        return emit_mccormick_binary(model, y, x, z, prefix)
    if model.vars[y].kind == BINARY:
        return emit_mccormick_binary(model, x, y, z, prefix)
    xl, xu = _bounds(model, x)
    yl, yu = _bounds(model, y)
    rows = [
        model.add_row({z: 1, x: -yl, y: -xl}, GE, -xl * yl, f"{prefix}_ll"),
        model.add_row({z: 1, x: -yu, y: -xu}, GE, -xu * yu, f"{prefix}_uu"),
        model.add_row({z: 1, x: -yl, y: -xu}, LE, -xu * yl, f"{prefix}_ul"),
        model.add_row({z: 1, x: -yu, y: -xl}, LE, -xl * yu, f"{prefix}_lu"),
    ]
    return rows


def emit_mccormick_square(model, x, z, prefix="mcsq", upper_only=False):
    """Tangent/secant hull of z = x*x on the variable's interval."""
    xl, xu = _bounds(model, x)
    rows = []
    if not upper_only:
        rows.append(model.add_row({z: 1, x: -2 * xl}, GE, -xl * xl, f"{prefix}_tl"))
        rows.append(model.add_row({z: 1, x: -2 * xu}, GE, -xu * xu, f"{prefix}_tu"))
    rows.append(model.add_row({z: 1, x: -(xl + xu)}, LE, -xl * xu, f"{prefix}_sec"))
    return rows


def emit_mccormick_binary(model, x, beta, z, prefix="mcb", upper_only=False):
    """Exact product rows for z = x*beta with beta binary."""
    xl, xu = _bounds(model, x)
    rows = []
    if not upper_only:
        rows.append(model.add_row({z: 1, beta: -xl}, GE, 0, f"{prefix}_lo0"))
        rows.append(model.add_row({z: 1, x: -1, beta: -xu}, GE, -xu, f"{prefix}_lo1"))
    rows.append(model.add_row({z: 1, beta: -xu}, LE, 0, f"{prefix}_up0"))
    rows.append(model.add_row({z: 1, x: -1, beta: -xl}, LE, -xl, f"{prefix}_up1"))
    return rows


def _emit_expr_times_binary(model, expr, expr_bounds, beta, u, prefix, upper_only=False):
    """McCormick rows for u = e * beta where e is a linear expression."""
    el, eu = expr_bounds

    def with_expr(extra):
        coefs = {i: -c for i, c in expr.items()}
        for k, v in extra.items():
            coefs[k] = coefs.get(k, ZERO) + v
        return coefs

    if not upper_only:
        model.add_row({u: 1, beta: -el}, GE, 0, f"{prefix}_lo0")
        model.add_row(with_expr({u: 1, beta: -eu}), GE, -eu, f"{prefix}_lo1")
    model.add_row({u: 1, beta: -eu}, LE, 0, f"{prefix}_up0")
    model.add_row(with_expr({u: 1, beta: -el}), LE, -el, f"{prefix}_up1")


# ---------------------------------------------------------------------------
# shared-block registry (one sawtooth block / binary expansion per variable)
# ---------------------------------------------------------------------------

class SharedBlocks:
    """Reuses square blocks, discretizations and p-blocks across terms."""

    def __init__(self, model, cfg):
        self.model = model
        self.cfg = cfg
        self.square = {}   # var -> SquareBlock (separable methods)
        self.disc = {}     # var -> _Discretization
        self.pairs = {}    # frozenset{i, j} -> (p var, SquareBlock)

    def square_block(self, x, name):
        if x not in self.square:
            z = self.model.add_var(f"zsq_{name}", None, None, origin="aux-z")
            self.square[x] = emit_tightened_sawtooth(
                self.model, x, z, self.cfg.depths, prefix=f"st_{name}")
        return self.square[x]

    def pair_block(self, x, y, namex, namey, plus):
        key = (frozenset((x, y)), plus)
        if key not in self.pairs:
            m = self.model
            xl, xu = _bounds(m, x)
            yl, yu = _bounds(m, y)
            tag = f"{namex}_plus_{namey}" if plus else f"{namex}_minus_{namey}"
            if plus:
                p = m.add_var(f"p_{tag}", xl + yl, xu + yu, origin="aux-p")
                m.add_row({p: 1, x: -1, y: -1}, EQ, 0, f"pdef_{tag}")
            else:
                p = m.add_var(f"p_{tag}", xl - yu, xu - yl, origin="aux-p")
                m.add_row({p: 1, x: -1, y: 1}, EQ, 0, f"pdef_{tag}")
            zp = m.add_var(f"zsq_{tag}", None, None, origin="aux-z")
            block = emit_tightened_sawtooth(m, p, zp, self.cfg.depths, prefix=f"st_{tag}")
            self.pairs[key] = (p, block)
        return self.pairs[key]

    def discretization(self, x, name):
        if x not in self.disc:
            self.disc[x] = _Discretization(self.model, x, name, self.cfg)
        return self.disc[x]


class _Discretization:
    """Base-2 expansion of one variable.

    nmdt uses the original scale (x = w * sum 2^-j beta_j + dx + lb with
    dx in [0, 2^-L w]); the doubly discretized family expands the unit-scale
    image xhat instead and keeps dxhat in [0, 2^-L].
    """

    def __init__(self, model, x, name, cfg):
        self.x = x
        self.L = cfg.L
        self.lb, self.ub = _bounds(model, x)
        self.w = self.ub - self.lb
        unit = cfg.method in DOUBLY_DISCRETIZED
        self.unit = unit
        h = pow2(-cfg.L)
        self.beta = [model.add_var(f"b_{name}_{j}", 0, 1, BINARY, origin="aux-beta")
                     for j in range(1, cfg.L + 1)]
        if unit:
            self.xhat = model.add_var(f"xh_{name}", 0, 1, origin="aux-hat")
            model.add_row({self.xhat: self.w, x: -1}, EQ, -self.lb, f"xhdef_{name}")
            self.delta = model.add_var(f"dx_{name}", 0, h, origin="aux-delta")
            coefs = {self.xhat: 1, self.delta: -1}
        else:
            self.xhat = None
            self.delta = model.add_var(f"dx_{name}", 0, h * self.w, origin="aux-delta")
            coefs = {x: 1, self.delta: -1}
        for j, b in enumerate(self.beta, start=1):
            coefs[b] = -(self.w if not unit else ONE) * pow2(-j)
        model.add_row(coefs, EQ, self.lb if not unit else ZERO, f"disc_{name}")


# ---------------------------------------------------------------------------
# bilinear emitters
# ---------------------------------------------------------------------------

@dataclass
class TermHandle:
    method: Method
    x: int
    y: int
    z: int
    parts: dict = field(default_factory=dict)


def emit_bin2(model, x, y, z, cfg, shared=None, prefix="b2"):
    shared = shared or SharedBlocks(model, cfg)
    nx, ny = model.vars[x].name, model.vars[y].name
    bx = shared.square_block(x, nx)
    by = shared.square_block(y, ny)
    p, bp = shared.pair_block(x, y, nx, ny, plus=True)
    model.add_row({z: 1, bp.z: -HALF, bx.z: HALF, by.z: HALF}, EQ, 0, f"{prefix}_link")
    if cfg.include_mccormick:
        emit_mccormick(model, x, y, z, f"{prefix}_mc")
    return TermHandle(Method.BIN2, x, y, z, {"x": bx, "y": by, "p": bp, "pvar": p})


def emit_bin3(model, x, y, z, cfg, shared=None, prefix="b3"):
    shared = shared or SharedBlocks(model, cfg)
    nx, ny = model.vars[x].name, model.vars[y].name
    bx = shared.square_block(x, nx)
    by = shared.square_block(y, ny)
    p, bp = shared.pair_block(x, y, nx, ny, plus=False)
    model.add_row({z: 1, bx.z: -HALF, by.z: -HALF, bp.z: HALF}, EQ, 0, f"{prefix}_link")
    if cfg.include_mccormick:
        emit_mccormick(model, x, y, z, f"{prefix}_mc")
    return TermHandle(Method.BIN3, x, y, z, {"x": bx, "y": by, "p": bp, "pvar": p})


def emit_hybs(model, x, y, z, cfg, shared=None, prefix="hy"):
    shared = shared or SharedBlocks(model, cfg)
    nx, ny = model.vars[x].name, model.vars[y].name
    bx = shared.square_block(x, nx)
    by = shared.square_block(y, ny)
    xl, xu = _bounds(model, x)
    yl, yu = _bounds(model, y)
    tag = f"{nx}_{ny}"
    p1 = model.add_var(f"p1_{tag}", xl + yl, xu + yu, origin="aux-p")
    p2 = model.add_var(f"p2_{tag}", xl - yu, xu - yl, origin="aux-p")
    model.add_row({p1: 1, x: -1, y: -1}, EQ, 0, f"{prefix}_p1def")
    model.add_row({p2: 1, x: -1, y: 1}, EQ, 0, f"{prefix}_p2def")
    zp1 = model.add_var(f"zep_{tag}_plus", None, None, origin="aux-z")
    zp2 = model.add_var(f"zep_{tag}_minus", None, None, origin="aux-z")
    e1 = emit_sawtooth_epigraph(model, p1, zp1, cfg.L1, prefix=f"se_{tag}_plus")
    e2 = emit_sawtooth_epigraph(model, p2, zp2, cfg.L1, prefix=f"se_{tag}_minus")
    # 1/2 (zp1 - zx - zy) <= z <= 1/2 (zx + zy - zp2)
    model.add_row({z: 1, zp1: -HALF, bx.z: HALF, by.z: HALF}, GE, 0, f"{prefix}_lo")
    model.add_row({z: 1, bx.z: -HALF, by.z: -HALF, zp2: HALF}, LE, 0, f"{prefix}_hi")
    if cfg.include_mccormick:
        emit_mccormick(model, x, y, z, f"{prefix}_mc")
    return TermHandle(Method.HYBS, x, y, z,
                      {"x": bx, "y": by, "p1": e1, "p2": e2, "p1var": p1, "p2var": p2})


def _pick_nmdt_side(model, x, y, cfg):
    if cfg.discretize == "x":
        return x, y
    if cfg.discretize == "y":
        return y, x
    xl, xu = _bounds(model, x)
    yl, yu = _bounds(model, y)
    return (y, x) if (yu - yl) > (xu - xl) else (x, y)


def emit_nmdt(model, x, y, z, cfg, shared=None, prefix="nm"):
    """Single-sided base-2 discretization; the residual product keeps the error."""
    shared = shared or SharedBlocks(model, cfg)
    d, other = _pick_nmdt_side(model, x, y, cfg)
    disc = shared.discretization(d, model.vars[d].name)
    ol, ou = _bounds(model, other)
    L, w, lb = cfg.L, disc.w, disc.lb
    u = [model.add_var(f"u_{prefix}_{j}", None, None, origin="aux-u")
         for j in range(1, L + 1)]
    dz = model.add_var(f"dz_{prefix}", None, None, origin="aux-delta")
    # z = w * sum 2^-j u_j + dz + lb * other
    coefs = {z: 1, dz: -1, other: -lb}
    for j, uj in enumerate(u, start=1):
        coefs[uj] = -w * pow2(-j)
    model.add_row(coefs, EQ, 0, f"{prefix}_recomp")
    for j, (uj, bj) in enumerate(zip(u, disc.beta), start=1):
        emit_mccormick_binary(model, other, bj, uj, f"{prefix}_u{j}")
    _emit_box_mccormick(model, disc.delta, (ZERO, pow2(-L) * w),
                        other, (ol, ou), dz, f"{prefix}_dz")
    return TermHandle(Method.NMDT, x, y, z,
                      {"disc": disc, "other": other, "u": u, "dz": dz})


def _emit_box_mccormick(model, a, abounds, b, bbounds, zvar, prefix, upper_only=False):
    al, au = abounds
    bl, bu = bbounds
    if not upper_only:
        model.add_row({zvar: 1, a: -bl, b: -al}, GE, -al * bl, f"{prefix}_ll")
        model.add_row({zvar: 1, a: -bu, b: -au}, GE, -au * bu, f"{prefix}_uu")
    model.add_row({zvar: 1, a: -bl, b: -au}, LE, -au * bl, f"{prefix}_ul")
    model.add_row({zvar: 1, a: -bu, b: -al}, LE, -al * bu, f"{prefix}_lu")


def emit_dnmdt(model, x, y, z, cfg, shared=None, prefix="dn"):
    """Both factors discretized on the unit scale; lambda mixes the two
    exact recompositions (at 1/2 the endpoint systems come along free)."""
    shared = shared or SharedBlocks(model, cfg)
    dx = shared.discretization(x, model.vars[x].name)
    dy = shared.discretization(y, model.vars[y].name)
    L = cfg.L
    h = pow2(-L)
    zh = model.add_var(f"zh_{prefix}", None, None, origin="aux-hat")
    # z = wx wy zh + wx ylb xh + wy xlb yh + xlb ylb
    model.add_row(
        {z: 1, zh: -dx.w * dy.w, dx.xhat: -dx.w * dy.lb, dy.xhat: -dy.w * dx.lb},
        EQ, dx.lb * dy.lb, f"{prefix}_unhat")
    dzh = model.add_var(f"dzh_{prefix}", None, None, origin="aux-delta")
    _emit_box_mccormick(model, dx.delta, (ZERO, h), dy.delta, (ZERO, h),
                        dzh, f"{prefix}_dz")
    lams = [cfg.lam]
    if cfg.lam == HALF:
        lams += [ZERO, ONE]
    for t, lam in enumerate(lams):
        us = [model.add_var(f"u_{prefix}_{t}_{j}", None, None, origin="aux-u")
              for j in range(1, L + 1)]
        vs = [model.add_var(f"v_{prefix}_{t}_{j}", None, None, origin="aux-v")
              for j in range(1, L + 1)]
        coefs = {zh: 1, dzh: -1}
        for j in range(1, L + 1):
            coefs[us[j - 1]] = -pow2(-j)
            coefs[vs[j - 1]] = -pow2(-j)
        model.add_row(coefs, EQ, 0, f"{prefix}_recomp_{t}")
        # u_j = beta^x_j * (lam dyhat + (1-lam) yhat), bounds [0, lam h + 1 - lam]
        ey = {dy.delta: lam, dy.xhat: ONE - lam}
        ex = {dx.delta: ONE - lam, dx.xhat: lam}
        ey = {k: v for k, v in ey.items() if v != 0}
        ex = {k: v for k, v in ex.items() if v != 0}
        ey_ub = lam * h + (ONE - lam)
        ex_ub = (ONE - lam) * h + lam
        for j in range(1, L + 1):
            _emit_expr_times_binary(model, ey, (ZERO, ey_ub), dx.beta[j - 1],
                                    us[j - 1], f"{prefix}_u{t}_{j}")
            _emit_expr_times_binary(model, ex, (ZERO, ex_ub), dy.beta[j - 1],
                                    vs[j - 1], f"{prefix}_v{t}_{j}")
    return TermHandle(Method.DNMDT, x, y, z, {"dx": dx, "dy": dy, "zh": zh})


_BILINEAR_EMITTERS = {
    Method.MCCORMICK: lambda m, x, y, z, cfg, shared, prefix: (
        emit_mccormick(m, x, y, z, prefix) and TermHandle(Method.MCCORMICK, x, y, z)),
    Method.BIN2: emit_bin2,
    Method.BIN3: emit_bin3,
    Method.HYBS: emit_hybs,
    Method.NMDT: emit_nmdt,
    Method.TNMDT: emit_nmdt,
    Method.DNMDT: emit_dnmdt,
    Method.TDNMDT: emit_dnmdt,
}


def emit_bilinear(model, x, y, z, cfg, shared=None, prefix=None):
    """Relax z = x*y with the configured method (tightened variants match
    their base method on bilinear terms)."""
    if prefix is None:
        prefix = f"{cfg.method.value}_{model.vars[x].name}_{model.vars[y].name}"
    emitter = _BILINEAR_EMITTERS[cfg.method]
    if cfg.method == Method.MCCORMICK:
        return emitter(model, x, y, z, cfg, shared, prefix)
    return emitter(model, x, y, z, cfg, shared=shared, prefix=prefix)


# ---------------------------------------------------------------------------
# univariate (z = x*x) emitters
# ---------------------------------------------------------------------------

def emit_univariate(model, x, z, cfg, shared=None, prefix=None):
    """Relax z = x*x according to the method.

    Separable methods use the tightened sawtooth block.  nmdt/dnmdt use
    their discretizations; the T-variants drop every McCormick lower row
    and add the binary-free epigraph cuts instead.
    """
    shared = shared or SharedBlocks(model, cfg)
    name = model.vars[x].name
    if prefix is None:
        prefix = f"{cfg.method.value}_sq_{name}"
    method = cfg.method
    if method == Method.MCCORMICK:
        emit_mccormick_square(model, x, z, prefix)
        return TermHandle(method, x, x, z)
    if method in SEPARABLE:
        block = shared.square_block(x, name)
        model.add_row({z: 1, block.z: -1}, EQ, 0, f"{prefix}_eq")
        return TermHandle(method, x, x, z, {"block": block})
    if method in (Method.NMDT, Method.TNMDT):
        return _emit_univariate_nmdt(model, x, z, cfg, shared, prefix)
    return _emit_univariate_dnmdt(model, x, z, cfg, shared, prefix)


def _emit_univariate_nmdt(model, x, z, cfg, shared, prefix):
    disc = shared.discretization(x, model.vars[x].name)
    xl, xu = disc.lb, disc.ub
    L, w = cfg.L, disc.w
    tighten = cfg.method == Method.TNMDT
    u = [model.add_var(f"u_{prefix}_{j}", None, None, origin="aux-u")
         for j in range(1, L + 1)]
    dz = model.add_var(f"dz_{prefix}", None, None, origin="aux-delta")
    coefs = {z: 1, dz: -1, x: -xl}
    for j, uj in enumerate(u, start=1):
        coefs[uj] = -w * pow2(-j)
    model.add_row(coefs, EQ, 0, f"{prefix}_recomp")
    for j, (uj, bj) in enumerate(zip(u, disc.beta), start=1):
        emit_mccormick_binary(model, x, bj, uj, f"{prefix}_u{j}")
    _emit_box_mccormick(model, disc.delta, (ZERO, pow2(-L) * w), x, (xl, xu),
                        dz, f"{prefix}_dz")
    handle = TermHandle(cfg.method, x, x, z, {"disc": disc, "u": u, "dz": dz})
    if tighten:
        handle.parts["epi"] = emit_sawtooth_epigraph(model, x, z, cfg.L1,
                                                     prefix=f"{prefix}_epi")
    return handle


def _emit_univariate_dnmdt(model, x, z, cfg, shared, prefix):
    disc = shared.discretization(x, model.vars[x].name)
    xl = disc.lb
    L, w = cfg.L, disc.w
    h = pow2(-L)
    tighten = cfg.method == Method.TDNMDT
    u = [model.add_var(f"u_{prefix}_{j}", None, None, origin="aux-u")
         for j in range(1, L + 1)]
    dz = model.add_var(f"dz_{prefix}", None, None, origin="aux-delta")
    # z = w sum 2^-j u_j + w^2 dz + xl (x + w dxhat)
    coefs = {z: 1, dz: -w * w, x: -xl, disc.delta: -xl * w}
    for j, uj in enumerate(u, start=1):
        coefs[uj] = -w * pow2(-j)
    model.add_row(coefs, EQ, 0, f"{prefix}_recomp")
    # u_j = beta_j * (w dxhat + x) over [xl, xu + h w]
    expr = {disc.delta: w, x: ONE}
    for j, (uj, bj) in enumerate(zip(u, disc.beta), start=1):
        _emit_expr_times_binary(model, expr, (xl, disc.ub + h * w), bj, uj,
                                f"{prefix}_u{j}", upper_only=tighten)
    # dz ~ dxhat^2 on [0, h]
    if not tighten:
        model.add_row({dz: 1}, GE, 0, f"{prefix}_dz_tl")
        model.add_row({dz: 1, disc.delta: -2 * h}, GE, -h * h, f"{prefix}_dz_tu")
    model.add_row({dz: 1, disc.delta: -h}, LE, 0, f"{prefix}_dz_sec")
    handle = TermHandle(cfg.method, x, x, z, {"disc": disc, "u": u, "dz": dz})
    if tighten:
        handle.parts["epi"] = emit_sawtooth_epigraph(model, x, z, cfg.L1,
                                                     prefix=f"{prefix}_epi")
    return handle


# ---------------------------------------------------------------------------
# envelope oracles
# ---------------------------------------------------------------------------

def _interval_intersect(a, b):
    lo = a[0] if b[0] is None or (a[0] is not None and a[0] >= b[0]) else b[0]
    hi = a[1] if b[1] is None or (a[1] is not None and a[1] <= b[1]) else b[1]
    return lo, hi


class EnvelopeOracle:
    """Exact pointwise z-range of a projected relaxation at a fixed point.

    For the separable methods the range combines per-block square envelopes
    through the linking rows; for the discretization family it is the
    cell-local McCormick range, with the union taken over both adjacent
    cells when the point sits on a grid line.  `l1_infinity` replaces the
    epigraph cuts by the exact parabola (the limiting lower bound), which
    is the setting the closed-form average errors refer to.
    """

    def __init__(self, cfg, xbounds=(ZERO, ONE), ybounds=None, l1_infinity=False):
        self.cfg = cfg
        self.method = cfg.method
        self.xb = (to_rat(xbounds[0]), to_rat(xbounds[1]))
        self.yb = None if ybounds is None else (to_rat(ybounds[0]), to_rat(ybounds[1]))
        self.univariate = ybounds is None
        self.l1_inf = l1_infinity
        if self.xb[1] <= self.xb[0] or (self.yb and self.yb[1] <= self.yb[0]):
            raise ValueError("oracle needs nondegenerate boxes")

    # -- square-block envelopes on an interval ---------------------------

    def _epi(self, xhat):
        return xhat * xhat if self.l1_inf else epi_lower(xhat, self.cfg.L1)

    def _square_range(self, x, lb, ub, tight=True):
        """[zmin, zmax] of the sawtooth square block at fixed x."""
        w = ub - lb
        xhat = (to_rat(x) - lb) / w
        if not 0 <= xhat <= 1:
            raise ValueError(f"point {x} outside [{lb}, {ub}]")
        shift = lb * (2 * to_rat(x) - lb)
        lo = w * w * self._epi(xhat) + shift
        hi = w * w * pwl_square(xhat, self.cfg.L) + shift
        return lo, hi

    def _epi_min(self, p, lb, ub):
        """zmin of the binary-free epigraph block (no upper bound)."""
        w = ub - lb
        phat = (to_rat(p) - lb) / w
        return w * w * self._epi(phat) + lb * (2 * to_rat(p) - lb)

    # -- public API --------------------------------------------------------

    def zrange(self, x, y=None):
        x = to_rat(x)
        if self.univariate:
            return self._sq_range_dispatch(x)
        y = to_rat(y)
        return self._xy_range_dispatch(x, y)

    def zmin(self, x, y=None):
        return self.zrange(x, y)[0]

    def zmax(self, x, y=None):
        return self.zrange(x, y)[1]

    # -- univariate dispatch ------------------------------------------------

    def _sq_range_dispatch(self, x):
        lb, ub = self.xb
        m = self.method
        if m in SEPARABLE or m == Method.TDNMDT:
            return self._square_range(x, lb, ub)
        if m == Method.MCCORMICK:
            lo = max(2 * lb * x - lb * lb, 2 * ub * x - ub * ub)
            hi = x * (lb + ub) - lb * ub
            return lo, hi
        if m in (Method.NMDT, Method.TNMDT):
            lo, hi = self._sq_nmdt_cells(x)
            if m == Method.TNMDT:
                lo = max(lo, self._epi_min(x, lb, ub))
            return lo, hi
        # plain dnmdt: piecewise tangent/secant cells
        return self._sq_dnmdt_cells(x)

    def _cells(self, xhat):
        """Indices of grid cells containing xhat (two on a grid line)."""
        L = self.cfg.L
        n = 1 << L
        scaled = xhat * n
        k = int(math.floor(scaled))
        cells = []
        if k < n:
            cells.append(k)
        if scaled == k and k - 1 >= 0:
            cells.append(k - 1)
        if k >= n and scaled == n:
            cells.append(n - 1)
        return cells

    def _sq_nmdt_cells(self, x):
        lb, ub = self.xb
        w = ub - lb
        h = pow2(-self.cfg.L)
        xhat = (x - lb) / w
        best_lo, best_hi = None, None
        for k in self._cells(xhat):
            bh = k * h
            dx = x - lb - w * bh           # residual, in [0, h w]
            base = w * bh * x + lb * x
            # dz range from M(dx, x) over [0, h w] x [lb, ub]
            dlo = max(dx * lb, dx * ub + h * w * x - h * w * ub)
            dhi = min(dx * ub, dx * lb + h * w * x - h * w * lb)
            lo, hi = base + dlo, base + dhi
            best_lo = lo if best_lo is None or lo < best_lo else best_lo
            best_hi = hi if best_hi is None or hi > best_hi else best_hi
        return best_lo, best_hi

    def _sq_dnmdt_cells(self, x):
        lb, ub = self.xb
        w = ub - lb
        h = pow2(-self.cfg.L)
        xhat = (x - lb) / w
        shift = lb * (2 * x - lb)
        best_lo, best_hi = None, None
        for k in self._cells(xhat):
            a = k * h
            b = a + h
            lo = max(2 * a * xhat - a * a, 2 * b * xhat - b * b)
            hi = (a + b) * xhat - a * b
            lo, hi = w * w * lo + shift, w * w * hi + shift
            best_lo = lo if best_lo is None or lo < best_lo else best_lo
            best_hi = hi if best_hi is None or hi > best_hi else best_hi
        return best_lo, best_hi

    # -- bilinear dispatch ---------------------------------------------------

    def _mccormick_range(self, x, y):
        xl, xu = self.xb
        yl, yu = self.yb
        lo = max(xl * y + x * yl - xl * yl, xu * y + x * yu - xu * yu)
        hi = min(xu * y + x * yl - xu * yl, xl * y + x * yu - xl * yu)
        return lo, hi

    def _xy_range_dispatch(self, x, y):
        m = self.method
        if m == Method.MCCORMICK:
            return self._mccormick_range(x, y)
        if m in SEPARABLE:
            rng = self._xy_separable(x, y)
            if self.cfg.include_mccormick:
                rng = _interval_intersect(rng, self._mccormick_range(x, y))
            return rng
        if m in (Method.NMDT, Method.TNMDT):
            return self._xy_nmdt(x, y)
        return self._xy_dnmdt(x, y)

    def _xy_separable(self, x, y):
        xl, xu = self.xb
        yl, yu = self.yb
        zx = self._square_range(x, xl, xu)
        zy = self._square_range(y, yl, yu)
        if self.method == Method.BIN2:
            zp = self._square_range(x + y, xl + yl, xu + yu)
            return (HALF * (zp[0] - zx[1] - zy[1]), HALF * (zp[1] - zx[0] - zy[0]))
        if self.method == Method.BIN3:
            zp = self._square_range(x - y, xl - yu, xu - yl)
            return (HALF * (zx[0] + zy[0] - zp[1]), HALF * (zx[1] + zy[1] - zp[0]))
        zp1 = self._epi_min(x + y, xl + yl, xu + yu)
        zp2 = self._epi_min(x - y, xl - yu, xu - yl)
        return (HALF * (zp1 - zx[1] - zy[1]), HALF * (zx[1] + zy[1] - zp2))

    def _xy_nmdt(self, x, y):
        xl, xu = self.xb
        yl, yu = self.yb
        side = self.cfg.discretize
        if side is None:
            side = "y" if (yu - yl) > (xu - xl) else "x"
        if side == "x":
            d, dl, du, o, ol, ou = x, xl, xu, y, yl, yu
        else:
            d, dl, du, o, ol, ou = y, yl, yu, x, xl, xu
        w = du - dl
        h = pow2(-self.cfg.L)
        dhat = (d - dl) / w
        best_lo, best_hi = None, None
        for k in self._cells(dhat):
            bh = k * h
            dd = d - dl - w * bh
            base = w * bh * o + dl * o
            lo = base + max(dd * ol, dd * ou + h * w * o - h * w * ou)
            hi = base + min(dd * ou, dd * ol + h * w * o - h * w * ol)
            best_lo = lo if best_lo is None or lo < best_lo else best_lo
            best_hi = hi if best_hi is None or hi > best_hi else best_hi
        return best_lo, best_hi

    def _xy_dnmdt(self, x, y):
        xl, xu = self.xb
        yl, yu = self.yb
        wx, wy = xu - xl, yu - yl
        h = pow2(-self.cfg.L)
        xhat, yhat = (x - xl) / wx, (y - yl) / wy
        best_lo, best_hi = None, None
        for kx in self._cells(xhat):
            for ky in self._cells(yhat):
                ax, ay = kx * h, ky * h
                ddx, ddy = xhat - ax, yhat - ay
                base = ax * ay + ax * ddy + ay * ddx
                lo = base + max(ZERO, h * ddx + h * ddy - h * h)
                hi = base + min(h * ddx, h * ddy)
                lo = wx * wy * lo + wx * yl * xhat + wy * xl * yhat + xl * yl
                hi = wx * wy * hi + wx * yl * xhat + wy * xl * yhat + xl * yl
                best_lo = lo if best_lo is None or lo < best_lo else best_lo
                best_hi = hi if best_hi is None or hi > best_hi else best_hi
        return best_lo, best_hi

    # -- vectorized band on the unit box (floats; exact on dyadic grids) ----

    def band_np(self, X, Y=None):
        if self.xb != (ZERO, ONE) or (self.yb is not None and self.yb != (ZERO, ONE)):
            raise ValueError("vectorized band supports the unit box only")
        L, L1 = self.cfg.L, self.cfg.L1
        if self.univariate:
            return self._band_sq_np(np.asarray(X, dtype=np.float64), L, L1)
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        m = self.method
        if m == Method.MCCORMICK:
            return (np.maximum(X + Y - 1.0, 0.0), np.minimum(X, Y))
        if m in SEPARABLE:
            lo, hi = self._band_sep_np(X, Y, L, L1)
            if self.cfg.include_mccormick:
                lo = np.maximum(lo, np.maximum(X + Y - 1.0, 0.0))
                hi = np.minimum(hi, np.minimum(X, Y))
            return lo, hi
        if m in (Method.NMDT, Method.TNMDT):
            return self._band_nmdt_np(X, Y, L)
        return self._band_dnmdt_np(X, Y, L)

    def _epi_np(self, x, L1):
        return x * x if self.l1_inf else epi_lower_np(x, L1)

    def _band_sq_np(self, X, L, L1):
        m = self.method
        if m in SEPARABLE or m == Method.TDNMDT:
            return self._epi_np(X, L1), pwl_square_np(X, L)
        if m in (Method.NMDT, Method.TNMDT):
            lo, hi = _cells_union_np(X, L, _nmdt_sq_cell_np)
            if m == Method.TNMDT:
                lo = np.maximum(lo, self._epi_np(X, L1))
            return lo, hi
        return _cells_union_np(X, L, _dnmdt_sq_cell_np)

    def _band_sep_np(self, X, Y, L, L1):
        fx, fy = pwl_square_np(X, L), pwl_square_np(Y, L)
        ex, ey = self._epi_np(X, L1), self._epi_np(Y, L1)
        s, d = X + Y, X - Y
        ep1 = 4.0 * self._epi_np(s / 2.0, L1)
        ep2 = 4.0 * self._epi_np((d + 1.0) / 2.0, L1) - 2.0 * d - 1.0
        if self.method == Method.HYBS:
            return 0.5 * (ep1 - fx - fy), 0.5 * (fx + fy - ep2)
        if self.method == Method.BIN2:
            fp1 = 4.0 * pwl_square_np(s / 2.0, L)
            return 0.5 * (ep1 - fx - fy), 0.5 * (fp1 - ex - ey)
        fp2 = 4.0 * pwl_square_np((d + 1.0) / 2.0, L) - 2.0 * d - 1.0
        return 0.5 * (ex + ey - fp2), 0.5 * (fx + fy - ep2)

    def _band_nmdt_np(self, X, Y, L):
        side = self.cfg.discretize or "x"
        D, O = (X, Y) if side == "x" else (Y, X)

        def cell(xc, k, h):
            dx = xc - k * h
            base = k * h * O
            lo = base + np.maximum(0.0, dx + h * (O - 1.0))
            hi = base + np.minimum(dx, h * O)
            return lo, hi

        return _cells_union_np(D, L, cell)

    def _band_dnmdt_np(self, X, Y, L):
        h = 0.5 ** L
        n = 1 << L
        kx = np.clip(np.floor(X / h), 0, n - 1)
        ky = np.clip(np.floor(Y / h), 0, n - 1)
        los, his = [], []
        for ox in (0, -1):
            for oy in (0, -1):
                cx = np.clip(kx + ox, 0, n - 1)
                cy = np.clip(ky + oy, 0, n - 1)
                ax, ay = cx * h, cy * h
                inside = (X >= ax) & (X <= ax + h) & (Y >= ay) & (Y <= ay + h)
                dx, dy = X - ax, Y - ay
                base = ax * ay + ax * dy + ay * dx
                lo = base + np.maximum(0.0, h * (dx + dy - h))
                hi = base + np.minimum(h * dx, h * dy)
                los.append(np.where(inside, lo, np.inf))
                his.append(np.where(inside, hi, -np.inf))
        return np.minimum.reduce(los), np.maximum.reduce(his)


def _cells_union_np(X, L, cell_fn):
    h = 0.5 ** L
    n = 1 << L
    k = np.clip(np.floor(X / h), 0, n - 1)
    los, his = [], []
    for off in (0, -1):
        c = np.clip(k + off, 0, n - 1)
        inside = (X >= c * h) & (X <= (c + 1) * h)
        lo, hi = cell_fn(X, c, h)
        los.append(np.where(inside, lo, np.inf))
        his.append(np.where(inside, hi, -np.inf))
    return np.minimum.reduce(los), np.maximum.reduce(his)


def _nmdt_sq_cell_np(X, k, h):
    dx = X - k * h
    base = k * h * X
    lo = base + np.maximum(0.0, dx + h * (X - 1.0))
    hi = base + np.minimum(dx, h * X)
    return lo, hi


def _dnmdt_sq_cell_np(X, k, h):
    a = k * h
    b = a + h
    lo = np.maximum(2.0 * a * X - a * a, 2.0 * b * X - b * b)
    hi = (a + b) * X - a * b
    return lo, hi
