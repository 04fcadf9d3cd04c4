"""Analytic error/volume catalog and the empirical estimators that check it.

The closed forms live here: per-method maximum and average errors, the
limiting LP-relaxation volumes of the separable methods, and the
breakpoint-placement objectives whose minimizers are the uniform grids.
Average errors are validated two ways: exact per-cell integration of the
envelope band (rational polygon clipping plus a quadrature rule that is
exact for quadratics) and seeded Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bilinear import EnvelopeOracle, Method, RelaxationConfig
from .rational import ONE, ZERO, pow2, rat, to_rat


# ---------------------------------------------------------------------------
# analytic catalog
# ---------------------------------------------------------------------------

def analytic_max_error(method, L, L1=None):
    """Maximum pointwise error of the method at the given depths.

    Returns a single rational when the value is exact, or an
    (attained lower bound, proven upper bound) pair for the separable
    methods, whose exact maximum depends on both depths.
    """
    method = Method(method)
    if L1 is None:
        L1 = L
    if method == Method.MCCORMICK:
        return rat(1, 4)
    if method in (Method.NMDT, Method.TNMDT):
        return pow2(-L - 2)
    if method in (Method.DNMDT, Method.TDNMDT):
        return pow2(-2 * L - 2)
    if method == Method.HYBS:
        return (pow2(-2 * L - 2), pow2(-2 * L - 2) + pow2(-2 * L1 - 3))
    # bin2 / bin3
    return (pow2(-2 * L - 2), pow2(-2 * L - 1) + pow2(-2 * L1 - 3))


def analytic_avg_error(method, L):
    """Volume between the projected relaxation and the graph of xy
    (deep lower-bounding limit, McCormick box rows excluded)."""
    method = Method(method)
    if method == Method.MCCORMICK:
        return rat(1, 6)
    if method in (Method.NMDT, Method.TNMDT):
        return rat(1, 6) * pow2(-L)
    if method in (Method.DNMDT, Method.TDNMDT):
        return rat(1, 6) * pow2(-2 * L)
    if method == Method.HYBS:
        return rat(1, 3) * pow2(-2 * L)
    if L == 0:
        return rat(7, 12)
    return rat(1, 2) * pow2(-2 * L)


def lp_volume(method, lx, ly):
    """Limiting LP-relaxation volume on an lx-by-ly box, McCormick rows off."""
    method = Method(method)
    lx, ly = to_rat(lx), to_rat(ly)
    if method == Method.HYBS:
        return (lx * ly**3 + ly * lx**3) / 6
    if method in (Method.BIN2, Method.BIN3):
        return lx * ly * (2 * lx**2 + 3 * lx * ly + 2 * ly**2) / 12
    raise ValueError(f"no closed-form LP volume for {method}")


def lp_volume_gap(lx, ly):
    """How much smaller the hybrid LP region is than bin2/bin3's."""
    lx, ly = to_rat(lx), to_rat(ly)
    return lx * lx * ly * ly / 4


def c_envelopes(xbounds, ybounds):
    """Limiting LP envelope surfaces of the separable methods on a box.

    Returns float callables keyed C2L, C2U, C3L, C3U: the convex/concave
    pairs bounding bin2 (C2L..C2U), bin3 (C3L..C3U) and hybrid (C2L..C3U).
    """
    xl, xu = float(xbounds[0]), float(xbounds[1])
    yl, yu = float(ybounds[0]), float(ybounds[1])

    def chord_x(x):
        return (xl + xu) * x - xl * xu

    def chord_y(y):
        return (yl + yu) * y - yl * yu

    def chord_p1(p):
        return (xl + yl + xu + yu) * p - (xl + yl) * (xu + yu)

    def chord_p2(p):
        return (xl - yu + xu - yl) * p - (xl - yu) * (xu - yl)

    return {
        "C2L": lambda x, y: 0.5 * ((x + y) ** 2 - chord_x(x) - chord_y(y)),
        "C2U": lambda x, y: 0.5 * (chord_p1(x + y) - x * x - y * y),
        "C3L": lambda x, y: 0.5 * (x * x + y * y - chord_p2(x - y)),
        "C3U": lambda x, y: 0.5 * (chord_x(x) + chord_y(y) - (x - y) ** 2),
    }


# ---------------------------------------------------------------------------
# breakpoint placement objectives
# ---------------------------------------------------------------------------

SEPARABLE_CUBIC = "separable-cubic"
MCCORMICK_QUADRATIC = "mccormick-quadratic"


def breakpoint_objective(family, lengths_x, lengths_y):
    """Average-error objective of a piecewise relaxation with the given
    grid-piece lengths; each family of lengths must sum to 1."""
    lx = [to_rat(v) for v in lengths_x]
    ly = [to_rat(v) for v in lengths_y]
    for lengths in (lx, ly):
        if any(v < 0 for v in lengths):
            raise ValueError("lengths must be nonnegative")
        total = sum(lengths, ZERO)
        if abs(total - 1) > to_rat(1e-12):
            raise ValueError(f"lengths must sum to 1 (got {float(total)})")
    if family == SEPARABLE_CUBIC:
        return sum((a * b**3 + b * a**3 for a in lx for b in ly), ZERO) / 6
    if family == MCCORMICK_QUADRATIC:
        return sum((a * a for a in lx), ZERO) * sum((b * b for b in ly), ZERO) / 6
    raise ValueError(f"unknown family {family!r}")


def uniform_breakpoint_value(family, n, m):
    if family == SEPARABLE_CUBIC:
        return (rat(1, n * n) + rat(1, m * m)) / 6
    if family == MCCORMICK_QUADRATIC:
        return rat(1, 6 * n * m)
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# exact polygon integration of envelope bands
# ---------------------------------------------------------------------------

def _clip(poly, a, b, c):
    """Sutherland-Hodgman clip of a convex polygon to a*x + b*y <= c."""
    out = []
    n = len(poly)
    for i in range(n):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % n]
        fp = a * px + b * py - c
        fq = a * qx + b * qy - c
        if fp <= 0:
            out.append((px, py))
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((px + t * (qx - px), py + t * (qy - py)))
    dedup = []
    for p in out:
        if not dedup or p != dedup[-1]:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def _split(polys, line):
    a, b, c = line
    out = []
    for poly in polys:
        for keep in ((a, b, c), (-a, -b, -c)):
            piece = _clip(poly, *keep)
            if len(piece) >= 3 and _area2(piece) != 0:
                out.append(piece)
    return out


def _area2(poly):
    total = ZERO
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        total += x1 * y2 - x2 * y1
    return total


def _poly_eval(poly_dict, x, y):
    total = ZERO
    for (i, j), c in poly_dict.items():
        total += c * x**i * y**j
    return total


def _integrate_quadratic(poly_dict, polygon):
    """Exact integral of a degree<=2 polynomial over a convex polygon,
    via the edge-midpoint rule on a fan triangulation."""
    total = ZERO
    x0, y0 = polygon[0]
    for k in range(1, len(polygon) - 1):
        x1, y1 = polygon[k]
        x2, y2 = polygon[k + 1]
        area2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if area2 == 0:
            continue
        mids = ((x0 + x1, y0 + y1), (x1 + x2, y1 + y2), (x0 + x2, y0 + y2))
        acc = ZERO
        for mx, my in mids:
            acc += _poly_eval(poly_dict, mx / 2, my / 2)
        total += abs(area2) / 2 * acc / 3
    return total


def _poly_add(target, other, scale=ONE):
    for key, c in other.items():
        target[key] = target.get(key, ZERO) + scale * c
    return target


def _affine_piece_minus_square(i, h, subst):
    """(secant piece i of t^2 at spacing h) - t^2, with t = subst as a
    linear map (cx, cy, c0).  Returns the polynomial dict in (x, y)."""
    cx, cy, c0 = subst
    slope = (2 * i + 1) * h
    inter = -i * (i + 1) * h * h
    out = {}
    _poly_add(out, {(1, 0): slope * cx, (0, 1): slope * cy, (0, 0): slope * c0 + inter})
    # minus t^2
    _poly_add(out, {
        (2, 0): -cx * cx, (0, 2): -cy * cy, (1, 1): -2 * cx * cy,
        (1, 0): -2 * cx * c0, (0, 1): -2 * cy * c0, (0, 0): -c0 * c0,
    })
    return out


def _piece_index(value, h, n):
    k = int(value / h) if value >= 0 else -1
    # value is strictly inside a piece for region centroids
    if k >= n:
        k = n - 1
    return k


def _grid_lines_between(lo, hi, h, coef):
    """Break lines coef . (x, y) = k*h strictly between lo and hi."""
    lines = []
    k = int(lo / h)
    while k * h <= lo:
        k += 1
    while k * h < hi:
        lines.append((coef[0], coef[1], k * h))
        k += 1
    return lines


def cell_band_volume(method, L, cell, l1_infinity=True):
    """Exact volume of the envelope band over one rectangular cell.

    Uses the deep-lower-bound oracle (exact parabola below, interpolant
    above) with McCormick rows off, matching the closed-form averages.
    """
    method = Method(method)
    x0, x1, y0, y1 = (to_rat(v) for v in cell)
    if not l1_infinity:
        raise NotImplementedError("exact integration covers the limiting band")
    rect = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    h = pow2(-L)
    n = 1 << L

    lines = []
    if method in (Method.BIN2, Method.BIN3, Method.HYBS):
        lines += _grid_lines_between(x0, x1, h, (ONE, ZERO))
        lines += _grid_lines_between(y0, y1, h, (ZERO, ONE))
        if method == Method.BIN2:
            # interpolant breakpoints of ((x+y)/2)^2 at (x+y)/2 = k h
            lines += [(ONE, ONE, 2 * c) for _, _, c in
                      _grid_lines_between((x0 + y0) / 2, (x1 + y1) / 2, h, (ONE, ZERO))]
        if method == Method.BIN3:
            lines += [(ONE, -ONE, 2 * c - 1) for _, _, c in
                      _grid_lines_between((x0 - y1 + 1) / 2, (x1 - y0 + 1) / 2, h, (ONE, ZERO))]
    elif method in (Method.NMDT, Method.TNMDT):
        lines += _grid_lines_between(x0, x1, h, (ONE, ZERO))
    else:  # dnmdt family
        lines += _grid_lines_between(x0, x1, h, (ONE, ZERO))
        lines += _grid_lines_between(y0, y1, h, (ZERO, ONE))

    # selector break lines inside discretization cells
    if method in (Method.NMDT, Method.TNMDT):
        for k in range(n):
            # min(dx, h y) and max(0, dx + h(y-1)) switch along these
            lines.append((ONE, -h, k * h))
            lines.append((ONE, h, (k + 1) * h))
    elif method in (Method.DNMDT, Method.TDNMDT):
        for kx in range(n):
            for ky in range(n):
                lines.append((ONE, -ONE, kx * h - ky * h))
                lines.append((ONE, ONE, (kx + ky + 1) * h))

    polys = [rect]
    for line in lines:
        a, b, c = line
        vals = [a * px + b * py for px, py in rect]
        if min(vals) < c < max(vals):
            polys = _split(polys, line)

    total = ZERO
    for poly in polys:
        cx = sum(p[0] for p in poly) / len(poly)
        cy = sum(p[1] for p in poly) / len(poly)
        band = _region_band_poly(method, L, h, cx, cy)
        total += _integrate_quadratic(band, poly)
    return total


def _region_band_poly(method, L, h, cx, cy):
    """Band polynomial (upper - lower envelope) valid around (cx, cy)."""
    n = 1 << L
    if method in (Method.BIN2, Method.BIN3, Method.HYBS):
        ix = _piece_index(cx, h, n)
        iy = _piece_index(cy, h, n)
        ex = _affine_piece_minus_square(ix, h, (ONE, ZERO, ZERO))
        ey = _affine_piece_minus_square(iy, h, (ZERO, ONE, ZERO))
        if method == Method.HYBS:
            return _poly_add(dict(ex), ey)
        out = {}
        _poly_add(out, ex, rat(1, 2))
        _poly_add(out, ey, rat(1, 2))
        if method == Method.BIN2:
            s = (cx + cy) / 2
            ip = _piece_index(s, h, n)
            ep = _affine_piece_minus_square(ip, h, (rat(1, 2), rat(1, 2), ZERO))
        else:
            q = (cx - cy + 1) / 2
            ip = _piece_index(q, h, n)
            ep = _affine_piece_minus_square(ip, h, (rat(1, 2), rat(-1, 2), rat(1, 2)))
        _poly_add(out, ep, rat(2))
        return out
    if method in (Method.NMDT, Method.TNMDT):
        k = _piece_index(cx, h, n)
        dx = {(1, 0): ONE, (0, 0): -k * h}
        hy = {(0, 1): h}
        upper = dx if _poly_eval(dx, cx, cy) <= _poly_eval(hy, cx, cy) else hy
        low2 = dict(dx)
        _poly_add(low2, {(0, 1): h, (0, 0): -h})
        lower = low2 if _poly_eval(low2, cx, cy) >= 0 else {}
        out = dict(upper)
        _poly_add(out, lower, rat(-1))
        return out
    # dnmdt family
    kx = _piece_index(cx, h, n)
    ky = _piece_index(cy, h, n)
    dx = {(1, 0): h, (0, 0): -kx * h * h}
    dy = {(0, 1): h, (0, 0): -ky * h * h}
    upper = dx if _poly_eval(dx, cx, cy) <= _poly_eval(dy, cx, cy) else dy
    low2 = {}
    _poly_add(low2, dx)
    _poly_add(low2, dy)
    _poly_add(low2, {(0, 0): -h * h})
    lower = low2 if _poly_eval(low2, cx, cy) >= 0 else {}
    out = dict(upper)
    _poly_add(out, lower, rat(-1))
    return out


def exact_cell_volumes(method, L, spacing_exp=None):
    """Band volume over every cell of a uniform grid with spacing
    2**-spacing_exp (default: the discretization spacing L)."""
    se = L if spacing_exp is None else spacing_exp
    step = pow2(-se)
    cells = {}
    for i in range(1 << se):
        for j in range(1 << se):
            cell = (i * step, (i + 1) * step, j * step, (j + 1) * step)
            cells[(i, j)] = cell_band_volume(method, L, cell)
    return cells


def exact_avg_error(method, L):
    """Total band volume over the unit box by exact integration."""
    return sum(exact_cell_volumes(method, L).values(), ZERO)


# ---------------------------------------------------------------------------
# empirical estimators
# ---------------------------------------------------------------------------

@dataclass
class ErrorReport:
    method: str
    L: int
    L1: int
    analytic_max: object
    analytic_avg: object
    empirical_max: float
    empirical_avg: float
    empirical_avg_se: float
    maximizer: tuple


def empirical_error(cfg, grid_exp=8, mc_samples=0, seed=0, l1_infinity=False):
    """Grid sweep of the pointwise band error plus optional Monte Carlo
    of the band volume, on the unit box."""
    oracle = EnvelopeOracle(cfg, (ZERO, ONE), (ZERO, ONE), l1_infinity=l1_infinity)
    n = (1 << grid_exp) + 1
    ticks = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(ticks, ticks, indexing="ij")
    lo, hi = oracle.band_np(X, Y)
    err = np.maximum(hi - X * Y, X * Y - lo)
    flat = int(np.argmax(err))
    argmax = (float(X.flat[flat]), float(Y.flat[flat]))
    emp_max = float(err.flat[flat])

    emp_avg = float("nan")
    emp_se = float("nan")
    if mc_samples:
        rng = np.random.default_rng(seed)
        done = 0
        total = 0.0
        total_sq = 0.0
        while done < mc_samples:
            chunk = min(mc_samples - done, 1 << 19)
            xs = rng.random(chunk)
            ys = rng.random(chunk)
            blo, bhi = oracle.band_np(xs, ys)
            band = bhi - blo
            total += float(band.sum())
            total_sq += float((band * band).sum())
            done += chunk
        emp_avg = total / mc_samples
        var = max(total_sq / mc_samples - emp_avg * emp_avg, 0.0)
        emp_se = (var / mc_samples) ** 0.5

    amax = analytic_max_error(cfg.method, cfg.L, cfg.L1)
    return ErrorReport(cfg.method.value, cfg.L, cfg.L1,
                       amax, analytic_avg_error(cfg.method, cfg.L),
                       emp_max, emp_avg, emp_se, argmax)


def empirical_univariate_error(cfg, grid_exp=12):
    """Sweep of over/underestimation of x*x on a dyadic grid; exact floats."""
    oracle = EnvelopeOracle(cfg, (ZERO, ONE))
    n = (1 << grid_exp) + 1
    X = np.linspace(0.0, 1.0, n)
    lo, hi = oracle.band_np(X)
    over = hi - X * X
    under = X * X - lo
    io, iu = int(np.argmax(over)), int(np.argmax(under))
    return {
        "over_max": float(over[io]), "over_argmax": float(X[io]),
        "under_max": float(under[iu]), "under_argmax": float(X[iu]),
    }
