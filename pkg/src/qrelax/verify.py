"""Machine checks for the structural claims: sharpness of the tightened
sawtooth relaxation, its preservation under every binary fixing, and the
known non-sharpness witnesses of the other families.

Everything here is exact: dyadic grids, rational LP solves, closed-form
hull oracles.  Each check runs two independent paths (analytic recursion
vs. brute-force enumeration with the builtin solver) and cross-asserts
them before comparing against the LP, so a bug in either path surfaces
as a contradiction instead of a silent pass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .bilinear import Method, RelaxationConfig, EnvelopeOracle, emit_bilinear, emit_univariate
from .milp import EQ, GE, MilpModel, lp_relax, solve_builtin
from .rational import ONE, ZERO, pow2, rat, to_rat
from .sawtooth import (
    SawtoothDepths,
    emit_tightened_sawtooth,
    epi_lower,
    pwl_square,
    tooth_path,
)

MAX_HEREDITARY_DEPTH = 3


class BudgetError(Exception):
    pass


# ---------------------------------------------------------------------------
# fixings and the bound recursion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Fixing:
    """A partial assignment of the branch binaries: level -> 0/1."""
    values: tuple  # sorted tuple of (level, value), levels 1-based

    @classmethod
    def of(cls, mapping):
        items = tuple(sorted((int(k), int(v)) for k, v in dict(mapping).items()))
        for lvl, val in items:
            if lvl < 1:
                raise ValueError("levels are 1-based")
            if val not in (0, 1):
                raise ValueError("fixed values must be 0 or 1")
        return cls(items)

    def as_dict(self):
        return dict(self.values)

    def levels(self):
        return {lvl for lvl, _ in self.values}


def bounds_recursion(fixing, L):
    """Exact per-level variable ranges of the LP under the fixing.

    Works backward from level L (always [0,1]): a fixed 0-branch halves
    the interval, a fixed 1-branch reflects then halves, and a free level
    symmetrizes around 1/2.
    """
    fixed = fixing.as_dict()
    bounds = [None] * (L + 1)
    a, b = ZERO, ONE
    bounds[L] = (a, b)
    for i in range(L, 0, -1):
        if i in fixed and fixed[i] == 0:
            a, b = a / 2, b / 2
        elif i in fixed:
            a, b = 1 - b / 2, 1 - a / 2
        else:
            a, b = a / 2, 1 - a / 2
        bounds[i - 1] = (a, b)
    return bounds


def mip_x_set(fixing, L):
    """x-values admitting a binary-feasible completion: a union of closed
    intervals, one per completion of the free levels, merged."""
    fixed = fixing.as_dict()
    free = [i for i in range(1, L + 1) if i not in fixed]
    intervals = []
    for pattern in itertools.product((0, 1), repeat=len(free)):
        full = dict(fixed)
        full.update(zip(free, pattern))
        a, b = ZERO, ONE
        for i in range(L, 0, -1):
            if full[i] == 0:
                a, b = a / 2, b / 2
            else:
                a, b = 1 - b / 2, 1 - a / 2
        intervals.append((a, b))
    intervals.sort()
    merged = []
    for a, b in intervals:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return tuple(merged)


def greedy_min_g(x, fixing, depths, bounds=None):
    """The z-minimizing chain values at fixed x: each free level takes the
    smallest of its three upper bounds, fixed levels follow their branch."""
    x = to_rat(x)
    L, L1 = depths.L, depths.L1
    if bounds is None:
        bounds = bounds_recursion(fixing, L)
    a0, b0 = bounds[0]
    if not a0 <= x <= b0:
        raise ValueError(f"x={x} outside the fixing's range [{a0}, {b0}]")
    fixed = fixing.as_dict()
    g = [x]
    for i in range(1, L1 + 1):
        prev = g[i - 1]
        if i in fixed:
            g.append(2 * prev if fixed[i] == 0 else 2 * (1 - prev))
        else:
            cap = bounds[i][1] if i <= L else ONE
            g.append(min(cap, 2 * prev, 2 * (1 - prev)))
    return g


def lower_cut_value(x, g, L1):
    """max over the emitted lower cuts evaluated at (x, g)."""
    x = to_rat(x)
    best = max(ZERO, 2 * x - 1)
    value = x
    for j in range(0, L1 + 1):
        if j > 0:
            value -= pow2(-2 * j) * g[j]
        cut = value - pow2(-2 * j - 2)
        if cut > best:
            best = cut
    return best


def greedy_zmin(x, fixing, depths):
    return lower_cut_value(x, greedy_min_g(x, fixing, depths), depths.L1)


# ---------------------------------------------------------------------------
# hulls over non-contiguous domains
# ---------------------------------------------------------------------------

def hull_over_gaps(intervals, func):
    """Convex-hull evaluator for a convex function restricted to an
    interval union: identity on the union, linear across each gap."""
    if not intervals:
        raise ValueError("empty domain")

    def value(x):
        x = to_rat(x)
        for a, b in intervals:
            if a <= x <= b:
                return func(x)
        for (a1, b1), (a2, _) in zip(intervals, intervals[1:]):
            if b1 < x < a2:
                lam = (a2 - x) / (a2 - b1)
                return lam * func(b1) + (1 - lam) * func(a2)
        raise ValueError(f"{x} outside conv(domain)")

    return value


def _lower_hull(points):
    """Lower convex hull of (x, v) points sorted by x (monotone chain)."""
    hull = []
    for p in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (p[0] - x1) * (y2 - y1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _upper_hull(points):
    neg = [(x, -v) for x, v in points]
    return [(x, -v) for x, v in _lower_hull(neg)]


def _eval_polyline(points, x):
    x = to_rat(x)
    for (x1, y1), (x2, y2) in zip(points, points[1:]):
        if x1 <= x <= x2:
            if x1 == x2:
                return min(y1, y2)
            t = (x - x1) / (x2 - x1)
            return y1 + t * (y2 - y1)
    raise ValueError(f"{x} outside polyline domain")


def _pw_max(f_pts, g_pts):
    """Breakpoint list of max(f, g) for two piecewise-linear point lists."""
    xs = sorted({x for x, _ in f_pts} | {x for x, _ in g_pts})
    out = []
    for x1, x2 in zip(xs, xs[1:]):
        f1, f2 = _eval_polyline(f_pts, x1), _eval_polyline(f_pts, x2)
        g1, g2 = _eval_polyline(g_pts, x1), _eval_polyline(g_pts, x2)
        out.append((x1, max(f1, g1)))
        d1, d2 = f1 - g1, f2 - g2
        if (d1 < 0 < d2) or (d2 < 0 < d1):
            t = d1 / (d1 - d2)
            xc = x1 + t * (x2 - x1)
            out.append((xc, _eval_polyline(f_pts, xc)))
    out.append((xs[-1], max(_eval_polyline(f_pts, xs[-1]), _eval_polyline(g_pts, xs[-1]))))
    return out


# ---------------------------------------------------------------------------
# pointwise envelope polylines of the univariate relaxations
# ---------------------------------------------------------------------------

def _epi_polyline(L1):
    """Exact breakpoints of the lower-cut envelope: vertices at odd
    multiples of 2^-(L1+2)."""
    step = pow2(-L1 - 2)
    n = 1 << (L1 + 2)
    return [(k * step, epi_lower(k * step, L1)) for k in range(n + 1)]


def _interpolant_polyline(L):
    step = pow2(-L)
    return [(k * step, (k * step) ** 2) for k in range((1 << L) + 1)]


def univariate_envelope_polylines(cfg):
    """(lower, upper) breakpoint lists of the projected MIP envelope of
    the univariate relaxation on [0, 1]."""
    L, L1 = cfg.L, cfg.L1
    h = pow2(-L)
    method = cfg.method
    if method in (Method.BIN2, Method.BIN3, Method.HYBS, Method.TDNMDT):
        return _epi_polyline(L1), _interpolant_polyline(L)
    if method in (Method.NMDT, Method.TNMDT):
        lower, upper = [], []
        for k in range(1 << L):
            a = k * h
            lower.append((a, a * a))
            upper.append((a, a * a))
            xk = (k + 1) * h / (1 + h)           # lower kink: dx + h(x-1) = 0
            if a < xk < a + h:
                lower.append((xk, k * h * xk))
            xu = k * h / (1 - h) if h != 1 else None  # upper kink: dx = h x
            if xu is not None and a < xu < a + h:
                upper.append((xu, k * h * xu + (xu - a)))
        lower.append((ONE, ONE))
        upper.append((ONE, ONE))
        if method == Method.TNMDT:
            lower = _pw_max(lower, _epi_polyline(L1))
        return lower, upper
    if method in (Method.DNMDT,):
        lower, upper = [], []
        for k in range(1 << L):
            a = k * h
            mid = a + h / 2
            lower.append((a, a * a))
            lower.append((mid, mid * mid - h * h / 4))
            upper.append((a, a * a))
        lower.append((ONE, ONE))
        upper.append((ONE, ONE))
        return lower, upper
    raise ValueError(f"no univariate polyline for {method}")


# ---------------------------------------------------------------------------
# sharpness checks
# ---------------------------------------------------------------------------

@dataclass
class PointCheck:
    x: object
    lp_min: object
    lp_max: object
    hull_min: object
    hull_max: object

    @property
    def gap(self):
        return max(self.hull_min - self.lp_min, self.lp_max - self.hull_max)

    def ordered(self):
        return self.lp_min <= self.hull_min and self.hull_max <= self.lp_max


@dataclass
class SharpnessReport:
    method: str
    L: int
    L1: int
    points: list = field(default_factory=list)
    sharp: bool = True
    max_gap: object = ZERO

    def record(self, check):
        self.points.append(check)
        if not check.ordered():
            raise AssertionError(
                f"relaxation ordering violated at x={check.x}: {check}")
        if check.gap > self.max_gap:
            self.max_gap = check.gap
        if check.gap != 0:
            self.sharp = False

    def to_json(self):
        return {
            "method": self.method, "L": self.L, "L1": self.L1,
            "sharp": self.sharp, "max_gap": str(self.max_gap),
            "n_points": len(self.points),
        }


def check_sharpness(cfg, grid_denom=64, emitter_depths=None):
    """Compare the LP z-range with the convex hull of the projected MIP at
    every grid point of the unit interval (univariate relaxations).

    `emitter_depths` deliberately emits different depths than the hull
    oracle assumes; the default uses the configured depths (honest check).
    """
    model = MilpModel(f"sharp_{cfg.method.value}")
    x = model.add_var("x", 0, 1)
    z = model.add_var("z", None, None, origin="aux-z")
    if emitter_depths is None:
        emit_univariate(model, x, z, cfg)
    else:
        emit_tightened_sawtooth(model, x, z, SawtoothDepths(*emitter_depths))

    lower_pts, upper_pts = univariate_envelope_polylines(cfg)
    gcm = _lower_hull(lower_pts)
    lcm = _upper_hull(upper_pts)
    relaxed = lp_relax(model)
    from .simplex import solve_lp

    report = SharpnessReport(cfg.method.value, cfg.L, cfg.L1)
    for k in range(grid_denom + 1):
        xv = rat(k, grid_denom)
        pin = {x: (xv, xv)}
        relaxed.set_objective({z: 1})
        lo = solve_lp(relaxed, pin)
        relaxed.set_objective({z: 1}, direction="max")
        hi = solve_lp(relaxed, pin)
        if lo.status != "optimal" or hi.status != "optimal":
            raise AssertionError(f"LP at x={xv} unexpectedly {lo.status}/{hi.status}")
        hull_lo = _eval_polyline(gcm, xv)
        hull_hi = _eval_polyline(lcm, xv)
        report.record(PointCheck(xv, lo.objective, hi.objective, hull_lo, hull_hi))
    return report


# ---------------------------------------------------------------------------
# hereditary sharpness
# ---------------------------------------------------------------------------

def _tsr_model(depths):
    model = MilpModel("tsr")
    x = model.add_var("x", 0, 1)
    z = model.add_var("z", None, None, origin="aux-z")
    block = emit_tightened_sawtooth(model, x, z, depths)
    return model, x, z, block


def _grid_in(intervals, denom):
    lo = intervals[0][0]
    hi = intervals[-1][1]
    pts = []
    k = 0
    while rat(k, denom) <= hi:
        v = rat(k, denom)
        if v >= lo:
            pts.append(v)
        k += 1
    return pts


@dataclass
class HereditaryReport:
    L: int
    L1: int
    patterns_checked: int = 0
    points_checked: int = 0
    hereditarily_sharp: bool = True
    failures: list = field(default_factory=list)

    def to_json(self):
        return {
            "L": self.L, "L1": self.L1,
            "patterns": self.patterns_checked, "points": self.points_checked,
            "hereditarily_sharp": self.hereditarily_sharp,
            "failures": [str(f) for f in self.failures[:10]],
        }


def check_hereditary(depths, grid_denom=64, cross_check=True):
    """For every fixing pattern (each level 0/1/free) compare the restricted
    LP with the hull of the restricted MIP, both exactly.

    The hull comes from the analytic path (interval recursion, cut
    envelope, gap interpolation, global chord); with `cross_check` the
    per-point envelope is re-derived by enumerating free binaries with the
    rational solver and asserted equal before use.
    """
    L, L1 = depths.L, depths.L1
    if L > MAX_HEREDITARY_DEPTH:
        raise BudgetError(f"hereditary check enumerates 3^L patterns; L={L} exceeds budget")
    model, xvar, zvar, block = _tsr_model(depths)
    from .simplex import solve_lp

    report = HereditaryReport(L, L1)
    for pattern in itertools.product((None, 0, 1), repeat=L):
        fixing = Fixing.of({i + 1: v for i, v in enumerate(pattern) if v is not None})
        fixed = fixing.as_dict()
        xset = mip_x_set(fixing, L)
        hull_lo_fn = hull_over_gaps(xset, lambda t: epi_lower(t, L1))
        xmin, xmax = xset[0][0], xset[-1][1]
        fl_min, fl_max = pwl_square(xmin, L), pwl_square(xmax, L)

        def hull_hi_fn(t):
            if xmax == xmin:
                return fl_min
            lam = (to_rat(t) - xmin) / (xmax - xmin)
            return fl_min + lam * (fl_max - fl_min)

        alpha_pin = {block.alpha[i - 1]: (rat(v), rat(v)) for i, v in fixed.items()}
        free_levels = [i for i in range(1, L + 1) if i not in fixed]

        def mip_env_at(xv):
            """Brute force over free binaries: exact envelope of the
            restricted MIP at xv, or None if xv is MIP-infeasible."""
            lo = hi = None
            for bits in itertools.product((0, 1), repeat=len(free_levels)):
                pins = dict(alpha_pin)
                pins[xvar] = (xv, xv)
                for lvl, bit in zip(free_levels, bits):
                    pins[block.alpha[lvl - 1]] = (rat(bit), rat(bit))
                relaxed = lp_relax(model)
                relaxed.set_objective({zvar: 1})
                rmin = solve_lp(relaxed, pins)
                if rmin.status != "optimal":
                    continue
                relaxed.set_objective({zvar: 1}, direction="max")
                rmax = solve_lp(relaxed, pins)
                lo = rmin.objective if lo is None or rmin.objective < lo else lo
                hi = rmax.objective if hi is None or rmax.objective > hi else hi
            return lo, hi

        if cross_check:
            for a, b in xset:
                for probe in (a, b, (a + b) / 2):
                    got_lo, got_hi = mip_env_at(probe)
                    want_lo, want_hi = epi_lower(probe, L1), pwl_square(probe, L)
                    if got_lo != want_lo or got_hi != want_hi:
                        raise AssertionError(
                            f"analytic vs brute-force envelope mismatch at x={probe}, "
                            f"fixing {fixed}: ({got_lo},{got_hi}) vs ({want_lo},{want_hi})")

        relaxed = lp_relax(model)
        for xv in _grid_in(xset, grid_denom):
            pins = dict(alpha_pin)
            pins[xvar] = (xv, xv)
            relaxed.set_objective({zvar: 1})
            rmin = solve_lp(relaxed, pins)
            relaxed.set_objective({zvar: 1}, direction="max")
            rmax = solve_lp(relaxed, pins)
            if rmin.status != "optimal":
                report.failures.append((fixed, xv, "LP infeasible inside conv(Xip)"))
                report.hereditarily_sharp = False
                continue
            lp_lo, lp_hi = rmin.objective, rmax.objective
            greedy = greedy_zmin(xv, fixing, depths)
            if greedy != lp_lo:
                raise AssertionError(
                    f"greedy minimizer disagrees with LP at x={xv}, fixing {fixed}: "
                    f"{greedy} vs {lp_lo}")
            hull_lo, hull_hi = hull_lo_fn(xv), hull_hi_fn(xv)
            if not (lp_lo <= hull_lo and hull_hi <= lp_hi):
                raise AssertionError(f"ordering violated at x={xv}, fixing {fixed}")
            if lp_lo != hull_lo or lp_hi != hull_hi:
                report.failures.append((fixed, xv, lp_lo, hull_lo, lp_hi, hull_hi))
                report.hereditarily_sharp = False
            report.points_checked += 1
        report.patterns_checked += 1
    return report


# ---------------------------------------------------------------------------
# non-sharpness counterexamples
# ---------------------------------------------------------------------------

@dataclass
class Counterexample:
    name: str
    point: tuple
    lp_value: object
    hull_value: object
    witness_value: object = None
    strict: bool = False

    def to_json(self):
        return {
            "name": self.name, "point": [str(v) for v in self.point],
            "lp": str(self.lp_value), "hull": str(self.hull_value),
            "witness": None if self.witness_value is None else str(self.witness_value),
            "strict_gap": self.strict,
        }


def _hybs_blocks_model(include_half=True):
    """hybs L=L1=1 without box McCormick; optionally with the unscaled
    lower row (the form the hand proof computes with)."""
    cfg = RelaxationConfig(Method.HYBS, 1, 1, include_mccormick=False)
    m = MilpModel("hybs_ce")
    x = m.add_var("x", 0, 1)
    y = m.add_var("y", 0, 1)
    z = m.add_var("z", None, None, origin="aux-z")
    handle = emit_bilinear(m, x, y, z, cfg)
    if not include_half:
        # add the proof-scaled row z >= zp1 - zx - zy as an extra system
        zs = m.add_var("z_unscaled", None, None, origin="aux-z")
        m.add_row({zs: 1, handle.parts["p1"].z: -1,
                  handle.parts["x"].z: 1, handle.parts["y"].z: 1}, GE, 0, "unscaled_lo")
    return m, x, y, z, handle, cfg


def _gcm_value_of_slice(cfg, xfixed, denom, at, side="min"):
    """Hull value at y=at of the projected (y, z) slice at x=xfixed,
    via the convex/concave hull of the exact pointwise envelope."""
    oracle = EnvelopeOracle(cfg, (ZERO, ONE), (ZERO, ONE))
    pts = []
    for k in range(denom + 1):
        yv = rat(k, denom)
        lo, hi = oracle.zrange(xfixed, yv)
        pts.append((yv, lo if side == "min" else hi))
    hull = _lower_hull(pts) if side == "min" else _upper_hull(pts)
    return _eval_polyline(hull, at)


def hybs_counterexample():
    """Strict LP-vs-hull gap of hybs (no box rows) at (x, y) = (0, 1/4)."""
    m, x, y, z, handle, cfg = _hybs_blocks_model()
    from .simplex import solve_lp

    pins = {x: (ZERO, ZERO), y: (rat(1, 4), rat(1, 4))}
    relaxed = lp_relax(m)
    relaxed.set_objective({z: 1})
    lp_min = solve_lp(relaxed, pins).objective
    hull_min = _gcm_value_of_slice(cfg, ZERO, 64, rat(1, 4), side="min")

    # the hand-constructed LP point: exact squares for the p-blocks, the
    # diagonal trick (g=0 via fractional alpha) for the x and y blocks
    witness = _hybs_witness_point(m, handle, ZERO, rat(1, 4))
    bad = lp_relax(m).check_assignment(witness)
    if bad:
        raise AssertionError(f"hybs witness point violates rows: {bad[:3]}")
    return Counterexample("hybs_lower", (ZERO, rat(1, 4)), lp_min, hull_min,
                          witness_value=witness[z], strict=lp_min < hull_min)


def _block_diag_point(vals, block, v):
    """Fill an LP point of a square block with z at its interpolant value
    reachable by the all-zero chain (alpha_j = g_{j-1})."""
    w = block.ub - block.lb
    xhat = (v - block.lb) / w
    vals[block.x] = v
    vals[block.xhat] = xhat
    for j, gid in enumerate(block.g):
        vals[gid] = xhat if j == 0 else ZERO
    prev = xhat
    for aid in block.alpha:
        vals[aid] = prev
        prev = ZERO
    vals[block.zhat] = xhat
    vals[block.z] = w * w * xhat + block.lb * (2 * v - block.lb)


def _block_exact_point(vals, block, v):
    """Fill a point of a square/epigraph block at the exact parabola."""
    w = block.ub - block.lb
    xhat = (v - block.lb) / w
    path = tooth_path(xhat, len(block.g) - 1)
    vals[block.x] = v
    vals[block.xhat] = xhat
    for j, gid in enumerate(block.g):
        vals[gid] = path[j]
    for j, aid in enumerate(block.alpha, start=1):
        vals[aid] = rat(1) if path[j - 1] > rat(1, 2) else ZERO
    vals[block.zhat] = xhat * xhat
    vals[block.z] = v * v


def _hybs_witness_point(model, handle, xv, yv):
    vals = {}
    _block_diag_point(vals, handle.parts["x"], xv)
    _block_diag_point(vals, handle.parts["y"], yv)
    _block_exact_point(vals, handle.parts["p1"], xv + yv)
    _block_exact_point(vals, handle.parts["p2"], xv - yv)
    vals[handle.parts["p1"].x] = xv + yv
    vals[handle.parts["p2"].x] = xv - yv
    zx, zy = vals[handle.parts["x"].z], vals[handle.parts["y"].z]
    zp1 = vals[handle.parts["p1"].z]
    vals[handle.z] = (zp1 - zx - zy) / 2
    vals[handle.x] = xv
    vals[handle.y] = yv
    return vals


def hybs_proof_scaling():
    """Same construction under the proof's unscaled lower row: the witness
    sits at z = -3/16 and the restricted MIP minimum is exactly -1/8."""
    m, x, y, z, handle, cfg = _hybs_blocks_model(include_half=False)
    zs = len(m.vars) - 1  # z_unscaled added last
    # solve min z_unscaled at (0, 1/4) as a MIP
    for var, val in ((x, ZERO), (y, rat(1, 4))):
        m.add_row({var: 1}, EQ, val, f"pin{var}")
    m.set_objective({zs: 1})
    mip_min = solve_builtin(m).objective

    witness = _hybs_witness_point(m, handle, ZERO, rat(1, 4))
    zx, zy = witness[handle.parts["x"].z], witness[handle.parts["y"].z]
    zp1 = witness[handle.parts["p1"].z]
    witness[zs] = zp1 - zx - zy
    bad = lp_relax(m).check_assignment(witness)
    if bad:
        raise AssertionError(f"unscaled witness violates rows: {bad[:3]}")
    return Counterexample("hybs_proof_scaling", (ZERO, rat(1, 4)),
                          lp_value=witness[zs], hull_value=mip_min,
                          witness_value=witness[zs],
                          strict=witness[zs] < mip_min)


def bin3_counterexample():
    """Upper-side analogue for bin3 (no box rows) at (0, 1/4)."""
    cfg = RelaxationConfig(Method.BIN3, 1, 1, include_mccormick=False)
    m = MilpModel("bin3_ce")
    x = m.add_var("x", 0, 1)
    y = m.add_var("y", 0, 1)
    z = m.add_var("z", None, None, origin="aux-z")
    emit_bilinear(m, x, y, z, cfg)
    from .simplex import solve_lp

    pins = {x: (ZERO, ZERO), y: (rat(1, 4), rat(1, 4))}
    relaxed = lp_relax(m)
    relaxed.set_objective({z: 1}, direction="max")
    lp_max = solve_lp(relaxed, pins).objective
    hull_max = _gcm_value_of_slice(cfg, ZERO, 64, rat(1, 4), side="max")
    return Counterexample("bin3_upper", (ZERO, rat(1, 4)), lp_max, hull_max,
                          strict=lp_max > hull_max)


def nmdt_zero_witness(method, L=2, L1=None):
    """The z = 0 LP point of the univariate discretizations at x = 1/2.

    All digit variables sit at 1/2, the residual takes the half-cell
    value, every product variable is 0.  The convex hull of the graph of
    x*x needs z >= 1/4 there; the projected-MIP hull also stays strictly
    above 0, so the formulation is not sharp.
    """
    cfg = RelaxationConfig(method, L, L1)
    m = MilpModel("nmdt_witness")
    x = m.add_var("x", 0, 1)
    z = m.add_var("z", None, None, origin="aux-z")
    handle = emit_univariate(m, x, z, cfg)
    from .simplex import solve_lp

    disc = handle.parts["disc"]
    vals = {x: rat(1, 2), z: ZERO, disc.delta: pow2(-L - 1)}
    for b in disc.beta:
        vals[b] = rat(1, 2)
    for u in handle.parts["u"]:
        vals[u] = ZERO
    vals[handle.parts["dz"]] = ZERO
    if disc.xhat is not None:
        vals[disc.xhat] = rat(1, 2)
    if "epi" in handle.parts:
        raise ValueError("witness applies to the untightened forms")
    bad = lp_relax(m).check_assignment(vals)
    if bad:
        raise AssertionError(f"{method} zero witness violates rows: {bad[:3]}")

    pins = {x: (rat(1, 2), rat(1, 2))}
    relaxed = lp_relax(m)
    relaxed.set_objective({z: 1})
    lp_min = solve_lp(relaxed, pins).objective

    lower_pts, _ = univariate_envelope_polylines(cfg)
    gcm = _lower_hull(lower_pts)
    hull_min = _eval_polyline(gcm, rat(1, 2))
    graph_hull_min = rat(1, 4)
    return Counterexample(f"{Method(method).value}_zero_point", (rat(1, 2),),
                          lp_min, hull_min, witness_value=graph_hull_min,
                          strict=lp_min < hull_min)


def counterexamples():
    """All recorded non-sharpness witnesses, each verified exactly."""
    return [
        hybs_counterexample(),
        hybs_proof_scaling(),
        bin3_counterexample(),
        nmdt_zero_witness(Method.NMDT),
        nmdt_zero_witness(Method.DNMDT),
    ]


# ---------------------------------------------------------------------------
# relaxation membership
# ---------------------------------------------------------------------------

def check_membership(cfg, n_points=100, seed=0, denom=1 << 10, solver_spot_checks=3):
    """Every graph point (x, y, xy) must extend to a feasible assignment
    of the emitted relaxation; checked by explicit witnesses, with a few
    points re-verified through the builtin solver."""
    import random

    rng = random.Random(seed)
    cfg_u = cfg
    m = MilpModel("member")
    x = m.add_var("x", 0, 1)
    y = m.add_var("y", 0, 1)
    z = m.add_var("z", None, None, origin="aux-z")
    emit_bilinear(m, x, y, z, cfg_u)
    oracle = EnvelopeOracle(cfg, (ZERO, ONE), (ZERO, ONE))
    checked = 0
    for k in range(n_points):
        xv = rat(rng.randrange(denom + 1), denom)
        yv = rat(rng.randrange(denom + 1), denom)
        lo, hi = oracle.zrange(xv, yv)
        if not lo <= xv * yv <= hi:
            raise AssertionError(f"graph point escapes envelope at {(xv, yv)}")
        checked += 1
        if k < solver_spot_checks:
            mm = MilpModel("spot")
            xs = mm.add_var("x", 0, 1)
            ys = mm.add_var("y", 0, 1)
            zs = mm.add_var("z", None, None, origin="aux-z")
            emit_bilinear(mm, xs, ys, zs, cfg_u)
            mm.add_row({xs: 1}, EQ, xv)
            mm.add_row({ys: 1}, EQ, yv)
            mm.add_row({zs: 1}, EQ, xv * yv)
            mm.set_objective({})
            res = solve_builtin(mm)
            if res.status != "optimal":
                raise AssertionError(f"graph point infeasible in MIP at {(xv, yv)}")
    return checked
