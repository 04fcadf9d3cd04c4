"""Exact rational arithmetic helpers.

All verification math in this package runs on exact rationals so that
strict gaps (e.g. an LP value of 1/32 below a hull value) are never
masked by float noise.  gmpy2's mpq is used when available because it is
roughly an order of magnitude faster than fractions.Fraction in the
simplex inner loop; both behave identically otherwise.
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as _mpq

    def rat(a, b=1):
        return _mpq(a, b)

    RAT_BACKEND = "gmpy2"
except ImportError:  # pragma: no cover - exercised only without gmpy2
    def rat(a, b=1):
        return Fraction(a, b)

    RAT_BACKEND = "fractions"

ZERO = rat(0)
ONE = rat(1)
HALF = rat(1, 2)


def to_rat(value):
    """Convert int/float/str/Fraction to the package rational type, exactly.

    Floats convert via as_integer_ratio, so every IEEE double maps to the
    dyadic rational it actually stores.
    """
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("cannot convert NaN/inf to a rational")
        num, den = value.as_integer_ratio()
        return rat(num, den)
    if isinstance(value, int):
        return rat(value)
    if isinstance(value, str):
        if "/" in value:
            num, den = value.split("/", 1)
            return rat(int(num), int(den))
        return to_rat(float(value))
    if isinstance(value, Fraction):
        return rat(value.numerator, value.denominator)
    return rat(value)


def pow2(k):
    """2**k as an exact rational, for any integer k (negative allowed)."""
    if k >= 0:
        return rat(1 << k)
    return rat(1, 1 << (-k))


def rat_str(value):
    """Stable 'p/q' rendering used in JSON reports."""
    return str(value)
