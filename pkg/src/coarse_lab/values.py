"""Exact norm values: rationals, p-th roots of rationals, and intervals.

A `NormValue` is either an exact rational, an exact p-th root of a
nonnegative rational (stored by its radicand, so squared/powered
comparisons stay in Q), or a rational interval [lo, hi].  Comparisons
between the two exact kinds are decided exactly by cross-powering.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .core import LabError, rat_str


def _int_nth_root(n: int, p: int) -> int:
    """floor(n ** (1/p)) for n >= 0."""
    if n < 0:
        raise ValueError("negative radicand")
    if p == 1 or n in (0, 1):
        return n
    if p == 2:
        return math.isqrt(n)
    x = int(round(n ** (1.0 / p))) + 1
    while x > 0 and x**p > n:
        x -= 1
    while (x + 1) ** p <= n:
        x += 1
    return x


def _exact_nth_root(q: Fraction, p: int) -> Fraction | None:
    """The rational p-th root of q, or None if irrational."""
    rn = _int_nth_root(q.numerator, p)
    rd = _int_nth_root(q.denominator, p)
    if rn**p == q.numerator and rd**p == q.denominator:
        return Fraction(rn, rd)
    return None


class NormValue:
    """Exact or interval-valued norm result."""

    __slots__ = ("kind", "value", "radicand", "degree", "lo", "hi")

    def __init__(self, kind: str, value=None, radicand=None, degree=None, lo=None, hi=None):
        self.kind = kind
        self.value = value
        self.radicand = radicand
        self.degree = degree
        self.lo = lo
        self.hi = hi

    # -- constructors -------------------------------------------------------

    @staticmethod
    def rational(q) -> NormValue:
        q = Fraction(q)
        return NormValue("rational", value=q)

    @staticmethod
    def root(radicand, degree: int = 2) -> NormValue:
        q = Fraction(radicand)
        if q < 0:
            raise LabError("BAD_RADICAND", "norm radicands must be nonnegative")
        exact = _exact_nth_root(q, degree)
        if exact is not None:
            return NormValue.rational(exact)
        return NormValue("root", radicand=q, degree=degree)

    @staticmethod
    def sqrt(radicand) -> NormValue:
        return NormValue.root(radicand, 2)

    @staticmethod
    def interval(lo, hi) -> NormValue:
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            raise LabError("BAD_INTERVAL", "interval norm with lo > hi")
        return NormValue("interval", lo=lo, hi=hi)

    # -- structure ----------------------------------------------------------

    def is_exact(self) -> bool:
        return self.kind in ("rational", "root")

    def squared(self) -> Fraction:
        """Exact square, defined for rationals and square roots."""
        if self.kind == "rational":
            return self.value * self.value
        if self.kind == "root" and self.degree == 2:
            return self.radicand
        raise LabError("NOT_SQUARABLE", f"no exact square for kind {self.kind}")

    def powered(self, p: int) -> Fraction:
        """Exact p-th power, defined when p is a multiple of the degree."""
        if self.kind == "rational":
            return self.value**p
        if self.kind == "root" and p % self.degree == 0:
            return self.radicand ** (p // self.degree)
        raise LabError("NOT_SQUARABLE", f"cannot raise kind {self.kind} to power {p}")

    def scale(self, c) -> NormValue:
        c = abs(Fraction(c))
        if self.kind == "rational":
            return NormValue.rational(c * self.value)
        if self.kind == "root":
            return NormValue.root(c**self.degree * self.radicand, self.degree)
        return NormValue.interval(c * self.lo, c * self.hi)

    # -- exact comparisons --------------------------------------------------

    def _cmp(self, other) -> int:
        other = as_norm_value(other)
        if not (self.is_exact() and other.is_exact()):
            raise LabError("INEXACT_COMPARE", "interval norm values are not totally ordered")
        pa = 1 if self.kind == "rational" else self.degree
        pb = 1 if other.kind == "rational" else other.degree
        va = self.value if self.kind == "rational" else None
        vb = other.value if other.kind == "rational" else None
        # roots are nonnegative; settle sign questions first
        if va is not None and vb is not None:
            return (va > vb) - (va < vb)
        if va is not None and va < 0:
            return -1
        if vb is not None and vb < 0:
            return 1
        lcm = pa * pb // math.gcd(pa, pb)
        qa = (va if va is not None else self.radicand) ** (lcm // pa)
        qb = (vb if vb is not None else other.radicand) ** (lcm // pb)
        return (qa > qb) - (qa < qb)

    def __eq__(self, other) -> bool:
        try:
            return self._cmp(other) == 0
        except LabError:
            o = as_norm_value(other)
            return self.kind == o.kind == "interval" and self.lo == o.lo and self.hi == o.hi

    def __lt__(self, other) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other) -> bool:
        return self._cmp(other) >= 0

    def __hash__(self):
        if self.kind == "rational":
            return hash(("nv", self.value))
        if self.kind == "root":
            return hash(("nv", self.radicand, self.degree))
        return hash(("nv", self.lo, self.hi))

    # -- rendering ----------------------------------------------------------

    def decimal(self, digits: int = 12) -> str:
        """Decimal rendering with `digits` digits after the point (truncated)."""
        if self.kind == "interval":
            lo = NormValue.rational(self.lo).decimal(digits)
            hi = NormValue.rational(self.hi).decimal(digits)
            return f"[{lo}, {hi}]"
        if self.kind == "rational":
            q, p = self.value, 1
            sign = "-" if q < 0 else ""
            q = abs(q)
        else:
            q, p = self.radicand, self.degree
            sign = ""
        scaled = q.numerator * 10 ** (digits * p)
        whole = _int_nth_root(scaled // q.denominator, p)
        s = str(whole).rjust(digits + 1, "0")
        return f"{sign}{s[:-digits]}.{s[-digits:]}" if digits else f"{sign}{s}"

    def __repr__(self) -> str:
        if self.kind == "rational":
            return rat_str(self.value)
        if self.kind == "root":
            if self.degree == 2:
                return f"sqrt({rat_str(self.radicand)})"
            return f"({rat_str(self.radicand)})^(1/{self.degree})"
        return f"[{rat_str(self.lo)}, {rat_str(self.hi)}]"


def as_norm_value(v) -> NormValue:
    if isinstance(v, NormValue):
        return v
    return NormValue.rational(Fraction(v))


def abs_diff_below(a: NormValue, b: NormValue, t: Fraction) -> bool:
    """Decide |a - b| < t exactly for exact NormValues and rational t > 0.

    For square roots this avoids forming the difference: |sqrt(x) - sqrt(y)| < t
    iff x + y - t^2 < 2 sqrt(xy), settled by one more squaring.
    """
    if t <= 0:
        return False
    qa, qb = a.squared(), b.squared()
    lhs = qa + qb - t * t
    if lhs < 0:
        return True
    return lhs * lhs < 4 * qa * qb
