"""Base norms, the James norm and its generalization, with brute-force oracles.

The production evaluators (`james_norm`, `tsirelson_norm`) are exact dynamic
programs; each has an independently formulated oracle (`james_norm_oracle`
enumerates gapped interval selections, `tsirelson_norm_oracle` enumerates
admissible families of arbitrary successive subsets) used to cross-check
them in the test suites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from .core import FinVector, LabError
from .rng import SplitMix
from .values import NormValue


@dataclass(frozen=True)
class NormOracle:
    """A pluggable evaluator for a normalized base norm."""

    name: str
    evaluate: Callable[[FinVector], NormValue]
    exactness: str
    normalized: bool = True
    one_unconditional: bool = False
    one_suppression: bool = False
    boundedly_complete_claimed: bool = False

    def __call__(self, x: FinVector) -> NormValue:
        return self.evaluate(x)


def _scaled_ints(x: FinVector) -> tuple[list[int], list[int], int]:
    """Support, integer coefficients, and the common denominator scaling them."""
    sup = sorted(x.entries)
    den = 1
    for v in x.entries.values():
        den = den * v.denominator // math.gcd(den, v.denominator)
    return sup, [int(x.entries[i] * den) for i in sup], den


# ---------------------------------------------------------------------------
# c0 / lp
# ---------------------------------------------------------------------------


def c0_norm(x: FinVector) -> NormValue:
    """Sup norm, exact rational."""
    if x.is_zero():
        return NormValue.rational(0)
    return NormValue.rational(max(abs(v) for v in x.entries.values()))


def lp_norm(x: FinVector, p: int) -> NormValue:
    """lp norm as an exact p-th root of a rational."""
    if p < 1:
        raise LabError("BAD_PARAMS", "p must be >= 1")
    if x.is_zero():
        return NormValue.rational(0)
    total = sum((abs(v) ** p for v in x.entries.values()), Fraction(0))
    return NormValue.root(total, p)


def summing_basis_vector(n: int, A: Iterable[int] | None = None) -> FinVector:
    """s_n(A) = indicator of the first n elements of A (default A = 1,2,3,...)."""
    if n < 1:
        raise LabError("BAD_PARAMS", "n must be >= 1")
    if A is None:
        idxs = list(range(1, n + 1))
    else:
        A = list(A)
        if any(A[i] >= A[i + 1] for i in range(len(A) - 1)):
            raise LabError("BAD_PARAMS", "A must be strictly increasing")
        if len(A) < n:
            raise LabError("A_TOO_SHORT", f"need {n} elements, got {len(A)}")
        idxs = A[:n]
    return FinVector({i: Fraction(1) for i in idxs}, "c0")


# ---------------------------------------------------------------------------
# James norm
# ---------------------------------------------------------------------------


def james_norm(x: FinVector) -> NormValue:
    """sup over interval partitions of the l2 sum of interval sums.

    Prefix DP over gapless partitions of the support hull; position j holds
    the best squared value of any partition of the first j support points.
    """
    if x.is_zero():
        return NormValue.rational(0)
    _, a, den = _scaled_ints(x)
    m = len(a)
    prefix = [0] * (m + 1)
    for i, v in enumerate(a):
        prefix[i + 1] = prefix[i] + v
    best = [0] * (m + 1)
    for j in range(1, m + 1):
        pj = prefix[j]
        best[j] = max(best[i] + (pj - prefix[i]) ** 2 for i in range(j))
    return NormValue.sqrt(Fraction(best[m], den * den))


def james_norm_oracle(x: FinVector) -> NormValue:
    """Exhaustive enumeration over gapped interval selections.

    Intervals are canonicalized to runs of support points (stretching an
    interval over zero coefficients changes nothing).  Cost is the number
    of disjoint-run families, which grows like Fibonacci(2m); hence the
    support cap.
    """
    if x.is_zero():
        return NormValue.rational(0)
    _, a, den = _scaled_ints(x)
    m = len(a)
    if m > 20:
        raise LabError("SUPPORT_TOO_LARGE", f"oracle supports <= 20 points, got {m}")
    prefix = [0] * (m + 1)
    for i, v in enumerate(a):
        prefix[i + 1] = prefix[i] + v
    best = 0

    def rec(i: int, acc: int):
        nonlocal best
        if acc > best:
            best = acc
        for start in range(i, m):
            ps = prefix[start]
            for end in range(start, m):
                s = prefix[end + 1] - ps
                rec(end + 1, acc + s * s)

    rec(0, 0)
    return NormValue.sqrt(Fraction(best, den * den))


# ---------------------------------------------------------------------------
# Tsirelson norm
# ---------------------------------------------------------------------------


def tsirelson_norm(x: FinVector) -> NormValue:
    """Exact Tsirelson norm by memoized recursion on support ranges.

    Convention: ||x|| = max(||x||_inf, 1/2 sup { sum_j ||E_j x|| }) with the
    sup over successive finite sets E_1 < ... < E_k, k <= min E_1.  Blocks
    may be taken to be intervals tiling a tail of the range: widening a set
    to its hull never decreases a term and preserves admissibility, and
    skipped points between blocks lose mass without relaxing k <= min E_1.
    """
    if x.is_zero():
        return NormValue.rational(0)
    sup = sorted(x.entries)
    vals = [abs(x.entries[i]) for i in sup]
    m = len(sup)
    memo: dict[tuple[int, int], Fraction] = {}

    def T(i: int, j: int) -> Fraction:
        key = (i, j)
        got = memo.get(key)
        if got is not None:
            return got
        best = max(vals[i : j + 1])
        for i2 in range(i, j + 1):
            kmax = min(j - i2 + 1, sup[i2])
            if kmax < 2:
                continue
            # max over tilings of i2..j into 2..kmax interval blocks
            g: dict[tuple[int, int], Fraction] = {}

            def tail_best(pos: int, budget: int) -> Fraction:
                gk = (pos, budget)
                got2 = g.get(gk)
                if got2 is not None:
                    return got2
                out = T(pos, j)
                if budget >= 2:
                    for end in range(pos, j):
                        cand = T(pos, end) + tail_best(end + 1, budget - 1)
                        if cand > out:
                            out = cand
                g[gk] = out
                return out

            for end in range(i2, j):
                cand = (T(i2, end) + tail_best(end + 1, kmax - 1)) / 2
                if cand > best:
                    best = cand
        memo[key] = best
        return best

    return NormValue.rational(T(0, m - 1))


def tsirelson_norm_oracle(x: FinVector) -> NormValue:
    """Tsirelson norm by direct enumeration of admissible subset families.

    Independent route: blocks are arbitrary successive finite subsets of the
    support (no interval canonicalization), memoized on frozen node sets.
    """
    if x.is_zero():
        return NormValue.rational(0)
    sup = tuple(sorted(x.entries))
    if len(sup) > 10:
        raise LabError("SUPPORT_TOO_LARGE", "oracle supports <= 10 points")
    val = {i: abs(x.entries[i]) for i in sup}
    memo: dict[tuple[int, ...], Fraction] = {}
    fam_memo: dict[tuple[tuple[int, ...], int], Fraction] = {}

    def subsets_containing_first(elems: tuple[int, ...]):
        first, rest = elems[0], elems[1:]
        for mask in range(1 << len(rest)):
            block = (first,) + tuple(rest[t] for t in range(len(rest)) if mask >> t & 1)
            yield block

    def fam_value(elems: tuple[int, ...], budget: int) -> Fraction:
        """Best total over <= budget successive blocks drawn from elems."""
        if not elems or budget <= 0:
            return Fraction(0)
        key = (elems, budget)
        got = fam_memo.get(key)
        if got is not None:
            return got
        best = fam_value(elems[1:], budget)
        for block in subsets_containing_first(elems):
            top = block[-1]
            after = tuple(e for e in elems if e > top)
            cand = TO(block) + fam_value(after, budget - 1)
            if cand > best:
                best = cand
        fam_memo[key] = best
        return best

    def TO(elems: tuple[int, ...]) -> Fraction:
        got = memo.get(elems)
        if got is not None:
            return got
        best = max(val[e] for e in elems)
        for i0 in range(len(elems)):
            first = elems[i0]
            for block in subsets_containing_first(elems[i0:]):
                if len(block) == len(elems):
                    continue  # single block equal to the whole set: self-referential, never optimal
                top = block[-1]
                after = tuple(e for e in elems if e > top)
                cand = (TO(block) + fam_value(after, first - 1)) / 2
                if cand > best:
                    best = cand
        memo[elems] = best
        return best

    return NormValue.rational(TO(sup))


# ---------------------------------------------------------------------------
# Dual Tsirelson interval bounds
# ---------------------------------------------------------------------------


def _simplex_max(
    c: list[Fraction], rows: list[list[Fraction]], rhs: list[Fraction]
) -> tuple[Fraction, list[Fraction]]:
    """Exact simplex: maximize c.x s.t. rows.x <= rhs, x >= 0, rhs >= 0.

    The origin is feasible, so a single phase with Bland's rule suffices.
    """
    m, n = len(rows), len(c)
    tab = [
        [Fraction(v) for v in rows[i]]
        + [Fraction(1) if j == i else Fraction(0) for j in range(m)]
        + [Fraction(rhs[i])]
        for i in range(m)
    ]
    z = [-Fraction(v) for v in c] + [Fraction(0)] * (m + 1)
    basis = [n + i for i in range(m)]
    while True:
        enter = next((j for j in range(n + m) if z[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][-1] / tab[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise LabError("LP_UNBOUNDED", "dual bound LP is unbounded")
        piv = tab[leave][enter]
        tab[leave] = [v / piv for v in tab[leave]]
        row_l = tab[leave]
        for i in range(m):
            f = tab[i][enter]
            if i != leave and f != 0:
                tab[i] = [a - f * b for a, b in zip(tab[i], row_l)]
        f = z[enter]
        if f != 0:
            z = [a - f * b for a, b in zip(z, row_l)]
        basis[leave] = enter
    x = [Fraction(0)] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = tab[i][-1]
    return sum((ci * xi for ci, xi in zip(c, x)), Fraction(0)), x


def _tsirelson_functionals(support: list[int], depth: int, cap: int = 4000) -> list[tuple[Fraction, ...]]:
    """Nonnegative depth-truncated Tsirelson norming functionals on `support`.

    Functionals are coefficient tuples aligned to the (sorted) support.
    Each level closes under f = (f_1 + ... + f_k)/2 for successive f_j with
    k <= min supp(f_1) in absolute indices.  Dominated functionals are
    dropped: for x >= 0 their constraints are implied.
    """
    n = len(support)
    singles = [tuple(Fraction(1) if t == i else Fraction(0) for t in range(n)) for i in range(n)]
    pool: set[tuple[Fraction, ...]] = set(singles)

    def min_pos(f):
        return next(t for t in range(n) if f[t] != 0)

    def max_pos(f):
        return next(t for t in reversed(range(n)) if f[t] != 0)

    for _ in range(depth):
        items = sorted(pool, key=min_pos)
        new: set[tuple[Fraction, ...]] = set()

        def extend(acc: tuple[Fraction, ...], last_max: int, budget: int, count: int):
            if len(new) + len(pool) > cap:
                return
            if count >= 2:
                new.add(tuple(v / 2 for v in acc))
            if budget <= 0:
                return
            for f in items:
                mp = min_pos(f)
                if mp > last_max:
                    extend(tuple(a + b for a, b in zip(acc, f)), max_pos(f), budget - 1, count + 1)

        for f in items:
            extend(f, max_pos(f), support[min_pos(f)] - 1, 1)
        pool |= new

    # domination pruning (exact: constraints for dominated f are redundant)
    items = sorted(pool, key=lambda f: (-sum(f),))
    kept: list[tuple[Fraction, ...]] = []
    for f in items:
        if not any(all(g[t] >= f[t] for t in range(n)) for g in kept):
            kept.append(f)
    return kept


def tsirelson_dual_bounds(y: FinVector, depth: int, tol: Fraction | None = None) -> NormValue:
    """Certified interval around the dual Tsirelson norm of y.

    hi comes from the LP max y.x over the polytope cut out by the
    depth-truncated norming set (a relaxation of the T unit ball);
    lo evaluates y at the LP optimizer scaled into the exact ball.
    """
    if len(y.entries) > 10:
        raise LabError("SUPPORT_TOO_LARGE", "dual bounds support <= 10 points")
    if y.is_zero():
        return NormValue.interval(0, 0)
    support = sorted(y.entries)
    yabs = [abs(y.entries[i]) for i in support]  # 1-unconditional: WLOG y >= 0
    funcs = _tsirelson_functionals(support, depth)
    hi, xstar = _simplex_max(yabs, [list(f) for f in funcs], [Fraction(1)] * len(funcs))
    xv = FinVector({i: v for i, v in zip(support, xstar)}, "T")
    lo = Fraction(0)
    if not xv.is_zero():
        tn = tsirelson_norm(xv).value
        lo = sum((a * b for a, b in zip(yabs, xstar)), Fraction(0)) / tn
    if lo > hi:
        raise LabError("INTERNAL", "dual bound inversion; LP or norm is wrong")
    if tol is not None and hi - lo > tol:
        raise LabError("DEPTH_TOO_SMALL", f"gap {hi - lo} exceeds tolerance {tol}")
    return NormValue.interval(lo, hi)


# ---------------------------------------------------------------------------
# Generalized James norm J(e_i)
# ---------------------------------------------------------------------------


def generalized_james_norm(x: FinVector, E: NormOracle) -> NormValue:
    """sup over interval systems p(1)<=q(1)<p(2)<=... of ||sum_i (interval sum) e_{p(i)}||_E.

    For symmetric bases (c0, lp) the anchor indices p(i) are irrelevant and a
    gapped-selection DP is used.  Generically every anchor placement within
    the hull is enumerated with l1-bound pruning; exponential, hence the caps.
    """
    if not E.one_unconditional:
        raise LabError("NOT_UNCONDITIONAL", f"base oracle {E.name} must be 1-unconditional")
    if x.is_zero():
        return NormValue.rational(0)
    sup, a, den = _scaled_ints(x)
    m = len(a)
    prefix = [0] * (m + 1)
    for i, v in enumerate(a):
        prefix[i + 1] = prefix[i] + v

    if E.name == "c0":
        best = max(
            abs(prefix[end + 1] - prefix[start])
            for start in range(m)
            for end in range(start, m)
        )
        return NormValue.rational(Fraction(best, den))

    if E.name.startswith("lp:"):
        p = int(E.name.split(":", 1)[1])
        g: list[int | None] = [None] * (m + 1)
        g[m] = 0
        for i in range(m - 1, -1, -1):
            best = g[i + 1]
            for j in range(i, m):
                cand = abs(prefix[j + 1] - prefix[i]) ** p + g[j + 1]
                if cand > best:
                    best = cand
            g[i] = best
        return NormValue.root(Fraction(g[0], den**p), p)

    if m > 18:
        raise LabError("SUPPORT_TOO_LARGE", f"generic base enumeration supports <= 18, got {m}")
    if sup[-1] - sup[0] + 1 > 64:
        raise LabError("SUPPORT_TOO_LARGE", "generic base enumeration needs hull <= 64")

    abs_tail = [Fraction(0)] * (m + 1)
    for i in range(m - 1, -1, -1):
        abs_tail[i] = abs_tail[i + 1] + Fraction(abs(a[i]), den)
    best_nv = NormValue.rational(0)

    def rec(pos: int, next_anchor: int, collapsed: dict[int, Fraction], cur_l1: Fraction):
        nonlocal best_nv
        if collapsed:
            val = E(FinVector(dict(collapsed)))
            if val > best_nv:
                best_nv = val
        if pos >= m or NormValue.rational(cur_l1 + abs_tail[pos]) <= best_nv:
            return
        for start in range(pos, m):
            ps = prefix[start]
            for end in range(start, m):
                s = Fraction(prefix[end + 1] - ps, den)
                if s == 0:
                    continue
                for anchor in range(max(next_anchor, 1), sup[start] + 1):
                    collapsed[anchor] = s
                    rec(end + 1, sup[end] + 1, collapsed, cur_l1 + abs(s))
                    del collapsed[anchor]

    rec(0, 1, {}, Fraction(0))
    return best_nv


# ---------------------------------------------------------------------------
# Mean-zero block generator
# ---------------------------------------------------------------------------


def mean_zero_blocks(seed: int, count: int, width: int) -> list[FinVector]:
    """Deterministic successive blocks u_i with summing functional S(u_i) = 0.

    Block i lives on the window [(i-1)*width+1, i*width]; the last coefficient
    cancels the rest exactly.
    """
    if count < 1 or width < 1:
        raise LabError("BAD_PARAMS", "count and width must be >= 1")
    gen = SplitMix(seed)
    blocks = []
    for b in range(count):
        lo = b * width + 1
        entries: dict[int, Fraction] = {}
        if width >= 2:
            while True:
                head = [gen.rational(4, 3) for _ in range(width - 1)]
                if any(v != 0 for v in head):
                    break
            for off, v in enumerate(head):
                if v != 0:
                    entries[lo + off] = v
            tail = -sum(head)
            if tail != 0:
                entries[lo + width - 1] = tail
        blocks.append(FinVector(entries, "J"))
    return blocks


# ---------------------------------------------------------------------------
# Oracle registry / space tags
# ---------------------------------------------------------------------------


def get_oracle(tag: str) -> NormOracle:
    """Resolve a space tag: c0, lp:<p>, J, T, Je:<base tag>."""
    if tag == "c0":
        return NormOracle("c0", c0_norm, "exact-rational", True, True, True, False)
    if tag.startswith("lp:"):
        p = int(tag.split(":", 1)[1])
        if p < 1:
            raise LabError("BAD_PARAMS", "p must be >= 1")
        return NormOracle(
            tag, lambda x, p=p: lp_norm(x, p), "exact-squared-rational", True, True, True, True
        )
    if tag == "J":
        return NormOracle("J", james_norm, "exact-squared-rational", True, False, False, True)
    if tag == "T":
        return NormOracle("T", tsirelson_norm, "exact-rational", True, True, True, True)
    if tag.startswith("Je:"):
        base = get_oracle(tag.split(":", 1)[1])
        return NormOracle(
            tag,
            lambda x, base=base: generalized_james_norm(x, base),
            base.exactness,
            True,
            False,
            False,
            True,
        )
    raise LabError("UNKNOWN_SPACE", f"no norm registered for tag {tag!r}")


def space_norm(tag: str, x: FinVector) -> NormValue:
    return get_oracle(tag)(x)
