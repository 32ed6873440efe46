"""Schreier families, well-founded increasing trees, finite Ramsey search,
interlacing graphs with their shortest-path metrics, and the pigeonhole
window extractor.
"""

from __future__ import annotations

import itertools
from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .core import LabError, rat


# ---------------------------------------------------------------------------
# Ordinals below omega^omega in Cantor normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrdinalCNF:
    """Ordinal < omega^omega: sum of w^e * c terms, exponents strictly decreasing."""

    terms: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for e, c in self.terms:
            if e < 0 or c < 1:
                raise LabError("ALPHA_OUT_OF_RANGE", "exponents >= 0 and coefficients >= 1")
        exps = [e for e, _ in self.terms]
        if exps != sorted(exps, reverse=True) or len(set(exps)) != len(exps):
            raise LabError("ALPHA_OUT_OF_RANGE", "terms must have strictly decreasing exponents")

    @staticmethod
    def from_int(n: int) -> OrdinalCNF:
        if n < 0:
            raise LabError("ALPHA_OUT_OF_RANGE", "negative ordinal")
        return OrdinalCNF(((0, n),) if n else ())

    @staticmethod
    def omega(power: int = 1, coeff: int = 1) -> OrdinalCNF:
        return OrdinalCNF(((power, coeff),))

    @staticmethod
    def parse(text: str) -> OrdinalCNF:
        """Grammar: terms `w^<nat>*<nat>` | `w^<nat>` | `w*<nat>` | `w` | `<nat>`, joined by `+`."""
        acc: dict[int, int] = {}
        for tok in text.replace(" ", "").split("+"):
            if not tok:
                raise LabError("ALPHA_OUT_OF_RANGE", "empty ordinal term")
            if tok.startswith("w"):
                rest = tok[1:]
                power, coeff = 1, 1
                if rest.startswith("^"):
                    rest = rest[1:]
                    head = rest.split("*", 1)
                    power = int(head[0])
                    coeff = int(head[1]) if len(head) > 1 else 1
                elif rest.startswith("*"):
                    coeff = int(rest[1:])
                elif rest:
                    raise LabError("ALPHA_OUT_OF_RANGE", f"bad ordinal term {tok!r}")
                acc[power] = acc.get(power, 0) + coeff
            else:
                acc[0] = acc.get(0, 0) + int(tok)
        terms = tuple((e, c) for e, c in sorted(acc.items(), reverse=True) if c)
        return OrdinalCNF(terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_successor(self) -> bool:
        return bool(self.terms) and self.terms[-1][0] == 0

    def is_limit(self) -> bool:
        return bool(self.terms) and self.terms[-1][0] > 0

    def predecessor(self) -> OrdinalCNF:
        if not self.is_successor():
            raise LabError("ALPHA_OUT_OF_RANGE", "predecessor of a non-successor")
        e, c = self.terms[-1]
        rest = self.terms[:-1]
        return OrdinalCNF(rest + ((e, c - 1),) if c > 1 else rest)

    def fundamental(self, n: int) -> OrdinalCNF:
        """Canonical fundamental sequence: (beta + w^a)_n = beta + w^(a-1) * n."""
        if not self.is_limit():
            raise LabError("ALPHA_OUT_OF_RANGE", "fundamental sequence of a non-limit")
        if n < 1:
            raise LabError("ALPHA_OUT_OF_RANGE", "fundamental index must be >= 1")
        e, c = self.terms[-1]
        base = self.terms[:-1] + (((e, c - 1),) if c > 1 else ())
        return OrdinalCNF(base + ((e - 1, n),))

    def _key(self):
        return self.terms

    def __lt__(self, other: OrdinalCNF) -> bool:
        for (e1, c1), (e2, c2) in zip(self.terms, other.terms):
            if e1 != e2:
                return e1 < e2
            if c1 != c2:
                return c1 < c2
        return len(self.terms) < len(other.terms)

    def __le__(self, other: OrdinalCNF) -> bool:
        return self == other or self < other

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            if e == 0:
                parts.append(str(c))
            elif e == 1:
                parts.append("w" + (f"*{c}" if c > 1 else ""))
            else:
                parts.append(f"w^{e}" + (f"*{c}" if c > 1 else ""))
        return "+".join(parts)


@dataclass(frozen=True)
class SchreierFamily:
    alpha: OrdinalCNF


# ---------------------------------------------------------------------------
# Schreier membership
# ---------------------------------------------------------------------------


def _check_increasing(E: Iterable[int]) -> tuple[int, ...]:
    E = tuple(E)
    if any(not isinstance(v, int) or v < 1 for v in E):
        raise LabError("BAD_SET", "set elements must be integers >= 1")
    if any(E[i] >= E[i + 1] for i in range(len(E) - 1)):
        raise LabError("BAD_SET", "set must be strictly increasing")
    return E

_member_memo: dict[tuple, bool] = {}


def _member(E: tuple[int, ...], alpha: OrdinalCNF, memo: dict) -> bool:
    if not E:
        return False
    key = (E, alpha.terms)
    got = memo.get(key)
    if got is not None:
        return got
    if alpha.is_zero():
        out = len(E) == 1
    elif alpha.is_successor():
        gamma = alpha.predecessor()
        out = _member_successor(E, gamma, memo)
    else:
        out = any(_member(E, alpha.fundamental(n), memo) for n in range(1, E[0] + 1))
    memo[key] = out
    return out


def _member_successor(E: tuple[int, ...], gamma: OrdinalCNF, memo: dict) -> bool:
    """E = E_1 u ... u E_n with n <= min E, consecutive chunks each in S_gamma."""
    m = len(E)

    def split(i: int, blocks_left: int) -> bool:
        if i == m:
            return True
        if blocks_left == 0:
            return False
        for j in range(m, i, -1):  # longest admissible prefix first
            if _member(E[i:j], gamma, memo) and split(j, blocks_left - 1):
                return True
        return False

    return any(split(0, n) for n in range(min(E[0], m), 0, -1))


def schreier_member(E: Iterable[int], alpha: OrdinalCNF) -> bool:
    """Decide E in S_alpha via backtracking over chunk decompositions.

    Longest-prefix chunks are tried first as a heuristic; the search is
    exhaustive, so the answer is exact.
    """
    E = _check_increasing(E)
    if len(_member_memo) > 1_000_000:
        _member_memo.clear()
    return _member(E, alpha, _member_memo)


def schreier_member_oracle(E: Iterable[int], alpha: OrdinalCNF) -> bool:
    """Independent oracle: plain exhaustive search over all decompositions."""
    E = _check_increasing(E)
    if len(E) > 10:
        raise LabError("RANGE_TOO_LARGE", "oracle supports sets of size <= 10")

    def member(E: tuple[int, ...], a: OrdinalCNF) -> bool:
        if not E:
            return False
        if a.is_zero():
            return len(E) == 1
        if a.is_limit():
            return any(member(E, a.fundamental(n)) for n in range(1, E[0] + 1))
        gamma = a.predecessor()
        m = len(E)

        def split(i: int, blocks_left: int) -> bool:
            if i == m:
                return True
            if blocks_left == 0:
                return False
            return any(
                member(E[i:j], gamma) and split(j, blocks_left - 1) for j in range(i + 1, m + 1)
            )

        return any(split(0, n) for n in range(1, min(E[0], m) + 1))

    return member(E, alpha)


def schreier_maximal_sets(alpha: OrdinalCNF, N: int) -> list[tuple[int, ...]]:
    """All inclusion-maximal members of S_alpha inside [1..N].

    S_alpha is hereditary for nonempty subsets, so DFS with membership
    pruning enumerates exactly the members, and maximality reduces to
    single-element extensions.
    """
    if N < 1 or N > 30:
        raise LabError("RANGE_TOO_LARGE", "N must be within 1..30")
    if alpha.terms and alpha.terms[0][0] >= 2:
        raise LabError("RANGE_TOO_LARGE", "maximal-set enumeration supports alpha < w^2")
    members: list[tuple[int, ...]] = []

    def extend(cur: tuple[int, ...]):
        start = cur[-1] + 1 if cur else 1
        for v in range(start, N + 1):
            cand = cur + (v,)
            if schreier_member(cand, alpha):
                members.append(cand)
                extend(cand)

    extend(())
    out = []
    for E in members:
        Eset = set(E)
        if not any(
            schreier_member(tuple(sorted(Eset | {v})), alpha)
            for v in range(1, N + 1)
            if v not in Eset
        ):
            out.append(E)
    return out


# ---------------------------------------------------------------------------
# Increasing well-founded trees and the chain extractor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IncreasingTree:
    """Prefix-closed family of strictly increasing integer tuples."""

    sequences: frozenset[tuple[int, ...]]

    def __post_init__(self):
        for seq in self.sequences:
            if any(seq[i] >= seq[i + 1] for i in range(len(seq) - 1)):
                raise LabError("BAD_TREE", f"sequence {seq} not strictly increasing")
            if len(seq) > 1 and seq[:-1] not in self.sequences:
                raise LabError("BAD_TREE", f"tree not prefix-closed at {seq}")

    @staticmethod
    def from_family(sets: Iterable[Iterable[int]]) -> IncreasingTree:
        seqs: set[tuple[int, ...]] = set()
        for s in sets:
            t = tuple(sorted(set(s)))
            for i in range(1, len(t) + 1):
                seqs.add(t[:i])
        return IncreasingTree(frozenset(seqs))

    def contains(self, seq: tuple[int, ...]) -> bool:
        return tuple(seq) in self.sequences


def wfl_chain_extract(
    T: IncreasingTree, js: Iterable[int], covers: Iterable[tuple[int, ...]]
) -> tuple[int, ...]:
    """Extract a chain (l_1 < ... < l_t) in T with l_i <= j_i by iterated pigeonhole.

    covers[n-1] must be a member of T containing {j_1, ..., j_n}.  At stage i
    the most frequent i-th coordinate among the surviving covers is tried
    first; backtracking keeps the extraction total (the last cover's prefix
    is always a live branch).
    """
    js = _check_increasing(js)
    t = len(js)
    covers = [tuple(A) for A in covers]
    if len(covers) < t:
        raise LabError("HYPOTHESIS_VIOLATED", f"need at least {t} covers, got {len(covers)}")
    for n, A in enumerate(covers, start=1):
        if not T.contains(A):
            raise LabError("HYPOTHESIS_VIOLATED", f"cover {A} is not in the tree")
        need = set(js[: min(n, t)])
        if not need.issubset(A):
            raise LabError("HYPOTHESIS_VIOLATED", f"cover #{n} misses {sorted(need - set(A))}")

    pool0 = [(n, A) for n, A in enumerate(covers, start=1)]

    def stage(i: int, pool) -> tuple[int, ...] | None:
        if i > t:
            return ()
        live = [(n, A) for n, A in pool if n >= i and len(A) >= i]
        counts = Counter(A[i - 1] for _, A in live)
        for l in sorted(counts, key=lambda v: (-counts[v], v)):
            if l > js[i - 1]:
                continue
            rest = stage(i + 1, [(n, A) for n, A in live if A[i - 1] == l])
            if rest is not None:
                return (l,) + rest
        return None

    chain = stage(1, pool0)
    if chain is None:
        raise LabError("HYPOTHESIS_VIOLATED", "no chain consistent with the covers")
    return chain


# ---------------------------------------------------------------------------
# Finite Ramsey homogenization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """Total coloring of the k-subsets of a ground set."""

    k: int
    colors: int
    assign: Callable[[tuple[int, ...]], int]

    @staticmethod
    def from_dict(k: int, colors: int, table: Mapping[frozenset, int]) -> Partition:
        def assign(subset: tuple[int, ...]) -> int:
            return table[frozenset(subset)]

        return Partition(k, colors, assign)

    def color_of(self, subset: Iterable[int]) -> int:
        c = self.assign(tuple(sorted(subset)))
        if not 0 <= c < self.colors:
            raise LabError("BAD_PARTITION", f"color {c} out of range")
        return c


@dataclass(frozen=True)
class HomogeneousResult:
    H: tuple[int, ...]
    color: int
    exact: bool


def _max_mono_subset(P: Partition, ground: tuple[int, ...], color: int) -> tuple[int, ...]:
    """Branch-and-bound maximum subset with every k-subset of the given color."""
    k = P.k
    best: list[tuple[int, ...]] = [()]

    def compatible(chosen: tuple[int, ...], x: int) -> bool:
        if len(chosen) < k - 1:
            return True
        return all(
            P.color_of(sub + (x,)) == color for sub in itertools.combinations(chosen, k - 1)
        )

    def grow(chosen: tuple[int, ...], pool: tuple[int, ...]):
        if len(chosen) > len(best[0]):
            best[0] = chosen
        for idx, x in enumerate(pool):
            if len(chosen) + len(pool) - idx <= len(best[0]):
                return  # cannot beat the incumbent
            if compatible(chosen, x):
                grow(chosen + (x,), pool[idx + 1 :])

    grow((), ground)
    return best[0]


def _greedy_mono_subset(P: Partition, ground: tuple[int, ...], color: int) -> tuple[int, ...]:
    chosen: tuple[int, ...] = ()
    for x in ground:
        if len(chosen) < P.k - 1 or all(
            P.color_of(sub + (x,)) == color
            for sub in itertools.combinations(chosen, P.k - 1)
        ):
            chosen = chosen + (x,)
    return chosen


def max_homogeneous_for_color(
    P: Partition, ground: Iterable[int], color: int, exact_cap: int = 20
) -> HomogeneousResult:
    """Maximum H with the coloring constant and equal to `color` on [H]^k."""
    ground = tuple(sorted(set(ground)))
    exact = len(ground) <= exact_cap and P.k <= 3
    search = _max_mono_subset if exact else _greedy_mono_subset
    return HomogeneousResult(search(P, ground, color), color, exact)


def ramsey_homogeneous_max(
    P: Partition, ground: Iterable[int], exact_cap: int = 20
) -> HomogeneousResult:
    """Maximum-cardinality H with the coloring constant on [H]^k.

    Exact branch-and-bound for |ground| <= exact_cap and k <= 3; greedy
    (flagged inexact) beyond.  Ties: lowest color index wins.
    """
    ground = tuple(sorted(set(ground)))
    if P.k < 1:
        raise LabError("BAD_PARTITION", "k must be >= 1")
    if P.k == 1:
        classes: dict[int, list[int]] = {}
        for x in ground:
            classes.setdefault(P.color_of((x,)), []).append(x)
        color = max(classes, key=lambda c: (len(classes[c]), -c))
        return HomogeneousResult(tuple(classes[color]), color, True)
    if len(ground) < P.k:
        return HomogeneousResult(ground, 0, True)
    exact = len(ground) <= exact_cap and P.k <= 3
    search = _max_mono_subset if exact else _greedy_mono_subset
    best_h, best_c = (), 0
    for c in range(P.colors):
        h = search(P, ground, c)
        if len(h) > len(best_h):
            best_h, best_c = h, c
    return HomogeneousResult(best_h, best_c, exact)


# ---------------------------------------------------------------------------
# Interlacing graphs
# ---------------------------------------------------------------------------


def _check_tuple(u: tuple[int, ...], N: int | None = None) -> tuple[int, ...]:
    u = tuple(u)
    if any(not isinstance(v, int) or v < 1 for v in u):
        raise LabError("BAD_TUPLE", f"{u} has entries below 1")
    if any(u[i] >= u[i + 1] for i in range(len(u) - 1)):
        raise LabError("BAD_TUPLE", f"{u} is not strictly increasing")
    if N is not None and u and u[-1] > N:
        raise LabError("BAD_TUPLE", f"{u} exceeds the universe bound {N}")
    return u


def interlacing_predicate(u: Iterable[int], v: Iterable[int]) -> bool:
    """n_1 <= m_1 < n_2 <= m_2 < ... <= n_k <= m_k, in either role order.

    Equality throughout is allowed, so u = v satisfies the pattern.
    """
    u, v = tuple(u), tuple(v)
    if len(u) != len(v):
        raise LabError("LENGTH_MISMATCH", f"{len(u)} vs {len(v)}")
    _check_tuple(u)
    _check_tuple(v)

    def fits(a, b):
        return all(a[i] <= b[i] for i in range(len(a))) and all(
            b[i] < a[i + 1] for i in range(len(a) - 1)
        )

    return fits(u, v) or fits(v, u)


def interlacing_neighbors(u: tuple[int, ...], N: int):
    """All tuples interlacing with u inside [1..N], excluding u itself."""
    k = len(u)
    fwd_ranges = [range(u[i], (u[i + 1] if i + 1 < k else N + 1)) for i in range(k)]
    for m in itertools.product(*fwd_ranges):
        if m != u:
            yield m
    bwd_ranges = [range((u[i - 1] + 1 if i else 1), u[i] + 1) for i in range(k)]
    for m in itertools.product(*bwd_ranges):
        if m != u:
            yield m


def dk_distance(u: Iterable[int], v: Iterable[int], N: int) -> int:
    """Shortest-path distance in the interlacing graph on [1..N]^k (BFS)."""
    u, v = tuple(u), tuple(v)
    if len(u) != len(v):
        raise LabError("BAD_TUPLE", f"tuple lengths differ: {len(u)} vs {len(v)}")
    _check_tuple(u, N)
    _check_tuple(v, N)
    if u == v:
        return 0
    dist = {u: 0}
    queue = deque([u])
    while queue:
        cur = queue.popleft()
        d = dist[cur] + 1
        for nxt in interlacing_neighbors(cur, N):
            if nxt == v:
                return d
            if nxt not in dist:
                dist[nxt] = d
                queue.append(nxt)
    raise LabError("DISCONNECTED", f"no path from {u} to {v} in [1..{N}]^{len(u)}")


def dk_distances_from(u: tuple[int, ...], N: int) -> dict[tuple[int, ...], int]:
    """Single-source BFS over the whole vertex set."""
    u = _check_tuple(tuple(u), N)
    dist = {u: 0}
    queue = deque([u])
    while queue:
        cur = queue.popleft()
        d = dist[cur] + 1
        for nxt in interlacing_neighbors(cur, N):
            if nxt not in dist:
                dist[nxt] = d
                queue.append(nxt)
    return dist


def dstar_distance(u: Iterable[int], v: Iterable[int], N: int, f: Callable[[int], Fraction]) -> Fraction:
    """Weighted interlacing metric: f applied to the hop count.

    f must satisfy f(1) = 1, be nondecreasing and subadditive on the range
    actually used; this is checked exhaustively up to the hop count.
    """
    d = dk_distance(u, v, N)
    horizon = max(d, 2)
    vals = {s: rat(f(s)) for s in range(1, horizon + 1)}
    if vals[1] != 1:
        raise LabError("F_NOT_SUBADDITIVE", "f(1) must equal 1")
    for s in range(1, horizon):
        if vals[s + 1] < vals[s]:
            raise LabError("F_NOT_SUBADDITIVE", f"f decreases at {s + 1}")
    for a in range(1, horizon + 1):
        for b in range(1, horizon + 1 - a):
            if vals[a + b] > vals[a] + vals[b]:
                raise LabError("F_NOT_SUBADDITIVE", f"f({a + b}) > f({a}) + f({b})")
    return Fraction(0) if d == 0 else vals[d]


@dataclass(frozen=True)
class InterlacingGraph:
    """Vertex set = strictly increasing k-tuples from [1..N]."""

    k: int
    N: int
    weight: Callable[[int], Fraction] | None = None

    def vertices(self):
        return itertools.combinations(range(1, self.N + 1), self.k)

    def adjacent(self, u, v) -> bool:
        return u != v and interlacing_predicate(u, v)

    def distance(self, u, v) -> Fraction:
        if self.weight is None:
            return Fraction(dk_distance(u, v, self.N))
        return dstar_distance(u, v, self.N, self.weight)


# ---------------------------------------------------------------------------
# Pigeonhole window extractor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowResult:
    """Window (start, start+k] with small absolute sum.

    `start` is the N of the construction; the certified indices are
    start+1 .. start+k.  `guaranteed` is False only when the preconditions
    failed and a best-effort scan was used instead.
    """

    start: int
    indices: tuple[int, int]
    total: Fraction
    guaranteed: bool
    precondition_ok: bool


def pigeonhole_window(a: Iterable, k: int, eps, K) -> WindowResult:
    """Find N with sum_{i=N+1}^{N+k} |a_i| < eps via the partial-sum pigeonhole.

    Requires sum a_i^2 <= K^2, M = len(a) > k^2 K^2 / eps^2, and k | M; under
    these, some k-block of squares increments by less than eps^2/k and
    Cauchy-Schwarz turns that into the absolute-sum bound.
    """
    a = [rat(v) for v in a]
    eps, K = rat(eps), rat(K)
    M = len(a)
    if k < 1 or eps <= 0 or K < 0:
        raise LabError("BAD_PARAMS", "need k >= 1, eps > 0, K >= 0")
    sq_sum = sum((v * v for v in a), Fraction(0))
    pre_ok = sq_sum <= K * K and M * eps * eps > k * k * K * K and M % k == 0 and M >= k

    def window_total(start: int) -> Fraction:
        return sum((abs(a[i]) for i in range(start, start + k)), Fraction(0))

    if pre_ok:
        thr = eps * eps / k
        x = [Fraction(0)] * (M // k + 1)
        for l in range(1, M // k + 1):
            x[l] = x[l - 1] + sum((a[i] * a[i] for i in range((l - 1) * k, l * k)), Fraction(0))
        order = list(range(1, M // k)) + [0]  # paper scans l >= 1 first
        for l in order:
            if x[l + 1] - x[l] < thr:
                start = l * k
                total = window_total(start)
                if total >= eps:
                    raise LabError("INTERNAL", "pigeonhole certificate failed")
                return WindowResult(start, (start + 1, start + k), total, True, True)
        raise LabError("INTERNAL", "pigeonhole found no small block despite preconditions")

    best_start, best_total = 0, None
    for start in range(0, M - k + 1):
        tot = window_total(start)
        if best_total is None or tot < best_total:
            best_start, best_total = start, tot
    if best_total is None:
        raise LabError("PRECONDITION_FAILED", "sequence shorter than the window")
    return WindowResult(best_start, (best_start + 1, best_start + k), best_total, False, False)
