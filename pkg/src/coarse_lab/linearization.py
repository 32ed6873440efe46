"""Finite stabilization engine for maps from tuple graphs into basis spaces,
plus the coarse-bounds checker, the interlacing auditor, the l2 profile of
block norms, and the l-infinity block probe.

The linearize engine approximates each map value by h0 plus one block per
tuple prefix, with blocks cut at data-derived fences.  Fences are keyed by
coordinate VALUE: the supports carrying information about coordinate value v
are located from pairs of tuples differing at a single position, and the
fence below v sits just under the first such support.  Stage agreement
(the value below a fence must not depend on coordinates at or beyond that
stage) is then an explicit cross-tuple check with tolerance eps/(3k); a map
whose low coordinates keep shifting with later ones fails it and triggers
homogeneous-subset salvage, then STABILIZATION_FAILED.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .combinatorics import (
    Partition,
    dk_distance,
    dstar_distance,
    interlacing_predicate,
    max_homogeneous_for_color,
)
from .core import FinVector, LabError, rat, rat_str
from .norms import NormOracle, c0_norm, space_norm
from .values import NormValue, abs_diff_below, as_norm_value


class StabilizationFailed(LabError):
    def __init__(self, best_size: int, message: str = ""):
        self.best_size = best_size
        super().__init__("STABILIZATION_FAILED", f"best agreeing size {best_size}; {message}")


# ---------------------------------------------------------------------------
# Map tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MapTable:
    """Bounded map from increasing k-tuples in [1..N] into one norm space."""

    k: int
    N: int
    space_tag: str
    metric: str  # "dK" | "dstar" | "c0-summing"
    values: Mapping[tuple[int, ...], FinVector]
    weight: Callable[[int], Fraction] | None = None
    ground_truth: object | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.metric not in ("dK", "dstar", "c0-summing"):
            raise LabError("BAD_PARAMS", f"unknown metric {self.metric!r}")
        if self.metric == "dstar" and self.weight is None:
            raise LabError("BAD_PARAMS", "dstar metric needs a weight function")
        vals = {}
        for t, v in self.values.items():
            t = tuple(t)
            if len(t) != self.k or any(x < 1 or x > self.N for x in t):
                raise LabError("BAD_TUPLE", f"{t} is not a k-tuple within [1..{self.N}]")
            if any(t[i] >= t[i + 1] for i in range(len(t) - 1)):
                raise LabError("BAD_TUPLE", f"{t} is not strictly increasing")
            if not isinstance(v, FinVector):
                raise LabError("BAD_PARAMS", "map values must be FinVectors")
            vals[t] = v
        object.__setattr__(self, "values", vals)

    def tuples(self) -> list[tuple[int, ...]]:
        return sorted(self.values)

    def base(self) -> list[int]:
        out: set[int] = set()
        for t in self.values:
            out.update(t)
        return sorted(out)

    def norm(self, x: FinVector) -> NormValue:
        return space_norm(self.space_tag, x)

    def distance(self, u: tuple[int, ...], v: tuple[int, ...]) -> Fraction:
        if self.metric == "dK":
            return Fraction(dk_distance(u, v, self.N))
        if self.metric == "dstar":
            return dstar_distance(u, v, self.N, self.weight)
        su = FinVector({j: Fraction(sum(1 for x in u if x >= j)) for j in range(1, max(u) + 1)})
        sv = FinVector({j: Fraction(sum(1 for x in v if x >= j)) for j in range(1, max(v) + 1)})
        diff = su - sv
        return c0_norm(diff).value if not diff.is_zero() else Fraction(0)

    def to_json_obj(self) -> dict:
        return {
            "k": self.k,
            "N": self.N,
            "space": self.space_tag,
            "metric": self.metric,
            "values": {
                ",".join(map(str, t)): v.to_json_obj() for t, v in sorted(self.values.items())
            },
        }

    @staticmethod
    def from_json_obj(obj: dict) -> MapTable:
        values = {
            tuple(int(s) for s in key.split(",")): FinVector.from_json_obj(v)
            for key, v in obj["values"].items()
        }
        return MapTable(obj["k"], obj["N"], obj["space"], obj.get("metric", "dK"), values)

    @staticmethod
    def load(path: str) -> MapTable:
        with open(path, "r", encoding="utf-8") as fh:
            return MapTable.from_json_obj(json.load(fh))


# ---------------------------------------------------------------------------
# Coarse bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepFunction:
    """Nondecreasing step function; value at d = value of largest threshold <= d."""

    points: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        pts = tuple((rat(t), rat(v)) for t, v in self.points)
        for (t1, v1), (t2, v2) in zip(pts, pts[1:]):
            if t2 <= t1 or v2 < v1:
                raise LabError("BAD_PARAMS", "step function must be strictly ordered, nondecreasing")
        object.__setattr__(self, "points", pts)

    def value_at(self, d) -> Fraction | None:
        d = rat(d)
        out = None
        for t, v in self.points:
            if t <= d:
                out = v
            else:
                break
        return out


@dataclass(frozen=True)
class CoarseBounds:
    rho: StepFunction
    omega: StepFunction | None
    K: Fraction
    r: Fraction = Fraction(1)


@dataclass(frozen=True)
class CoarseReport:
    ok: bool
    first_violation: tuple | None
    rho_emp: dict
    omega_emp: dict
    rho_emp_regular: dict
    omega_emp_regular: dict
    pairs_checked: int


def check_coarse_bounds(phi: MapTable, bounds: CoarseBounds) -> CoarseReport:
    """Verify rho(d) <= ||phi(u) - phi(v)|| <= min(K d, omega(d)) over all pairs
    at distance >= 1, and report the empirical envelopes per distance."""
    tuples = phi.tuples()
    lo_env: dict[Fraction, NormValue] = {}
    hi_env: dict[Fraction, NormValue] = {}
    first_violation = None
    checked = 0
    for u, v in itertools.combinations(tuples, 2):
        d = phi.distance(u, v)
        if d < 1:
            continue
        checked += 1
        nv = phi.norm(phi.values[u] - phi.values[v])
        if d not in lo_env or nv < lo_env[d]:
            lo_env[d] = nv
        if d not in hi_env or nv > hi_env[d]:
            hi_env[d] = nv
        if first_violation is None:
            lo = bounds.rho.value_at(d)
            hi = bounds.omega.value_at(d) if bounds.omega is not None else None
            if lo is not None and nv < as_norm_value(lo):
                first_violation = (u, v, "rho", d)
            elif d >= max(Fraction(1), bounds.r) and nv > as_norm_value(bounds.K * d):
                first_violation = (u, v, "lipschitz", d)
            elif hi is not None and nv > as_norm_value(hi):
                first_violation = (u, v, "omega", d)
    dists = sorted(lo_env)
    rho_reg: dict[Fraction, NormValue] = {}
    for d in reversed(dists):  # largest nondecreasing minorant of the min envelope
        rho_reg[d] = lo_env[d] if d == dists[-1] else min(lo_env[d], rho_reg_next)
        rho_reg_next = rho_reg[d]
    omega_reg: dict[Fraction, NormValue] = {}
    run = None
    for d in dists:  # smallest nondecreasing majorant of the max envelope
        run = hi_env[d] if run is None else max(run, hi_env[d])
        omega_reg[d] = run
    return CoarseReport(
        first_violation is None,
        first_violation,
        lo_env,
        hi_env,
        {d: rho_reg[d] for d in dists},
        omega_reg,
        checked,
    )


# ---------------------------------------------------------------------------
# Linearization engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockDecomposition:
    h0: FinVector
    blocks: Mapping[tuple[int, ...], FinVector]
    cut_points: tuple[tuple[int, int], ...]  # (coordinate value, fence below its supports)
    homogeneous_set: tuple[tuple[int, ...], ...]
    residuals: Mapping[tuple[int, ...], NormValue]
    eps: Fraction
    base: tuple[int, ...]
    space_tag: str

    def reconstruct(self, t: tuple[int, ...]) -> FinVector:
        out = self.h0
        for i in range(1, len(t) + 1):
            out = out + self.blocks[t[: i]]
        return out

    def to_json_obj(self) -> dict:
        return {
            "space": self.space_tag,
            "eps": rat_str(self.eps),
            "base": list(self.base),
            "h0": self.h0.to_json_obj(),
            "cut_points": [[v, c] for v, c in self.cut_points],
            "blocks": {
                ",".join(map(str, p)): b.to_json_obj() for p, b in sorted(self.blocks.items())
            },
            "homogeneous_set": [",".join(map(str, t)) for t in self.homogeneous_set],
            "residuals": {
                ",".join(map(str, t)): repr(r) for t, r in sorted(self.residuals.items())
            },
        }


def _frontier(diff: FinVector, space: str, tol: Fraction) -> int | None:
    """Largest L with ||P_{<=L} diff|| <= tol; None when the whole diff fits."""
    acc: dict[int, Fraction] = {}
    for s in sorted(diff.entries):
        acc[s] = diff.entries[s]
        if space_norm(space, FinVector(acc)) > as_norm_value(tol):
            return s - 1
    return None


def _homogeneous_filter(tuples: list[tuple[int, ...]], H: list[int], k: int) -> list[tuple[int, ...]]:
    """Keep tuples whose prefixes all have room to vary: coordinate i needs
    k - i + 1 larger base values (one extra choice at the next position),
    and the last coordinate needs one value above it."""
    above = {v: sum(1 for w in H if w > v) for v in H}
    out = []
    for t in tuples:
        ok = all(above[t[i - 1]] >= (k - i + 1 if i < k else 1) for i in range(1, k + 1))
        if ok:
            out.append(t)
    return out


class _EngineFailure(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


def _attempt(phi: MapTable, H: list[int], eps: Fraction, tol: Fraction) -> BlockDecomposition:
    """Run fence discovery, stage agreement and extraction over the base set H.

    Raises _EngineFailure when a stage check or a recomputed residual fails.
    """
    k = phi.k
    Hset = set(H)
    tuples = sorted(t for t in phi.values if set(t) <= Hset)
    if not tuples:
        raise _EngineFailure("no tuples over the candidate base")
    homogeneous = _homogeneous_filter(tuples, H, k)
    if not homogeneous:
        raise _EngineFailure("no tuples with extendable prefixes")
    values = phi.values
    space = phi.space_tag
    maxsup = max((values[t].max_support() or 0) for t in tuples)
    sent = maxsup + 1

    # fence discovery from single-position differences: the supports carrying
    # information about coordinate value v start where such a pair first
    # diverges (only one side has a block in v's window, so the divergence
    # is never masked by cancellation)
    raw_start: dict[int, int] = {}
    for i in range(k):
        groups: dict[tuple, list[tuple[int, ...]]] = {}
        for t in tuples:
            groups.setdefault(t[:i] + t[i + 1 :], []).append(t)
        for group in groups.values():
            group.sort()
            for t, t2 in itertools.combinations(group, 2):
                v = min(t[i], t2[i])
                fr = _frontier(values[t] - values[t2], space, tol)
                start = sent if fr is None else fr + 1
                if v not in raw_start or start < raw_start[v]:
                    raw_start[v] = start

    # value-keyed windows must be ordered by value; a later coordinate whose
    # information starts below an earlier one cannot be stabilized
    prev_raw = None
    for v in sorted(Hset):
        if v in raw_start:
            if prev_raw is not None and raw_start[v] < prev_raw:
                raise _EngineFailure(
                    f"information for value {v} starts at {raw_start[v]}, below an earlier value's"
                )
            prev_raw = raw_start[v]

    fence: dict[int, int] = {}
    run = 0
    for v in sorted(Hset):
        if v in raw_start:
            run = max(run, raw_start[v] - 1)
        fence[v] = run
    fence0 = fence[min(Hset)]
    next_h = {v: w for v, w in zip(sorted(Hset), sorted(Hset)[1:])}

    # representatives: smallest tuple extending each prefix
    rep: dict[tuple[int, ...], tuple[int, ...]] = {(): tuples[0]}
    for t in tuples:
        for i in range(1, k + 1):
            p = t[:i]
            if p not in rep or t < rep[p]:
                rep[p] = t

    # stage agreement: below the first possible stage-i window, the value
    # must depend only on the (i-1)-prefix (checked against the smallest
    # extension of that prefix)
    for t in homogeneous:
        for i in range(1, k + 1):
            other = rep[t[: i - 1]]
            if other == t:
                continue
            cut = fence0 if i == 1 else fence[next_h[t[i - 2]]]
            low = (values[t] - values[other]).restrict(1, cut)
            if phi.norm(low) > as_norm_value(tol):
                raise _EngineFailure(
                    f"stage {i} disagreement at fence {cut}: {t} vs {other}"
                )

    blocks: dict[tuple[int, ...], FinVector] = {}
    for t in homogeneous:
        for i in range(1, k + 1):
            p = t[:i]
            if p in blocks:
                continue
            v = t[i - 1]
            lo = fence[v]
            if i == k:
                blocks[p] = values[t].restrict(lo + 1, sent)
            else:
                hi = fence[next_h[v]] if v in next_h else sent
                blocks[p] = values[rep[p]].restrict(lo + 1, hi)
    h0 = values[rep[()]].restrict(1, fence0)

    residuals: dict[tuple[int, ...], NormValue] = {}
    for t in homogeneous:
        resid = values[t] - h0
        for i in range(1, k + 1):
            resid = resid - blocks[t[:i]]
        rn = phi.norm(resid)
        residuals[t] = rn
        if rn > as_norm_value(eps):
            raise _EngineFailure(f"residual {rn!r} above eps at {t}")

    cut_points = tuple((v, fence[v]) for v in sorted(Hset))
    return BlockDecomposition(
        h0, blocks, cut_points, tuple(homogeneous), residuals, eps, tuple(sorted(Hset)), space
    )


def linearize(phi: MapTable, eps, min_size: int) -> BlockDecomposition:
    """Finite analogue of asymptotic linearization by iterated stabilization.

    Tries the full base first; on stage disagreement, probes coordinate
    values pairwise (each probe runs the engine on {v, v'} plus the top
    k-1 values) and takes a maximum agreeing clique via the Ramsey search.
    Raises StabilizationFailed with the best achievable size.
    """
    eps = rat(eps)
    if eps <= 0 or min_size < 1:
        raise LabError("BAD_PARAMS", "need eps > 0 and min_size >= 1")
    tol = eps / (3 * phi.k)
    B = phi.base()
    needed = max(min_size, phi.k + 1)
    if len(B) < needed:
        raise StabilizationFailed(len(B), "base set smaller than requested size")
    try:
        return _attempt(phi, B, eps, tol)
    except _EngineFailure:
        pass

    probe_cache: dict[frozenset, bool] = {}

    def compatible(v: int, w: int) -> bool:
        key = frozenset((v, w))
        got = probe_cache.get(key)
        if got is None:
            fill = [x for x in reversed(B) if x not in (v, w)][: phi.k - 1]
            probe = sorted({v, w, *fill})
            try:
                _attempt(phi, probe, eps, tol)
                got = True
            except _EngineFailure:
                got = False
            probe_cache[key] = got
        return got

    agree = Partition(2, 2, lambda pair: 0 if compatible(*pair) else 1)
    clique = max_homogeneous_for_color(agree, B, 0)
    if len(clique.H) < needed:
        raise StabilizationFailed(len(clique.H), "no agreeing subset of requested size")
    try:
        return _attempt(phi, list(clique.H), eps, tol)
    except _EngineFailure:
        pass
    # bounded shrink: try smaller agreeing subsets, largest first
    budget = 2000
    for size in range(len(clique.H) - 1, needed - 1, -1):
        for sub in itertools.combinations(clique.H, size):
            if budget == 0:
                raise StabilizationFailed(0, "probe budget exhausted")
            budget -= 1
            try:
                return _attempt(phi, list(sub), eps, tol)
            except _EngineFailure:
                continue
    raise StabilizationFailed(0, "no agreeing subset of requested size")


# ---------------------------------------------------------------------------
# Block norm bounds (Lipschitz witnesses)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockBoundRow:
    prefix: tuple[int, ...]
    witness: tuple[tuple[int, ...], tuple[int, ...]]
    distance: Fraction
    block_norm: NormValue
    bound: Fraction
    ok: bool


@dataclass(frozen=True)
class BlockBoundReport:
    rows: tuple[BlockBoundRow, ...]
    missing: tuple[tuple[int, ...], ...]  # prefixes with no witness pair in the domain
    ok: bool


def _alternates_after(n: tuple[int, ...], m: tuple[int, ...], j: int) -> bool:
    """n and m agree before position j and strictly alternate from j on."""
    k = len(n)
    if n[: j - 1] != m[: j - 1]:
        return False
    merged = []
    for i in range(j - 1, k):
        merged.extend((n[i], m[i]))
    return all(merged[t] < merged[t + 1] for t in range(len(merged) - 1))


def block_norm_bounds(dec: BlockDecomposition, phi: MapTable, K) -> BlockBoundReport:
    """For each block, exhibit a pair interlacing after its stage and check
    ||h(prefix)|| <= K * d(n, m) + eps.

    Prefixes near the top of the base have no room for the alternating
    pattern; they are reported as missing.  NO_WITNESS_IN_DOMAIN is raised
    only when no block at all has a witness.
    """
    K = rat(K)
    H = list(dec.homogeneous_set)
    rows = []
    missing = []
    for p in sorted(dec.blocks):
        j = len(p)
        witness = None
        for n in H:
            if n[:j] != p:
                continue
            for m in H:
                if m != n and _alternates_after(n, m, j):
                    witness = (n, m)
                    break
            if witness:
                break
        if witness is None:
            missing.append(p)
            continue
        n, m = witness
        d = phi.distance(n, m)
        bound = K * d + dec.eps
        bn = phi.norm(dec.blocks[p])
        rows.append(BlockBoundRow(p, witness, d, bn, bound, bn <= as_norm_value(bound)))
    if not rows:
        raise LabError("NO_WITNESS_IN_DOMAIN", "no block admits an interlacing witness pair")
    return BlockBoundReport(tuple(rows), tuple(missing), all(r.ok for r in rows))


# ---------------------------------------------------------------------------
# Interlacing audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuditResult:
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None
    best_ratio: NormValue | None  # min over pairs of ||phi(n)|| / ||phi(n)-phi(m)||
    meets_C: bool
    pairs_scanned: int


def interlacing_audit(phi: MapTable, C) -> AuditResult:
    """Scan all ordered interlacing pairs for ||phi(n)|| <= C ||phi(n)-phi(m)||.

    Returns the pair of smallest ratio (the best constant achievable) and
    whether it meets C.  Pairs with zero difference are skipped: a constant
    map has no witness for any finite C.
    """
    C = rat(C)
    tuples = phi.tuples()
    norm_sq = {t: phi.norm(phi.values[t]).squared() for t in tuples}
    best: tuple[Fraction, Fraction] | None = None  # (num_sq, den_sq) of the ratio
    best_pair = None
    scanned = 0
    for n, m in itertools.permutations(tuples, 2):
        if not interlacing_predicate(n, m):
            continue
        diff = phi.values[n] - phi.values[m]
        if diff.is_zero():
            continue
        scanned += 1
        dsq = phi.norm(diff).squared()
        if best is None or norm_sq[n] * best[1] < best[0] * dsq:
            best = (norm_sq[n], dsq)
            best_pair = (n, m)
    if best is None:
        return AuditResult(None, None, False, scanned)
    ratio = NormValue.sqrt(best[0] / best[1]) if best[1] else None
    meets = best[0] <= C * C * best[1]
    return AuditResult(best_pair if meets else None, ratio, meets, scanned)


def interlacing_audit_oracle(phi: MapTable, C) -> AuditResult:
    """Reference double loop written independently: tries every ordered pair
    and tests the inequality against C directly."""
    C = rat(C)
    tuples = phi.tuples()
    best_pair, best_num, best_den = None, None, None
    scanned = 0
    for n in tuples:
        nn = phi.norm(phi.values[n]).squared()
        for m in tuples:
            if n == m or not interlacing_predicate(n, m):
                continue
            diff = phi.values[n] - phi.values[m]
            if diff.is_zero():
                continue
            scanned += 1
            dd = phi.norm(diff).squared()
            if best_num is None or nn * best_den < best_num * dd:
                best_pair, best_num, best_den = (n, m), nn, dd
    if best_pair is None:
        return AuditResult(None, None, False, scanned)
    meets = best_num <= C * C * best_den
    return AuditResult(
        best_pair if meets else None, NormValue.sqrt(best_num / best_den), meets, scanned
    )


# ---------------------------------------------------------------------------
# l2 profile of block norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class L2Profile:
    a: tuple[NormValue, ...]
    a_squared: tuple[Fraction, ...]
    window: tuple[int, int] | None  # (N, k) of the pigeonhole on (a_i)
    sum_bound_sq: Fraction  # (K + eps)^2 certified >= sum a_i^2
    interval_checks: int


def _alternating_pair(H: list[int], M: int) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    # one spare above keeps both tuples inside the homogeneous set
    if len(H) < 2 * M + 1:
        return None
    n = tuple(H[2 * i] for i in range(M))
    m = tuple(H[2 * i + 1] for i in range(M))
    return n, m


def l2_profile(dec: BlockDecomposition, eps, K) -> L2Profile:
    """Stabilized block-norm profile with the two-sided l2 comparison.

    (i) block norms at each level agree within eps/M across prefixes;
    (ii) sum of squares is at most (K + eps)^2;
    (iii) for every interval I of levels and the canonical alternating pair,
          sum_I a_i^2 <= ||sum_I u_i||^2 <= (4+eps)^2 sum_I a_i^2 where
          u_i is the difference of the two level-i blocks.
    All comparisons are exact at the squared level.
    """
    eps, K = rat(eps), rat(K)
    M = max(len(p) for p in dec.blocks)
    level_norms: list[list[tuple[tuple[int, ...], NormValue]]] = [[] for _ in range(M + 1)]
    for p in sorted(dec.blocks):
        level_norms[len(p)].append((p, space_norm(dec.space_tag, dec.blocks[p])))
    a: list[NormValue] = []
    for i in range(1, M + 1):
        entries = level_norms[i]
        ai = entries[0][1]
        for _, nv in entries[1:]:
            if not (nv == ai or abs_diff_below(nv, ai, eps / M)):
                raise LabError(
                    "PROFILE_UNSTABLE", f"level {i} norms deviate by >= eps/M ({ai!r} vs {nv!r})"
                )
        a.append(ai)
    a_sq = [v.squared() for v in a]
    total = sum(a_sq, Fraction(0))
    if total > (K + eps) ** 2:
        raise LabError("PROFILE_UNSTABLE", f"sum of squares {total} exceeds (K+eps)^2")

    # two-sided check on interval restrictions of alternating differences
    checks = 0
    pair = _alternating_pair(list(dec.base), M)
    if pair is not None and all(t in dec.residuals for t in pair):
        n, m = pair
        u = [dec.blocks[n[: i + 1]] - dec.blocks[m[: i + 1]] for i in range(M)]
        for lo in range(M):
            for hi in range(lo + 1, M + 1):
                seg = FinVector({})
                for i in range(lo, hi):
                    seg = seg + u[i]
                ssq = space_norm(dec.space_tag, seg).squared()
                part = sum(a_sq[lo:hi], Fraction(0))
                if not (part <= ssq <= (4 + eps) ** 2 * part):
                    raise LabError(
                        "PROFILE_UNSTABLE",
                        f"two-sided l2 bound fails on levels [{lo + 1},{hi}]",
                    )
                checks += 1

    # pigeonhole window over the stabilized profile, squared arithmetic
    window = None
    Keff = K + eps
    for kw in range(M - 1, 0, -1):
        if M % kw == 0 and M * eps * eps > kw * kw * Keff * Keff:
            thr = eps * eps / kw
            x = [Fraction(0)]
            for l in range(1, M // kw + 1):
                x.append(x[-1] + sum(a_sq[(l - 1) * kw : l * kw], Fraction(0)))
            order = list(range(1, M // kw)) + [0]
            for l in order:
                if x[l + 1] - x[l] < thr:
                    window = (l * kw, kw)
                    break
            break
    return L2Profile(tuple(a), tuple(a_sq), window, (K + eps) ** 2, checks)


# ---------------------------------------------------------------------------
# l-infinity block probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LInfSearchResult:
    found: bool
    blocks: tuple[FinVector, ...] | None
    families_checked: int


def linf_block_search(
    E: NormOracle, n: int, C, support_cap: int, starts: Iterable[int] = (1, 2, 4, 8, 16, 32, 64, 128, 256, 512)
) -> LInfSearchResult:
    """Presence-only probe for n successive blocks C-equivalent to the l-inf basis.

    Searches equal-shape all-ones blocks of width <= support_cap placed at
    increasing start offsets; a family certifies when every +-1 combination
    sigma has norm within [nu/C, C*nu] for the common block norm nu.
    not_found certifies nothing.
    """
    if n < 2:
        raise LabError("BAD_PARAMS", "need n >= 2 blocks")
    C = rat(C)
    checked = 0
    for width in range(1, support_cap + 1):
        for start in starts:
            blocks = []
            for j in range(n):
                lo = start + j * width
                blocks.append(FinVector({lo + t: Fraction(1) for t in range(width)}))
            norms = [E(b) for b in blocks]
            if any(not (nv == norms[0]) for nv in norms[1:]):
                continue
            nu = norms[0]
            checked += 1
            ok = True
            for signs in itertools.product((1, -1), repeat=n - 1):
                combo = blocks[0]
                for j, s in enumerate(signs, start=1):
                    combo = combo + blocks[j] if s > 0 else combo - blocks[j]
                val = E(combo)
                if val > nu.scale(C) or val.scale(C) < nu:
                    ok = False
                    break
            if ok:
                return LInfSearchResult(True, tuple(blocks), checked)
    return LInfSearchResult(False, None, checked)
