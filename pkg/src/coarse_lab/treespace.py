"""James tree norms: exact DP evaluator, exhaustive oracle, representatives,
restricted norms and finite branch capture.

The jt_norm DP runs bottom-up with state ``(node, top-of-open-segment)``:
an open segment entering a node must have started at one of its ancestors,
so there are O(nodes x depth) states and every value stays an exact
squared rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .core import FinVector, LabError, RootedTree, Segment, SegmentSystem, TreeVector, segment_sum
from .norms import NormOracle
from .values import NormValue


@dataclass(frozen=True)
class JTNormResult:
    value: NormValue
    witness: SegmentSystem


@dataclass(frozen=True)
class BranchCapture:
    branches: tuple[Segment, ...]
    captured: NormValue
    eta: Fraction
    minimal_certified: bool
    heuristic: bool


def _pathsums(x: TreeVector) -> dict[int, Fraction]:
    """Cumulative sum of x along the root path, per node."""
    tree = x.tree
    out: dict[int, Fraction] = {}
    for n in sorted(tree.nodes, key=tree.order.get):
        p = tree.parent[n]
        out[n] = (out[p] if p is not None else Fraction(0)) + x[n]
    return out


class _JTDP:
    """Max of sum((segment sum)^2) over disjoint segment systems within `allowed`."""

    def __init__(self, x: TreeVector, allowed: frozenset[int]):
        self.x = x
        self.tree = x.tree
        self.allowed = allowed
        self.pathsum = _pathsums(x)
        self._free: dict[int, Fraction] = {}
        self._g: dict[tuple[int, int], Fraction] = {}

    def seg_sq(self, a: int, v: int) -> Fraction:
        p = self.tree.parent[a]
        s = self.pathsum[v] - (self.pathsum[p] if p is not None else Fraction(0))
        return s * s

    def free(self, v: int) -> Fraction:
        got = self._free.get(v)
        if got is not None:
            return got
        best = sum((self.free(c) for c in self.tree.children[v]), Fraction(0))
        if v in self.allowed:
            best = max(best, self.g(v, v))
        self._free[v] = best
        return best

    def g(self, v: int, a: int) -> Fraction:
        """Best value of subtree(v) given an open segment from ancestor a through v."""
        key = (v, a)
        got = self._g.get(key)
        if got is not None:
            return got
        kids = self.tree.children[v]
        kids_sum = sum((self.free(c) for c in kids), Fraction(0))
        best = self.seg_sq(a, v) + kids_sum
        for c in kids:
            if c in self.allowed:
                cand = self.g(c, a) + kids_sum - self.free(c)
                if cand > best:
                    best = cand
        self._g[key] = best
        return best

    def value(self) -> Fraction:
        return self.free(self.tree.root)

    # witness reconstruction re-derives the argmax of each memoized state

    def build_free(self, v: int) -> list[Segment]:
        kid_segs = [s for c in self.tree.children[v] for s in self.build_free(c)]
        kids_val = sum((self.free(c) for c in self.tree.children[v]), Fraction(0))
        if v in self.allowed and self.g(v, v) > kids_val:
            return self.build_g(v, v)
        return kid_segs

    def build_g(self, v: int, a: int) -> list[Segment]:
        kids = self.tree.children[v]
        kids_sum = sum((self.free(c) for c in kids), Fraction(0))
        target = self.g(v, a)
        if self.seg_sq(a, v) + kids_sum == target:
            segs = [Segment(a, v)]
            for c in kids:
                segs.extend(self.build_free(c))
            return segs
        for c in kids:
            if c in self.allowed and self.g(c, a) + kids_sum - self.free(c) == target:
                segs = self.build_g(c, a)
                for c2 in kids:
                    if c2 != c:
                        segs.extend(self.build_free(c2))
                return segs
        raise LabError("INTERNAL", "witness reconstruction lost the optimum")


def jt_norm(x: TreeVector) -> JTNormResult:
    """Exact JT norm (l2 outer norm) with a maximizing segment system."""
    if len(x.tree.nodes) > 64:
        raise LabError("TREE_TOO_LARGE", "jt_norm DP supports trees up to 64 nodes")
    dp = _JTDP(x, frozenset(x.tree.nodes))
    sq = dp.value()
    witness = SegmentSystem(tuple(dp.build_free(x.tree.root)), x.tree)
    return JTNormResult(NormValue.sqrt(sq), witness)


def restricted_norm(x: TreeVector, F: Iterable[int]) -> NormValue:
    """sup over disjoint segment systems whose segments stay inside F."""
    F = frozenset(F)
    unknown = F - set(x.tree.nodes)
    if unknown:
        raise LabError("BAD_INDEX", f"nodes {sorted(unknown)} not in tree")
    dp = _JTDP(x, F)
    return NormValue.sqrt(dp.value())


def _all_segments(tree: RootedTree) -> list[Segment]:
    segs = []
    for bottom in tree.nodes:
        for top in tree.path_up(bottom):
            segs.append(Segment(top, bottom))
    return segs


def _segment_masks(tree: RootedTree, segs: list[Segment]) -> list[int]:
    pos = {n: i for i, n in enumerate(tree.nodes)}
    out = []
    for s in segs:
        mask = 0
        for n in s.nodes_in(tree):
            mask |= 1 << pos[n]
        out.append(mask)
    return out


def jt_norm_oracle(x: TreeVector) -> JTNormResult:
    """Exhaustive enumeration over all disjoint segment systems (small trees)."""
    tree = x.tree
    if len(tree.nodes) > 15:
        raise LabError("TREE_TOO_LARGE", "oracle supports trees up to 15 nodes")
    segs = _all_segments(tree)
    masks = _segment_masks(tree, segs)
    sums = [segment_sum(x, s) for s in segs]
    n = len(segs)
    best = Fraction(0)
    best_pick: tuple[int, ...] = ()

    def rec(i: int, used: int, acc: Fraction, picked: tuple[int, ...]):
        nonlocal best, best_pick
        if acc > best:
            best, best_pick = acc, picked
        for j in range(i, n):
            if used & masks[j] == 0:
                rec(j + 1, used | masks[j], acc + sums[j] * sums[j], picked + (j,))

    rec(0, 0, Fraction(0), ())
    witness = SegmentSystem(tuple(segs[j] for j in best_pick), tree)
    return JTNormResult(NormValue.sqrt(best), witness)


def representative(x: TreeVector, S: SegmentSystem) -> FinVector:
    """Collapsed base-space vector: sum of S_i(x) e_{o(top(S_i))}."""
    if S.tree != x.tree:
        raise LabError("INVALID_SYSTEM", "segment system belongs to a different tree")
    entries: dict[int, Fraction] = {}
    for s in S.segments:
        try:
            v = segment_sum(x, s)
        except LabError as exc:
            raise LabError("INVALID_SYSTEM", str(exc)) from exc
        if v != 0:
            entries[x.tree.order[s.top]] = v
    return FinVector(entries)


def jt_generalized_norm(x: TreeVector, E: NormOracle) -> JTNormResult:
    """JT(e_i) norm: max over disjoint segment systems of the E-norm of the
    representative, segments indexed by o(top)."""
    if not E.one_unconditional:
        raise LabError("NOT_UNCONDITIONAL", f"base oracle {E.name} must be 1-unconditional")
    tree = x.tree
    if len(tree.nodes) > 15:
        raise LabError("TREE_TOO_LARGE", "jt_generalized_norm supports trees up to 15 nodes")
    segs = _all_segments(tree)
    masks = _segment_masks(tree, segs)
    sums = [segment_sum(x, s) for s in segs]
    orders = [tree.order[s.top] for s in segs]
    n = len(segs)
    best = NormValue.rational(0)
    best_pick: tuple[int, ...] = ()

    def rec(i: int, used: int, collapsed: dict[int, Fraction], picked: tuple[int, ...]):
        nonlocal best, best_pick
        if collapsed:
            val = E(FinVector(dict(collapsed)))
            if val > best:
                best, best_pick = val, picked
        for j in range(i, n):
            if used & masks[j] == 0 and sums[j] != 0:
                collapsed[orders[j]] = sums[j]
                rec(j + 1, used | masks[j], collapsed, picked + (j,))
                del collapsed[orders[j]]

    rec(0, 0, {}, ())
    witness = SegmentSystem(tuple(segs[j] for j in best_pick), tree)
    return JTNormResult(best, witness)


# ---------------------------------------------------------------------------
# Branch capture
# ---------------------------------------------------------------------------


def _capture_reaches(capture_sq: Fraction, norm_sq: Fraction, eta: Fraction) -> bool:
    """Decide capture >= sqrt(norm_sq) - eta exactly at the squared level."""
    if eta * eta >= norm_sq or capture_sq >= norm_sq:
        return True
    rhs = norm_sq + eta * eta - capture_sq
    if rhs <= 0:
        return True
    return 4 * eta * eta * norm_sq >= rhs * rhs


class _LineDP:
    """Best squared capture using at most `budget` disjoint vertical lines.

    A line is a vertical window of nodes; norming segments must sit inside
    the chosen lines.  States: free (no line through the node), line-through
    without an open segment, line-through with an open segment whose top is
    a given ancestor.  Budgets count lines fully inside the subtree; a line
    passing through from above is paid for where it started.
    """

    def __init__(self, x: TreeVector):
        self.x = x
        self.tree = x.tree
        self.pathsum = _pathsums(x)
        self._memo: dict[tuple, Fraction] = {}

    def seg_sq(self, a: int, v: int) -> Fraction:
        p = self.tree.parent[a]
        s = self.pathsum[v] - (self.pathsum[p] if p is not None else Fraction(0))
        return s * s

    def _dist_tables(self, kids, j: int, special=None, special_fn=None) -> list[list[Fraction]]:
        """Forward knapsack tables over children; tables[t][b] = best with first t kids."""
        tables = [[Fraction(0)] * (j + 1)]
        for c in kids:
            fn = special_fn if c == special else self.free
            prev = tables[-1]
            tables.append(
                [max(prev[b - u] + fn(c, u) for u in range(b + 1)) for b in range(j + 1)]
            )
        return tables

    def _dist(self, kids, j: int, special=None, special_fn=None) -> Fraction:
        return self._dist_tables(kids, j, special, special_fn)[-1][j]

    def _dist_alloc(self, kids, j: int, special=None, special_fn=None) -> list[tuple[int, int]]:
        """Recover one optimal (child, budget) allocation from the knapsack."""
        tables = self._dist_tables(kids, j, special, special_fn)
        alloc: list[tuple[int, int]] = []
        b = j
        for t in range(len(kids), 0, -1):
            c = kids[t - 1]
            fn = special_fn if c == special else self.free
            for u in range(b + 1):
                if tables[t - 1][b - u] + fn(c, u) == tables[t][b]:
                    alloc.append((c, u))
                    b -= u
                    break
        alloc.reverse()
        return alloc

    def free(self, v: int, j: int) -> Fraction:
        key = ("F", v, j)
        got = self._memo.get(key)
        if got is not None:
            return got
        best = self._dist(self.tree.children[v], j)
        if j >= 1:
            best = max(best, self.enter(v, j - 1))
        self._memo[key] = best
        return best

    def enter(self, v: int, j: int) -> Fraction:
        """Line covers v, no open segment carried in; may open one at v."""
        return max(self.through_noseg(v, j), self.through_open(v, v, j))

    def through_noseg(self, v: int, j: int) -> Fraction:
        key = ("N", v, j)
        got = self._memo.get(key)
        if got is not None:
            return got
        kids = self.tree.children[v]
        best = self._dist(kids, j)  # line ends at v
        for c in kids:
            cand = self._dist(kids, j, special=c, special_fn=self.enter)
            if cand > best:
                best = cand
        self._memo[key] = best
        return best

    def through_open(self, v: int, a: int, j: int) -> Fraction:
        key = ("O", v, a, j)
        got = self._memo.get(key)
        if got is not None:
            return got
        kids = self.tree.children[v]
        best = self.seg_sq(a, v) + self.through_noseg(v, j)  # close the segment at v
        for c in kids:
            cand = self._dist(
                kids, j, special=c, special_fn=lambda cc, b, a=a: self.through_open(cc, a, b)
            )
            if cand > best:
                best = cand
        self._memo[key] = best
        return best

    def best(self, budget: int) -> Fraction:
        return self.free(self.tree.root, budget)

    # -- witness reconstruction ---------------------------------------------

    def recover_lines(self, budget: int) -> list[Segment]:
        lines: list[Segment] = []
        self._rec_free(self.tree.root, budget, lines)
        return lines

    def _rec_dist(self, kids, j, lines, special=None, special_fn=None, special_rec=None):
        for c, b in self._dist_alloc(kids, j, special, special_fn):
            if c == special:
                special_rec(c, b)
            else:
                self._rec_free(c, b, lines)

    def _rec_free(self, v: int, j: int, lines: list[Segment]):
        kids = self.tree.children[v]
        val = self.free(v, j)
        if self._dist(kids, j) == val:
            self._rec_dist(kids, j, lines)
        else:
            self._rec_enter(v, j - 1, v, lines)

    def _rec_enter(self, v: int, j: int, start: int, lines: list[Segment]):
        if self.through_noseg(v, j) >= self.through_open(v, v, j):
            self._rec_noseg(v, j, start, lines)
        else:
            self._rec_open(v, v, j, start, lines)

    def _rec_noseg(self, v: int, j: int, start: int, lines: list[Segment]):
        kids = self.tree.children[v]
        val = self.through_noseg(v, j)
        if self._dist(kids, j) == val:
            lines.append(Segment(start, v))  # line ends here
            self._rec_dist(kids, j, lines)
            return
        for c in kids:
            if self._dist(kids, j, special=c, special_fn=self.enter) == val:
                self._rec_dist(
                    kids, j, lines, special=c, special_fn=self.enter,
                    special_rec=lambda cc, b: self._rec_enter(cc, b, start, lines),
                )
                return
        raise LabError("INTERNAL", "line witness reconstruction lost the optimum")

    def _rec_open(self, v: int, a: int, j: int, start: int, lines: list[Segment]):
        kids = self.tree.children[v]
        val = self.through_open(v, a, j)
        if self.seg_sq(a, v) + self.through_noseg(v, j) == val:
            self._rec_noseg(v, j, start, lines)
            return
        for c in kids:
            fn = lambda cc, b, a=a: self.through_open(cc, a, b)
            if self._dist(kids, j, special=c, special_fn=fn) == val:
                self._rec_dist(
                    kids, j, lines, special=c, special_fn=fn,
                    special_rec=lambda cc, b: self._rec_open(cc, a, b, start, lines),
                )
                return
        raise LabError("INTERNAL", "line witness reconstruction lost the optimum")


def _lines_from_nodes(tree: RootedTree, nodes: set[int]) -> list[Segment]:
    """Decompose a union of vertical windows into maximal disjoint lines."""
    lines = []
    tops = [n for n in nodes if tree.parent[n] not in nodes]
    for t in sorted(tops, key=tree.order.get):
        bottom = t
        while True:
            nxt = [c for c in tree.children[bottom] if c in nodes]
            if len(nxt) != 1:
                break
            bottom = nxt[0]
        lines.append(Segment(t, bottom))
    return lines


def _greedy_lines(x: TreeVector, target_check, max_lines: int) -> tuple[list[Segment], Fraction]:
    """Largest-marginal-capture-first heuristic for big trees."""
    tree = x.tree
    chosen_nodes: set[int] = set()
    captured = Fraction(0)
    lines: list[Segment] = []
    candidates = _all_segments(tree)
    while len(lines) < max_lines and not target_check(captured):
        best_gain, best_line, best_val = Fraction(0), None, captured
        for s in candidates:
            snodes = set(s.nodes_in(tree))
            if snodes & chosen_nodes:
                continue
            val = restricted_norm(x, chosen_nodes | snodes).squared()
            if val - captured > best_gain:
                best_gain, best_line, best_val = val - captured, s, val
        if best_line is None:
            break
        lines.append(best_line)
        chosen_nodes |= set(best_line.nodes_in(tree))
        captured = best_val
    return lines, captured


def branch_capture(x: TreeVector, eta: Fraction) -> BranchCapture:
    """Minimal-cardinality set of disjoint branches whose restricted norm
    reaches ||x|| - eta.

    Exact minimality (all smaller cardinalities rejected) on trees up to 15
    nodes; greedy and flagged heuristic beyond that.
    """
    eta = Fraction(eta)
    if eta <= 0:
        raise LabError("BAD_PARAMS", "eta must be > 0")
    tree = x.tree
    norm_sq = _JTDP(x, frozenset(tree.nodes)).value()
    exact = len(tree.nodes) <= 15

    if exact:
        dp = _LineDP(x)
        m = 0
        while True:
            cap = dp.best(m)
            if _capture_reaches(cap, norm_sq, eta):
                break
            m += 1
            if m > len(tree.nodes):
                raise LabError("INTERNAL", "line budget exceeded node count")
        lines = dp.recover_lines(m) if m else []
        captured_sq = cap
    else:
        lines, captured_sq = _greedy_lines(
            x, lambda c: _capture_reaches(c, norm_sq, eta), len(tree.nodes)
        )

    # anchor each line as high as the other lines allow (cosmetic; capture
    # is monotone under widening the window)
    used = set()
    for s in lines:
        used.update(s.nodes_in(tree))
    anchored = []
    for s in sorted(lines, key=lambda s: tree.order[s.top]):
        top = s.top
        while tree.parent[top] is not None and tree.parent[top] not in used:
            top = tree.parent[top]
            used.add(top)
        anchored.append(Segment(top, s.bottom))
    final_nodes: set[int] = set()
    for s in anchored:
        final_nodes.update(s.nodes_in(tree))
    captured = restricted_norm(x, final_nodes) if anchored else NormValue.rational(0)
    return BranchCapture(tuple(anchored), captured, eta, exact, not exact)
