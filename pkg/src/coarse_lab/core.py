"""Exact-arithmetic vectors, intervals, rooted trees and segment systems.

Everything here is an immutable value object: construction validates the
invariants once, after which instances can be shared freely (including
across worker threads).  All scalars are `fractions.Fraction`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

Rat = Fraction


class LabError(Exception):
    """Error with a stable machine-readable code (e.g. ``INVALID_SEGMENT``)."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


def rat(value) -> Fraction:
    """Coerce ints, strings like ``"3/2"``, and Fractions to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise LabError("BAD_RATIONAL", f"cannot interpret {value!r} as a rational")


def rat_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# Finitely supported vectors over 1-based integer indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FinVector:
    """Finitely supported rational vector; zero entries are never stored.

    Equality compares entries only: the space tag records the intended norm
    context and does not change the vector.
    """

    entries: Mapping[int, Fraction]
    space_tag: str = ""

    def __eq__(self, other) -> bool:
        return isinstance(other, FinVector) and self.entries == other.entries

    def __hash__(self):
        return hash(frozenset(self.entries.items()))

    def __post_init__(self):
        clean = {}
        for i, v in self.entries.items():
            if not isinstance(i, int) or i < 1:
                raise LabError("BAD_INDEX", f"index {i!r} must be an integer >= 1")
            q = rat(v)
            if q != 0:
                clean[i] = q
        object.__setattr__(self, "entries", clean)

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, Fraction]], space_tag: str = "") -> FinVector:
        acc: dict[int, Fraction] = {}
        for i, v in pairs:
            acc[i] = acc.get(i, Fraction(0)) + rat(v)
        return FinVector(acc, space_tag)

    @staticmethod
    def zero(space_tag: str = "") -> FinVector:
        return FinVector({}, space_tag)

    @staticmethod
    def basis(i: int, space_tag: str = "") -> FinVector:
        return FinVector({i: Fraction(1)}, space_tag)

    def __getitem__(self, i: int) -> Fraction:
        return self.entries.get(i, Fraction(0))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.entries))

    def is_zero(self) -> bool:
        return not self.entries

    def min_support(self) -> int | None:
        return min(self.entries) if self.entries else None

    def max_support(self) -> int | None:
        return max(self.entries) if self.entries else None

    def add(self, other: FinVector) -> FinVector:
        acc = dict(self.entries)
        for i, v in other.entries.items():
            acc[i] = acc.get(i, Fraction(0)) + v
        return FinVector(acc, self.space_tag or other.space_tag)

    def sub(self, other: FinVector) -> FinVector:
        acc = dict(self.entries)
        for i, v in other.entries.items():
            acc[i] = acc.get(i, Fraction(0)) - v
        return FinVector(acc, self.space_tag or other.space_tag)

    def scale(self, c) -> FinVector:
        c = rat(c)
        return FinVector({i: c * v for i, v in self.entries.items()}, self.space_tag)

    def flip_signs(self, signs: Mapping[int, int]) -> FinVector:
        return FinVector(
            {i: (v if signs.get(i, 1) >= 0 else -v) for i, v in self.entries.items()},
            self.space_tag,
        )

    def restrict(self, lo: int, hi: int) -> FinVector:
        """Restriction to indices lo..hi inclusive (a basis projection)."""
        return FinVector(
            {i: v for i, v in self.entries.items() if lo <= i <= hi}, self.space_tag
        )

    def restrict_leq(self, hi: int) -> FinVector:
        return self.restrict(1, hi)

    def restrict_indices(self, keep: Iterable[int]) -> FinVector:
        keep = set(keep)
        return FinVector({i: v for i, v in self.entries.items() if i in keep}, self.space_tag)

    def __add__(self, other: FinVector) -> FinVector:
        return self.add(other)

    def __sub__(self, other: FinVector) -> FinVector:
        return self.sub(other)

    def to_json_obj(self) -> dict:
        return {
            "space": self.space_tag,
            "coeffs": {str(i): rat_str(v) for i, v in sorted(self.entries.items())},
        }

    @staticmethod
    def from_json_obj(obj: dict) -> FinVector:
        coeffs = {int(k): rat(v) for k, v in obj.get("coeffs", {}).items()}
        return FinVector(coeffs, obj.get("space", ""))


def summing_functional(x: FinVector) -> Fraction:
    """S(x) = sum of all coefficients."""
    return sum(x.entries.values(), Fraction(0))


# ---------------------------------------------------------------------------
# Interval partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalPartition:
    """Ordered interval system 1 <= p1 <= q1 < p2 <= q2 < ... (gaps allowed)."""

    intervals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        ivs = tuple((int(p), int(q)) for p, q in self.intervals)
        prev_end = 0
        for p, q in ivs:
            if p < 1 or q < p:
                raise LabError("BAD_INTERVAL", f"interval [{p},{q}] is malformed")
            if p <= prev_end:
                raise LabError("BAD_INTERVAL", f"interval [{p},{q}] overlaps its predecessor")
            prev_end = q
        object.__setattr__(self, "intervals", ivs)

    def is_gapless(self) -> bool:
        return all(
            self.intervals[j + 1][0] == self.intervals[j][1] + 1
            for j in range(len(self.intervals) - 1)
        )


# ---------------------------------------------------------------------------
# Rooted trees, segments, tree vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootedTree:
    """Finite rooted tree with a node ordering compatible with ancestry.

    `order` is a bijection node -> 1..n with order[parent] < order[child];
    it plays the role of the fixed compatible enumeration of tree nodes.
    """

    nodes: tuple[int, ...]
    parent: Mapping[int, int | None]
    order: Mapping[int, int]
    children: Mapping[int, tuple[int, ...]] = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        node_set = set(nodes)
        if len(node_set) != len(nodes) or not nodes:
            raise LabError("BAD_TREE", "node list empty or contains duplicates")
        roots = [n for n in nodes if self.parent.get(n) is None]
        if len(roots) != 1:
            raise LabError("BAD_TREE", f"expected a single root, found {len(roots)}")
        for n in nodes:
            p = self.parent.get(n)
            if p is not None and p not in node_set:
                raise LabError("BAD_TREE", f"parent of {n} is not a node")
        if sorted(self.order.get(n) for n in nodes) != list(range(1, len(nodes) + 1)):
            raise LabError("BAD_TREE", "order must be a bijection onto 1..n")
        kids: dict[int, list[int]] = {n: [] for n in nodes}
        for n in nodes:
            p = self.parent.get(n)
            if p is not None:
                if self.order[p] >= self.order[n]:
                    raise LabError("BAD_TREE", f"order not compatible at edge {p}->{n}")
                kids[p].append(n)
        # acyclicity: every node reaches the root in <= n steps
        for n in nodes:
            seen, cur = 0, n
            while self.parent.get(cur) is not None:
                cur = self.parent[cur]
                seen += 1
                if seen > len(nodes):
                    raise LabError("BAD_TREE", "parent map contains a cycle")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "parent", dict(self.parent))
        object.__setattr__(self, "order", dict(self.order))
        object.__setattr__(
            self, "children", {n: tuple(sorted(c, key=self.order.get)) for n, c in kids.items()}
        )

    @property
    def root(self) -> int:
        for n in self.nodes:
            if self.parent[n] is None:
                return n
        raise LabError("BAD_TREE", "rootless tree")

    def depth(self, node: int) -> int:
        d, cur = 0, node
        while self.parent[cur] is not None:
            cur = self.parent[cur]
            d += 1
        return d

    def path_up(self, node: int) -> tuple[int, ...]:
        """Node, parent, ..., root."""
        out, cur = [node], node
        while self.parent[cur] is not None:
            cur = self.parent[cur]
            out.append(cur)
        return tuple(out)

    def is_ancestor(self, a: int, b: int) -> bool:
        """True iff a is an ancestor of b or a == b."""
        cur = b
        while cur is not None:
            if cur == a:
                return True
            cur = self.parent[cur]
        return False

    def path_between(self, top: int, bottom: int) -> tuple[int, ...]:
        """The unique top..bottom vertical path; requires top ancestor-or-self."""
        out, cur = [], bottom
        while True:
            out.append(cur)
            if cur == top:
                return tuple(reversed(out))
            cur = self.parent[cur]
            if cur is None:
                raise LabError("INVALID_SEGMENT", f"{top} is not an ancestor of {bottom}")

    def leaves(self) -> tuple[int, ...]:
        return tuple(n for n in self.nodes if not self.children[n])

    @staticmethod
    def from_parent_list(pairs: Iterable[tuple[int, int | None]], order: Iterable[int] | None = None) -> RootedTree:
        pairs = list(pairs)
        nodes = tuple(n for n, _ in pairs)
        parent = {n: p for n, p in pairs}
        if order is None:
            order_map = {n: i + 1 for i, n in enumerate(nodes)}
        else:
            order_map = {n: i + 1 for i, n in enumerate(order)}
        return RootedTree(nodes, parent, order_map)

    def to_json_obj(self) -> dict:
        order_sorted = sorted(self.nodes, key=self.order.get)
        return {
            "nodes": [{"id": n, "parent": self.parent[n]} for n in self.nodes],
            "order": order_sorted,
        }

    @staticmethod
    def from_json_obj(obj: dict) -> RootedTree:
        pairs = [(int(d["id"]), None if d["parent"] is None else int(d["parent"])) for d in obj["nodes"]]
        order = [int(n) for n in obj["order"]] if "order" in obj else None
        return RootedTree.from_parent_list(pairs, order)


@dataclass(frozen=True)
class Segment:
    """Vertical path in a tree, from `top` down to `bottom` (inclusive)."""

    top: int
    bottom: int

    def nodes_in(self, tree: RootedTree) -> tuple[int, ...]:
        return tree.path_between(self.top, self.bottom)


@dataclass(frozen=True)
class SegmentSystem:
    """Pairwise node-disjoint collection of segments of one tree."""

    segments: tuple[Segment, ...]
    tree: RootedTree

    def __post_init__(self):
        segs = tuple(self.segments)
        seen: set[int] = set()
        for s in segs:
            path = s.nodes_in(self.tree)
            if seen.intersection(path):
                raise LabError("OVERLAPPING_SEGMENTS", f"segment {s} overlaps the system")
            seen.update(path)
        object.__setattr__(self, "segments", segs)

    def node_set(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.segments:
            out.update(s.nodes_in(self.tree))
        return frozenset(out)


@dataclass(frozen=True)
class TreeVector:
    """Finitely supported rational function on the nodes of a rooted tree."""

    tree: RootedTree
    entries: Mapping[int, Fraction]

    def __post_init__(self):
        node_set = set(self.tree.nodes)
        clean = {}
        for n, v in self.entries.items():
            if n not in node_set:
                raise LabError("BAD_INDEX", f"node {n} not in tree")
            q = rat(v)
            if q != 0:
                clean[n] = q
        object.__setattr__(self, "entries", clean)

    def __getitem__(self, node: int) -> Fraction:
        return self.entries.get(node, Fraction(0))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.entries, key=self.tree.order.get))

    def is_zero(self) -> bool:
        return not self.entries

    def restrict_nodes(self, keep: Iterable[int]) -> TreeVector:
        keep = set(keep)
        return TreeVector(self.tree, {n: v for n, v in self.entries.items() if n in keep})

    def to_fin_vector(self, space_tag: str = "") -> FinVector:
        """Reindex node entries by the tree order o (node basis coordinates)."""
        return FinVector({self.tree.order[n]: v for n, v in self.entries.items()}, space_tag)


def segment_sum(x: TreeVector, s: Segment) -> Fraction:
    """S(x) = sum of x over the segment's path."""
    try:
        path = s.nodes_in(x.tree)
    except LabError as exc:
        raise LabError("INVALID_SEGMENT", str(exc)) from exc
    return sum((x[n] for n in path), Fraction(0))


def branch_functional(x: TreeVector, b: Segment) -> Fraction:
    """Sum of x along a branch given as a segment of the tree."""
    try:
        path = b.nodes_in(x.tree)
    except LabError as exc:
        raise LabError("PATH_NOT_IN_TREE", str(exc)) from exc
    return sum((x[n] for n in path), Fraction(0))


def load_vector(path: str) -> FinVector:
    with open(path, "r", encoding="utf-8") as fh:
        return FinVector.from_json_obj(json.load(fh))


def load_tree(path: str) -> RootedTree:
    with open(path, "r", encoding="utf-8") as fh:
        return RootedTree.from_json_obj(json.load(fh))


def load_tree_vector(path: str, tree: RootedTree) -> TreeVector:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return TreeVector(tree, {int(k): rat(v) for k, v in obj.get("coeffs", {}).items()})
