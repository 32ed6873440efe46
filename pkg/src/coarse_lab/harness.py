"""Experiment harness: synthetic instances, verification suites, reports.

Every case derives its own SplitMix stream from (root seed, case index), so
reports are bit-identical across runs and across worker counts; rows are
merged in case order regardless of scheduling.  Wall times are measured for
console display but kept out of the CSV/JSON artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .combinatorics import (
    OrdinalCNF,
    dk_distance,
    interlacing_predicate,
    pigeonhole_window,
    schreier_member,
    schreier_member_oracle,
)
from .core import FinVector, LabError, RootedTree, TreeVector, rat, rat_str, summing_functional
from .linearization import MapTable, l2_profile, linearize
from .norms import (
    c0_norm,
    james_norm,
    mean_zero_blocks,
    summing_basis_vector,
    tsirelson_norm,
    tsirelson_norm_oracle,
)
from .rng import SplitMix
from .treespace import jt_norm, jt_norm_oracle
from .values import NormValue

SUITES = (
    "jblocks",
    "suppression",
    "pigeonhole",
    "dk-metrics",
    "schreier",
    "jt-oracle",
    "linearize-synthetic",
    "l2profile",
    "tsirelson",
)


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str
    trials: int
    seed: int
    caps: dict = field(default_factory=dict)
    out_dir: str | None = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise LabError("CONFIG_INVALID", f"unknown suite {self.suite!r}")
        if self.trials < 1:
            raise LabError("CONFIG_INVALID", "trials must be >= 1")


@dataclass(frozen=True)
class ReportRow:
    suite: str
    case_id: int
    inputs_digest: str
    verdict: str  # pass | fail | skipped
    witness: str
    seed: int
    wall_ms: float = field(compare=False, default=0.0)


def _digest(obj) -> str:
    return hashlib.sha256(repr(obj).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Synthetic map generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    kind: str
    h0: FinVector
    blocks: dict
    windows: dict
    noise_norms: dict


def _prefix_stream(root: SplitMix, p: tuple[int, ...], N: int) -> SplitMix:
    idx = 1
    for v in p:
        idx = idx * (N + 2) + v
    return root.split(idx)


def _block_content(gen: SplitMix, lo: int, width: int, mean_zero: bool) -> FinVector:
    """Random block on [lo, lo+width); first entry has magnitude >= 1/3 so the
    fence discovery sees the window start through the agreement tolerance."""
    first = Fraction(gen.randint(1, 3), gen.randint(1, 3)) * gen.choice((1, -1))
    entries = {lo: first}
    for off in range(1, width - 1):
        v = gen.rational(3, 3)
        if v:
            entries[lo + off] = v
    if mean_zero and width >= 2:
        tail = -sum(entries.values())
        if tail:
            entries[lo + width - 1] = tail
    elif width >= 2:
        v = gen.rational(3, 3)
        if v:
            entries[lo + width - 1] = v
    return FinVector(entries)


def generate_synthetic_map(kind: str, params: dict, seed: int) -> MapTable:
    """Deterministic MapTable of the requested kind, with ground truth attached
    for the block kinds."""
    params = dict(params or {})
    k = int(params.get("k", 2))
    N = int(params.get("N", 6))
    metric = params.get("metric", "dK")
    if k < 1 or N < k:
        raise LabError("PARAMS_INVALID", "need k >= 1 and N >= k")
    root = SplitMix(seed)

    if kind in ("summing-c0", "summing-Je"):
        space = "c0" if kind == "summing-c0" else params.get("base", "Je:lp:2")
        values = {}
        for t in itertools.combinations(range(1, N + 1), k):
            acc = FinVector.zero(space)
            for n in t:
                acc = acc + summing_basis_vector(n)
            values[t] = FinVector(acc.entries, space)
        return MapTable(k, N, space, metric, values)

    if kind not in ("exact-block", "noisy-block", "adversarial"):
        raise LabError("PARAMS_INVALID", f"unknown synthetic kind {kind!r}")
    if kind == "adversarial" and k < 2:
        raise LabError("PARAMS_INVALID", "adversarial maps need k >= 2 (a later coordinate)")
    width = int(params.get("width", 2))
    space = params.get("space", "J")
    levelled = bool(params.get("levelled", False))
    mean_zero = bool(params.get("mean_zero", levelled))
    if (mean_zero or levelled) and width < 2:
        raise LabError("PARAMS_INVALID", "mean-zero blocks need width >= 2")

    windows = {0: (1, width)}
    for v in range(1, N + 1):
        windows[v] = (v * width + 1, (v + 1) * width)

    h0 = _block_content(root.split(0), 1, width, False)
    level_coeff = {
        i: Fraction(root.split(10_000 + i).randint(1, 4), 2) for i in range(1, k + 1)
    }
    blocks: dict[tuple[int, ...], FinVector] = {}

    def block_for(p: tuple[int, ...]) -> FinVector:
        got = blocks.get(p)
        if got is None:
            lo = windows[p[-1]][0]
            if levelled:
                c = level_coeff[len(p)]
                got = FinVector({lo: c, lo + 1: -c})
            else:
                got = _block_content(_prefix_stream(root, p, N), lo, width, mean_zero)
            blocks[p] = got
        return got

    values: dict[tuple[int, ...], FinVector] = {}
    noise_norms: dict[tuple[int, ...], Fraction] = {}
    delta = rat(params.get("delta", Fraction(1, 10)))
    low = min(delta / 4, Fraction(1, 128))
    for t in itertools.combinations(range(1, N + 1), k):
        acc = h0
        for i in range(1, k + 1):
            acc = acc + block_for(t[:i])
        if kind == "noisy-block":
            gen = _prefix_stream(root, t, N).split(77)
            cl = low * Fraction(gen.randint(-4, 4), 4)
            ch = (delta - low) * Fraction(gen.randint(-4, 4), 4)
            noise = FinVector({1: cl, windows[t[-1]][0]: ch})
            nn = james_norm(noise)
            if nn > NormValue.rational(delta):
                raise LabError("INTERNAL", "noise exceeded its budget")
            noise_norms[t] = nn.squared()
            acc = acc + noise
        elif kind == "adversarial":
            acc = acc + FinVector({1: Fraction(t[1])})
        values[t] = FinVector(acc.entries, space)

    gt = GroundTruth(kind, h0, dict(blocks), windows, noise_norms)
    return MapTable(k, N, space, metric, values, ground_truth=gt)


# ---------------------------------------------------------------------------
# Suite cases
# ---------------------------------------------------------------------------


def _row(suite, case_id, inputs, ok, witness, seed, t0) -> ReportRow:
    return ReportRow(
        suite,
        case_id,
        _digest(inputs),
        "pass" if ok else "fail",
        witness,
        seed,
        (time.perf_counter() - t0) * 1000.0,
    )


def _case_jblocks(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    count = gen.randint(1, caps.get("blocks", 8))
    width = gen.randint(2, caps.get("width", 4))
    blocks = mean_zero_blocks(seed, count, width)
    total = FinVector.zero("J")
    for b in blocks:
        total = total + b
    sum_sq = sum((james_norm(b).squared() for b in blocks), Fraction(0))
    tot_sq = james_norm(total).squared()
    ok = sum_sq <= tot_sq <= 4 * sum_sq and all(summing_functional(b) == 0 for b in blocks)
    witness = f"sum_sq={rat_str(sum_sq)} total_sq={rat_str(tot_sq)}"
    return _row("jblocks", case_id, (count, width, seed), ok, witness, seed, t0)


def _case_suppression(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    count = gen.randint(1, min(6, caps.get("blocks", 6)))
    width = gen.randint(2, caps.get("width", 4))
    blocks = mean_zero_blocks(seed, count, width)
    total = FinVector.zero("J")
    for b in blocks:
        total = total + b
    full = james_norm(total).squared()
    ok = True
    worst = Fraction(0)
    for mask in range(1 << count):
        part = FinVector.zero("J")
        for i in range(count):
            if mask >> i & 1:
                part = part + blocks[i]
        psq = james_norm(part).squared()
        worst = max(worst, psq)
        if psq > full:
            ok = False
            break
    witness = f"full_sq={rat_str(full)} worst_subset_sq={rat_str(worst)}"
    return _row("suppression", case_id, (count, width, seed), ok, witness, seed, t0)


def _case_pigeonhole(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    k = gen.randint(1, caps.get("k", 4))
    eps = Fraction(1, gen.randint(2, 4))
    K = Fraction(1)
    min_M = int(k * k * K * K / (eps * eps)) + 1
    M = ((min_M + k - 1) // k + gen.randint(0, 2)) * k
    raw = [gen.rational(6, 3) for _ in range(M)]
    ssq = sum((v * v for v in raw), Fraction(0))
    if ssq > K * K:
        import math

        q = Fraction(math.isqrt(int(ssq / (K * K))) + 1)
        raw = [v / q for v in raw]
    res = pigeonhole_window(raw, k, eps, K)
    ok = res.guaranteed and res.total < eps
    witness = f"N={res.start} window_total={rat_str(res.total)} eps={rat_str(eps)}"
    return _row("pigeonhole", case_id, (k, str(eps), M, seed), ok, witness, seed, t0)


def _case_dk_metrics(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    k = gen.randint(2, caps.get("k", 3))
    N = gen.randint(2 * k + 1, caps.get("N", 8))
    verts = list(itertools.combinations(range(1, N + 1), k))
    u = gen.choice(verts)
    v = gen.choice(verts)
    w = gen.choice(verts)
    duv = dk_distance(u, v, N)
    ok = duv == dk_distance(v, u, N)
    ok = ok and duv <= dk_distance(u, w, N) + dk_distance(w, v, N)
    if u != v and interlacing_predicate(u, v):
        ok = ok and duv == 1
    witness = f"k={k} N={N} d={duv}"
    return _row("dk-metrics", case_id, (k, N, u, v, w), ok, witness, seed, t0)


_SCHREIER_ALPHAS = ("1", "2", "3", "w", "w+1", "w*2")


def _case_schreier(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    alpha = OrdinalCNF.parse(gen.choice(_SCHREIER_ALPHAS))
    top = caps.get("top", 9)
    size = gen.randint(1, min(6, top))
    E = tuple(gen.sample_sorted(1, top, size))
    got = schreier_member(E, alpha)
    want = schreier_member_oracle(E, alpha)
    ok = got == want
    witness = f"alpha={alpha} E={E} member={got}"
    return _row("schreier", case_id, (str(alpha), E), ok, witness, seed, t0)


def _random_tree(gen: SplitMix, n: int) -> RootedTree:
    pairs = [(0, None)]
    for i in range(1, n):
        pairs.append((i, gen.randint(0, i - 1)))
    return RootedTree.from_parent_list(pairs)


def _case_jt_oracle(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    n = gen.randint(1, caps.get("nodes", 10))
    tree = _random_tree(gen, n)
    entries = {i: gen.rational(4, 3) for i in range(n) if gen.randint(0, 3) > 0}
    x = TreeVector(tree, entries)
    a = jt_norm(x)
    b = jt_norm_oracle(x)
    rep_sq = sum(
        (s * s for s in (sum((x[nd] for nd in seg.nodes_in(tree)), Fraction(0)) for seg in a.witness.segments)),
        Fraction(0),
    )
    ok = a.value == b.value and rep_sq == a.value.squared()
    witness = f"nodes={n} norm_sq={rat_str(a.value.squared())}"
    return _row("jt-oracle", case_id, (n, tuple(sorted(entries.items()))), ok, witness, seed, t0)


def _case_linearize(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    k = gen.randint(1, caps.get("k", 3))
    N = gen.randint(k + 2, caps.get("N", 8))
    phi = generate_synthetic_map("exact-block", {"k": k, "N": N}, seed)
    dec = linearize(phi, Fraction(1, 10), 3)
    gt = phi.ground_truth
    ok = all(r == NormValue.rational(0) for r in dec.residuals.values())
    ok = ok and all(dec.blocks[p] == gt.blocks[p] for p in dec.blocks)
    ok = ok and dec.h0 == gt.h0
    witness = f"k={k} N={N} blocks={len(dec.blocks)}"
    return _row("linearize-synthetic", case_id, (k, N, seed), ok, witness, seed, t0)


def _case_l2profile(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    M = gen.randint(2, caps.get("M", 3))
    N = max(2 * M + 1, M + 2)
    phi = generate_synthetic_map("exact-block", {"k": M, "N": N, "levelled": True}, seed)
    dec = linearize(phi, Fraction(1, 10), 3)
    prof = l2_profile(dec, Fraction(1, 10), Fraction(20))
    ok = prof.interval_checks > 0 and sum(prof.a_squared, Fraction(0)) <= prof.sum_bound_sq
    witness = f"M={M} a_sq={[rat_str(q) for q in prof.a_squared]}"
    return _row("l2profile", case_id, (M, N, seed), ok, witness, seed, t0)


def _case_tsirelson(case_id: int, seed: int, caps: dict) -> ReportRow:
    t0 = time.perf_counter()
    gen = SplitMix(seed)
    size = gen.randint(1, caps.get("support", 7))
    sup = gen.sample_sorted(1, caps.get("top", 12), size)
    x = FinVector({i: gen.rational(4, 3, nonzero=True) for i in sup}, "T")
    a = tsirelson_norm(x)
    ok = a == tsirelson_norm_oracle(x) and a >= c0_norm(x)
    flipped = FinVector({i: -v if gen.randint(0, 1) else v for i, v in x.entries.items()}, "T")
    ok = ok and tsirelson_norm(flipped) == a
    witness = f"support={sup} norm={a!r}"
    return _row("tsirelson", case_id, (tuple(sorted(x.entries.items())),), ok, witness, seed, t0)


_CASE_FUNCS = {
    "jblocks": _case_jblocks,
    "suppression": _case_suppression,
    "pigeonhole": _case_pigeonhole,
    "dk-metrics": _case_dk_metrics,
    "schreier": _case_schreier,
    "jt-oracle": _case_jt_oracle,
    "linearize-synthetic": _case_linearize,
    "l2profile": _case_l2profile,
    "tsirelson": _case_tsirelson,
}


def _worker_count() -> int:
    env = os.environ.get("COARSE_LAB_THREADS")
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def run_suite(cfg: ExperimentConfig, case_id: int | None = None) -> list[ReportRow]:
    """Run a suite's cases concurrently with per-case derived seeds.

    Rows come back in case order; writes report-<suite>.csv / .json when
    cfg.out_dir is set.  Deterministic: the artifacts depend only on
    (config, seed).
    """
    fn = _CASE_FUNCS[cfg.suite]
    root = SplitMix(cfg.seed)
    indices = [case_id] if case_id is not None else list(range(cfg.trials))
    if case_id is not None and not 0 <= case_id < cfg.trials:
        raise LabError("CONFIG_INVALID", f"case-id {case_id} outside 0..{cfg.trials - 1}")

    def run_one(i: int) -> ReportRow:
        case_seed = root.split(i).next_u64()
        try:
            return fn(i, case_seed, cfg.caps)
        except LabError as exc:
            return ReportRow(cfg.suite, i, _digest((i,)), "fail", f"error {exc}", case_seed)

    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        rows = list(pool.map(run_one, indices))
    rows.sort(key=lambda r: r.case_id)
    if cfg.out_dir:
        write_reports(rows, cfg)
    return rows


def write_reports(rows: list[ReportRow], cfg: ExperimentConfig) -> tuple[Path, Path]:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"report-{cfg.suite}.csv"
    json_path = out / f"report-{cfg.suite}.json"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["suite", "case_id", "inputs_digest", "verdict", "witness", "seed"])
        for r in rows:
            writer.writerow([r.suite, r.case_id, r.inputs_digest, r.verdict, r.witness, r.seed])
    payload = {
        "suite": cfg.suite,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "rows": [
            {
                "case_id": r.case_id,
                "inputs_digest": r.inputs_digest,
                "verdict": r.verdict,
                "witness": r.witness,
                "seed": r.seed,
            }
            for r in rows
        ],
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def load_config(path: str) -> ExperimentConfig:
    try:
        import tomllib  # Python 3.11+
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    exp = doc.get("experiment", {})
    if "suite" not in exp:
        raise LabError("CONFIG_INVALID", "[experiment].suite missing")
    return ExperimentConfig(
        exp["suite"],
        int(exp.get("trials", 10)),
        int(exp.get("seed", 1)),
        dict(doc.get("caps", {})),
        exp.get("out"),
    )
