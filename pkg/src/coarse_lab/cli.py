"""coarse-lab command line interface.

Exit codes: 0 all checks pass, 1 verification failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from .combinatorics import (
    OrdinalCNF,
    dk_distance,
    dstar_distance,
    schreier_maximal_sets,
    schreier_member,
)
from .core import LabError, load_tree, load_tree_vector, load_vector, rat, rat_str
from .harness import (
    SUITES,
    ExperimentConfig,
    generate_synthetic_map,
    load_config,
    run_suite,
    write_reports,
)
from .linearization import MapTable, interlacing_audit, linearize
from .norms import (
    get_oracle,
    james_norm_oracle,
    tsirelson_dual_bounds,
    tsirelson_norm_oracle,
)
from .treespace import branch_capture, jt_generalized_norm, jt_norm, jt_norm_oracle

_WEIGHTS = {
    "identity": lambda s: Fraction(s),
    "log2ceil": lambda s: Fraction(max(1, math.ceil(math.log2(s + 1)))),
}


def _parse_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _print_norm(nv) -> None:
    print(f"{nv!r} = {nv.decimal(12)}")


def cmd_norm(args) -> int:
    x = load_vector(args.vector)
    if args.space.startswith("Tdual:"):
        depth = int(args.space.split(":", 1)[1])
        _print_norm(tsirelson_dual_bounds(x, depth))
        return 0
    oracle = get_oracle(args.space)
    nv = oracle(x)
    _print_norm(nv)
    if args.check_oracle:
        if args.space == "J":
            other = james_norm_oracle(x)
        elif args.space == "T":
            other = tsirelson_norm_oracle(x)
        else:
            print("no independent oracle registered for this space", file=sys.stderr)
            return 2
        agree = nv == other
        print(f"oracle {other!r} agree={agree}")
        return 0 if agree else 1
    return 0


def cmd_jtnorm(args) -> int:
    tree = load_tree(args.tree)
    x = load_tree_vector(args.vector, tree)
    if args.base:
        res = jt_generalized_norm(x, get_oracle(args.base))
    else:
        res = jt_norm(x)
    _print_norm(res.value)
    print("witness:", [(s.top, s.bottom) for s in res.witness.segments])
    ok = True
    if args.oracle:
        if args.base:
            print("oracle comparison only for the l2 outer norm", file=sys.stderr)
            return 2
        other = jt_norm_oracle(x)
        ok = other.value == res.value
        print(f"oracle {other.value!r} agree={ok}")
    if args.capture:
        cap = branch_capture(x, rat(args.capture))
        print(
            "capture:",
            [(s.top, s.bottom) for s in cap.branches],
            f"norm {cap.captured!r}",
            "(heuristic)" if cap.heuristic else "(minimal)",
        )
    return 0 if ok else 1


def cmd_graph(args) -> int:
    u, v = _parse_tuple(args.u), _parse_tuple(args.v)
    if args.k is not None and args.k != len(u):
        raise LabError("BAD_TUPLE", f"--k {args.k} does not match the tuple length {len(u)}")
    if args.graph_cmd == "dk":
        d = dk_distance(u, v, args.N)
        print(f"d_K({u}, {v}) = {d}  [N={args.N}]")
    else:
        f = _WEIGHTS[args.f]
        d = dstar_distance(u, v, args.N, f)
        print(f"d*({u}, {v}) = {rat_str(d)}  [N={args.N}, f={args.f}]")
    return 0


def cmd_schreier(args) -> int:
    alpha = OrdinalCNF.parse(args.alpha)
    if args.schreier_cmd == "member":
        E = _parse_tuple(args.set)
        print(schreier_member(E, alpha))
        return 0
    sets = schreier_maximal_sets(alpha, args.N)
    for E in sets:
        print(",".join(map(str, E)))
    return 0


def cmd_verify(args) -> int:
    cfg = ExperimentConfig(args.suite, args.trials, args.seed, {}, args.out)
    rows = run_suite(cfg)
    fails = [r for r in rows if r.verdict != "pass"]
    for r in rows:
        print(f"{r.suite}[{r.case_id}] {r.verdict}  {r.witness}")
    print(f"{len(rows) - len(fails)}/{len(rows)} passed")
    return 1 if fails else 0


def cmd_linearize(args) -> int:
    phi = MapTable.load(args.map)
    dec = linearize(phi, rat(args.eps), args.min_size)
    payload = dec.to_json_obj()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.out}")
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        print()
    worst = max(dec.residuals.values()) if dec.residuals else None
    print(f"blocks={len(dec.blocks)} homogeneous={len(dec.homogeneous_set)} worst_residual={worst!r}")
    return 0


def cmd_audit(args) -> int:
    phi = MapTable.load(args.map)
    res = interlacing_audit(phi, rat(args.C))
    if res.witness:
        print(f"witness {res.witness[0]} vs {res.witness[1]} ratio={res.best_ratio!r}")
    else:
        print(f"exhausted; best ratio {res.best_ratio!r} does not meet C={args.C}")
    print(f"pairs_scanned={res.pairs_scanned}")
    return 0


def cmd_synth(args) -> int:
    params = {"k": args.k, "N": args.N}
    if args.space:
        params["space"] = args.space
    if args.levelled:
        params["levelled"] = True
    phi = generate_synthetic_map(args.kind, params, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(phi.to_json_obj(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out} ({len(phi.values)} tuples)")
    return 0


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    rows = run_suite(cfg, case_id=args.case_id)
    if cfg.out_dir is None and args.case_id is None:
        cfg = ExperimentConfig(cfg.suite, cfg.trials, cfg.seed, cfg.caps, "reports")
        write_reports(rows, cfg)
    fails = [r for r in rows if r.verdict != "pass"]
    print(f"suite={cfg.suite} seed={cfg.seed} rows={len(rows)} failed={len(fails)}")
    for r in fails:
        print(f"  FAIL case {r.case_id}: {r.witness} (seed {r.seed})")
    return 1 if fails else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coarse-lab", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    q = sub.add_parser("norm", help="evaluate a norm on a vector JSON file")
    q.add_argument("--space", required=True, help="c0 | lp:<p> | J | Je:<base> | T | Tdual:<depth>")
    q.add_argument("--vector", required=True)
    q.add_argument("--check-oracle", action="store_true")
    q.set_defaults(fn=cmd_norm)

    q = sub.add_parser("jtnorm", help="evaluate the James tree norm")
    q.add_argument("--tree", required=True)
    q.add_argument("--vector", required=True)
    q.add_argument("--base", help="outer base norm tag (default: l2)")
    q.add_argument("--capture", help="run branch capture with this eta")
    q.add_argument("--oracle", action="store_true")
    q.set_defaults(fn=cmd_jtnorm)

    q = sub.add_parser("graph", help="interlacing graph metrics")
    gs = q.add_subparsers(dest="graph_cmd", required=True)
    for name in ("dk", "dstar"):
        g = gs.add_parser(name)
        g.add_argument("--k", type=int, required=False)
        g.add_argument("--N", type=int, required=True)
        g.add_argument("--u", required=True)
        g.add_argument("--v", required=True)
        if name == "dstar":
            g.add_argument("--f", choices=sorted(_WEIGHTS), default="identity")
        g.set_defaults(fn=cmd_graph)

    q = sub.add_parser("schreier", help="Schreier family queries")
    ss = q.add_subparsers(dest="schreier_cmd", required=True)
    m = ss.add_parser("member")
    m.add_argument("--alpha", required=True, help='ordinal, e.g. "w^2+w*3+1"')
    m.add_argument("--set", required=True, help="comma-separated increasing integers")
    m.set_defaults(fn=cmd_schreier)
    m = ss.add_parser("maximal")
    m.add_argument("--alpha", required=True)
    m.add_argument("--N", type=int, required=True)
    m.set_defaults(fn=cmd_schreier)

    q = sub.add_parser("verify", help="run a verification suite")
    q.add_argument("suite", choices=sorted(SUITES))
    q.add_argument("--trials", type=int, default=25)
    q.add_argument("--seed", type=int, default=1)
    q.add_argument("--out", help="directory for CSV/JSON reports")
    q.set_defaults(fn=cmd_verify)

    q = sub.add_parser("linearize", help="run the finite linearization engine")
    q.add_argument("--map", required=True)
    q.add_argument("--eps", required=True)
    q.add_argument("--min-size", type=int, default=3)
    q.add_argument("--out")
    q.set_defaults(fn=cmd_linearize)

    q = sub.add_parser("audit", help="interlacing audits")
    asub = q.add_subparsers(dest="audit_cmd", required=True)
    a = asub.add_parser("interlace")
    a.add_argument("--map", required=True)
    a.add_argument("--C", required=True)
    a.set_defaults(fn=cmd_audit)

    q = sub.add_parser("synth", help="generate a synthetic map JSON file")
    q.add_argument("--kind", required=True, choices=["exact-block", "noisy-block", "adversarial", "summing-c0", "summing-Je"])
    q.add_argument("--k", type=int, default=2)
    q.add_argument("--N", type=int, default=6)
    q.add_argument("--seed", type=int, default=1)
    q.add_argument("--space")
    q.add_argument("--levelled", action="store_true")
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_synth)

    q = sub.add_parser("report", help="run a suite from a TOML config")
    q.add_argument("--config", required=True)
    q.add_argument("--case-id", type=int)
    q.set_defaults(fn=cmd_report)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except LabError as exc:
        if exc.code == "STABILIZATION_FAILED":
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
