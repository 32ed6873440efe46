import itertools
from fractions import Fraction

import pytest

from coarse_lab.core import FinVector, LabError
from coarse_lab.harness import generate_synthetic_map
from coarse_lab.linearization import (
    AuditResult,
    BlockDecomposition,
    CoarseBounds,
    MapTable,
    StabilizationFailed,
    StepFunction,
    block_norm_bounds,
    check_coarse_bounds,
    interlacing_audit,
    interlacing_audit_oracle,
    l2_profile,
    linearize,
    linf_block_search,
)
from coarse_lab.norms import get_oracle
from coarse_lab.rng import SplitMix
from coarse_lab.values import NormValue

F = Fraction


def test_step_function():
    s = StepFunction(((F(1), F(1)), (F(3), F(2))))
    assert s.value_at(F(1, 2)) is None
    assert s.value_at(1) == 1 and s.value_at(2) == 1 and s.value_at(5) == 2
    with pytest.raises(LabError):
        StepFunction(((F(2), F(2)), (F(1), F(1))))


def test_map_table_json_round_trip(tmp_path):
    phi = generate_synthetic_map("exact-block", {"k": 2, "N": 5}, 5)
    path = tmp_path / "map.json"
    import json

    with open(path, "w") as fh:
        json.dump(phi.to_json_obj(), fh)
    phi2 = MapTable.load(str(path))
    assert phi2.values == dict(phi.values)
    assert (phi2.k, phi2.N, phi2.space_tag, phi2.metric) == (phi.k, phi.N, phi.space_tag, phi.metric)


def test_map_table_validation():
    with pytest.raises(LabError):
        MapTable(2, 5, "J", "dK", {(1, 6): FinVector({1: 1})})
    with pytest.raises(LabError):
        MapTable(2, 5, "J", "nope", {})


# -- coarse bounds -------------------------------------------------------------


def test_coarse_bounds_summing_c0():
    phi = generate_synthetic_map("summing-c0", {"k": 2, "N": 6, "metric": "c0-summing"}, 1)
    bounds = CoarseBounds(StepFunction(((F(1), F(1)),)), StepFunction(((F(1), F(1)), (F(2), F(10)))), F(1))
    rep = check_coarse_bounds(phi, bounds)
    assert rep.ok
    # interlacing pairs (distance 1) have image distance exactly 1
    assert rep.rho_emp[F(1)] == NormValue.rational(1)
    assert rep.omega_emp[F(1)] == NormValue.rational(1)
    dists = sorted(rep.rho_emp_regular)
    for a, b in zip(dists, dists[1:]):
        assert rep.rho_emp_regular[a] <= rep.rho_emp_regular[b]
        assert rep.omega_emp_regular[a] <= rep.omega_emp_regular[b]
        assert rep.rho_emp[a] <= rep.omega_emp[a]


def test_coarse_bounds_constant_map_violates_rho():
    vals = {t: FinVector({1: 1}) for t in itertools.combinations(range(1, 6), 2)}
    phi = MapTable(2, 5, "c0", "dK", vals)
    bounds = CoarseBounds(StepFunction(((F(1), F(1, 2)),)), None, F(5))
    rep = check_coarse_bounds(phi, bounds)
    assert not rep.ok and rep.first_violation[2] == "rho"
    assert all(v == NormValue.rational(0) for v in rep.omega_emp.values())


def test_coarse_bounds_disjoint_tuples_l2():
    # phi(n) = sum of e_{n_i} in l2: disjoint tuples are at image distance sqrt(2k)
    k, N = 3, 9
    vals = {
        t: FinVector({i: F(1) for i in t}, "lp:2")
        for t in itertools.combinations(range(1, N + 1), k)
    }
    phi = MapTable(k, N, "lp:2", "dK", vals)
    u, v = (1, 2, 3), (4, 5, 6)
    assert phi.norm(phi.values[u] - phi.values[v]) == NormValue.sqrt(2 * k)


# -- linearize -----------------------------------------------------------------


def test_linearize_exact_block_recovery():
    for seed in (3, 14, 15):
        for k in (1, 2, 3):
            phi = generate_synthetic_map("exact-block", {"k": k, "N": k + 4}, seed)
            dec = linearize(phi, F(1, 10), 3)
            gt = phi.ground_truth
            assert dec.h0 == gt.h0
            assert all(r == NormValue.rational(0) for r in dec.residuals.values())
            for p, b in dec.blocks.items():
                assert b == gt.blocks[p]


def test_linearize_support_fences_separate_blocks():
    phi = generate_synthetic_map("exact-block", {"k": 3, "N": 8}, 8)
    dec = linearize(phi, F(1, 10), 3)
    for t in dec.homogeneous_set:
        prev_end = dec.h0.max_support() or 0
        for i in range(1, len(t) + 1):
            b = dec.blocks[t[:i]]
            if b.is_zero():
                continue
            assert b.min_support() > prev_end
            prev_end = b.max_support()


def test_linearize_round_trip_contract():
    phi = generate_synthetic_map("noisy-block", {"k": 2, "N": 7}, 21)
    eps = F(1, 4)
    dec = linearize(phi, eps, 3)
    for t in dec.homogeneous_set:
        resid = phi.values[t] - dec.reconstruct(t)
        assert phi.norm(resid) <= NormValue.rational(eps)
        assert phi.norm(resid) == dec.residuals[t]


def test_linearize_noisy_blocks():
    ok = 0
    for seed in range(10):
        phi = generate_synthetic_map("noisy-block", {"k": 2, "N": 6, "delta": F(1, 10)}, seed)
        dec = linearize(phi, F(1, 4), 3)
        assert all(r <= NormValue.rational(F(1, 4)) for r in dec.residuals.values())
        ok += 1
    assert ok == 10


def test_linearize_adversarial_fails():
    for seed, k, N in ((2, 2, 6), (9, 2, 6), (5, 3, 7)):
        phi = generate_synthetic_map("adversarial", {"k": k, "N": N}, seed)
        with pytest.raises(StabilizationFailed) as err:
            linearize(phi, F(1, 4), 3)
        assert err.value.best_size < 3


def test_linearize_min_size_too_large():
    phi = generate_synthetic_map("exact-block", {"k": 2, "N": 5}, 4)
    with pytest.raises(StabilizationFailed):
        linearize(phi, F(1, 10), 9)


def test_linearize_partial_salvage():
    # low-support content keyed to "second coordinate equals 4" breaks the
    # value-ordering of supports on the full base; the clique search drops 4
    # and certifies the remaining exact map
    phi = generate_synthetic_map("exact-block", {"k": 2, "N": 7}, 11)
    bad = 4
    values = dict(phi.values)
    for t, v in values.items():
        if t[1] == bad:
            values[t] = v + FinVector({1: F(4)})
    phi2 = MapTable(2, 7, "J", "dK", values)
    dec = linearize(phi2, F(1, 10), 3)
    assert bad not in dec.base
    assert all(r <= NormValue.rational(F(1, 10)) for r in dec.residuals.values())


# -- block norm bounds ---------------------------------------------------------


def test_block_norm_bounds_exact_map():
    phi = generate_synthetic_map("exact-block", {"k": 2, "N": 7}, 12)
    dec = linearize(phi, F(1, 10), 3)
    rep = block_norm_bounds(dec, phi, F(20))
    assert rep.ok and rep.rows
    for row in rep.rows:
        assert row.distance >= 1


def test_block_norm_bounds_flags_inflated_block():
    phi = generate_synthetic_map("exact-block", {"k": 2, "N": 7}, 13)
    dec = linearize(phi, F(1, 10), 3)
    rep = block_norm_bounds(dec, phi, F(20))
    target = rep.rows[0].prefix
    blocks = dict(dec.blocks)
    blocks[target] = blocks[target].scale(10_000) if not blocks[target].is_zero() else FinVector({50: 10_000})
    dec2 = BlockDecomposition(
        dec.h0, blocks, dec.cut_points, dec.homogeneous_set, dec.residuals, dec.eps, dec.base, dec.space_tag
    )
    rep2 = block_norm_bounds(dec2, phi, F(20))
    flagged = {r.prefix: r.ok for r in rep2.rows}
    assert flagged[target] is False


def test_block_norm_bounds_no_witness():
    # a two-value base leaves no room for the alternating pattern
    vals = {(1, 2): FinVector({1: 1})}
    phi = MapTable(2, 2, "c0", "dK", vals)
    dec = BlockDecomposition(
        FinVector({}), {(1,): FinVector({1: 1}), (1, 2): FinVector({})},
        ((1, 0), (2, 0)), ((1, 2),), {(1, 2): NormValue.rational(0)}, F(1, 10), (1, 2), "c0",
    )
    with pytest.raises(LabError) as err:
        block_norm_bounds(dec, phi, F(1))
    assert err.value.code == "NO_WITNESS_IN_DOMAIN"


# -- interlacing audit -----------------------------------------------------------


def _audits_agree(a: AuditResult, b: AuditResult) -> bool:
    if (a.witness is None) != (b.witness is None):
        return False
    if a.best_ratio is None:
        return b.best_ratio is None
    return a.best_ratio == b.best_ratio and a.meets_C == b.meets_C


def test_audit_summing_c0_threshold():
    # ||phi(n)|| = k and interlacing differences have norm 1: witness iff C >= k
    k = 3
    phi = generate_synthetic_map("summing-c0", {"k": k, "N": 8}, 1)
    assert interlacing_audit(phi, F(k)).witness is not None
    assert interlacing_audit(phi, F(k) - F(1, 2)).witness is None
    assert interlacing_audit(phi, F(k)).best_ratio == NormValue.rational(k)


def test_audit_constant_map_no_witness():
    vals = {t: FinVector({1: 1}) for t in itertools.combinations(range(1, 6), 2)}
    phi = MapTable(2, 5, "c0", "dK", vals)
    res = interlacing_audit(phi, F(1000))
    assert res.witness is None and res.best_ratio is None


def test_audit_equals_oracle_on_random_maps():
    gen = SplitMix(17)
    for i in range(6):
        kind = ("summing-c0", "summing-Je", "exact-block")[i % 3]
        phi = generate_synthetic_map(kind, {"k": 2, "N": 7}, gen.next_u64())
        C = F(gen.randint(1, 5))
        assert _audits_agree(interlacing_audit(phi, C), interlacing_audit_oracle(phi, C))


# -- l2 profile ------------------------------------------------------------------


def test_l2_profile_levelled_map():
    phi = generate_synthetic_map("exact-block", {"k": 3, "N": 7, "levelled": True}, 19)
    dec = linearize(phi, F(1, 10), 3)
    prof = l2_profile(dec, F(1, 10), F(20))
    assert prof.interval_checks > 0
    assert sum(prof.a_squared, F(0)) <= prof.sum_bound_sq
    # stabilized values match the ground-truth level norms
    gt = phi.ground_truth
    for i, asq in enumerate(prof.a_squared, start=1):
        p = next(p for p in dec.blocks if len(p) == i)
        assert asq == phi.norm(gt.blocks[p]).squared()


def test_l2_profile_zero_map():
    vals = {t: FinVector({}) for t in itertools.combinations(range(1, 8), 2)}
    phi = MapTable(2, 7, "J", "dK", vals)
    dec = linearize(phi, F(1, 10), 3)
    prof = l2_profile(dec, F(1, 10), F(0))  # the zero map is 0-Lipschitz
    assert all(q == 0 for q in prof.a_squared)
    assert prof.window is not None  # any window works on the zero profile


def test_block_norm_bounds_constant_map_trivial():
    vals = {t: FinVector({1: 1}) for t in itertools.combinations(range(1, 7), 2)}
    phi = MapTable(2, 6, "c0", "dK", vals)
    dec = linearize(phi, F(1, 10), 3)
    rep = block_norm_bounds(dec, phi, F(1))
    assert rep.ok
    assert all(row.block_norm == NormValue.rational(0) for row in rep.rows)


def test_l2_profile_rejects_oversized_sum():
    phi = generate_synthetic_map("exact-block", {"k": 2, "N": 6, "levelled": True}, 23)
    dec = linearize(phi, F(1, 10), 3)
    with pytest.raises(LabError) as err:
        l2_profile(dec, F(1, 10), F(1, 100))  # absurdly small K
    assert err.value.code == "PROFILE_UNSTABLE"


def test_l2_profile_unstable_levels():
    # non-levelled exact map: level norms differ across prefixes
    phi = generate_synthetic_map("exact-block", {"k": 2, "N": 7}, 29)
    dec = linearize(phi, F(1, 10), 3)
    with pytest.raises(LabError) as err:
        l2_profile(dec, F(1, 1000), F(100))
    assert err.value.code == "PROFILE_UNSTABLE"


# -- l-infinity probe ------------------------------------------------------------


def test_linf_probe_c0_immediate():
    res = linf_block_search(get_oracle("c0"), 4, F(1), 2)
    assert res.found
    assert all(len(b.entries) == 1 for b in res.blocks)


def test_linf_probe_l2_never_finds():
    res = linf_block_search(get_oracle("lp:2"), 4, F(11, 10), 5)
    assert not res.found


def test_linf_probe_tsirelson_recorded():
    res = linf_block_search(get_oracle("T"), 3, F(21, 20), 3, starts=(1, 4, 16))
    assert isinstance(res.found, bool) and res.families_checked > 0
