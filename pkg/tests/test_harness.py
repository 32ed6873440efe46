from fractions import Fraction

import pytest

from coarse_lab.core import LabError, summing_functional
from coarse_lab.harness import (
    ExperimentConfig,
    SUITES,
    generate_synthetic_map,
    load_config,
    run_suite,
)
from coarse_lab.norms import james_norm
from coarse_lab.values import NormValue

F = Fraction


def test_exact_block_generator_contract():
    phi = generate_synthetic_map("exact-block", {"k": 2, "N": 6}, 7)
    gt = phi.ground_truth
    assert len(phi.values) == 15
    for t, v in phi.values.items():
        rebuilt = gt.h0
        for i in (1, 2):
            rebuilt = rebuilt + gt.blocks[t[:i]]
        assert rebuilt == v
    # blocks sit inside their value-keyed windows
    for p, b in gt.blocks.items():
        lo, hi = gt.windows[p[-1]]
        if not b.is_zero():
            assert lo <= b.min_support() and b.max_support() <= hi


def test_noisy_generator_noise_budget_exact():
    delta = F(1, 10)
    phi = generate_synthetic_map("noisy-block", {"k": 2, "N": 6, "delta": delta}, 9)
    gt = phi.ground_truth
    for t, v in phi.values.items():
        rebuilt = gt.h0
        for i in (1, 2):
            rebuilt = rebuilt + gt.blocks[t[:i]]
        noise = v - rebuilt
        assert james_norm(noise) <= NormValue.rational(delta)


def test_levelled_generator_equal_level_norms():
    phi = generate_synthetic_map("exact-block", {"k": 3, "N": 7, "levelled": True}, 31)
    gt = phi.ground_truth
    for lvl in (1, 2, 3):
        norms = {james_norm(b).squared() for p, b in gt.blocks.items() if len(p) == lvl}
        assert len(norms) == 1
        assert all(summing_functional(b) == 0 for p, b in gt.blocks.items() if len(p) == lvl)


def test_summing_c0_generator():
    phi = generate_synthetic_map("summing-c0", {"k": 2, "N": 5}, 3)
    # phi(n) = sum of summing vectors: coordinate j counts entries >= j
    v = phi.values[(2, 4)]
    assert v[1] == 2 and v[2] == 2 and v[3] == 1 and v[4] == 1 and v[5] == 0


def test_generator_rejects_bad_params():
    with pytest.raises(LabError) as err:
        generate_synthetic_map("adversarial", {"k": 1, "N": 5}, 1)
    assert err.value.code == "PARAMS_INVALID"
    with pytest.raises(LabError):
        generate_synthetic_map("nope", {}, 1)


def test_config_validation():
    with pytest.raises(LabError) as err:
        ExperimentConfig("jblocks", 0, 1)
    assert err.value.code == "CONFIG_INVALID"
    with pytest.raises(LabError):
        ExperimentConfig("unknown-suite", 5, 1)


def test_case_id_rerun_matches_suite_row():
    cfg = ExperimentConfig("pigeonhole", 10, 42)
    rows = run_suite(cfg)
    single = run_suite(cfg, case_id=4)
    assert len(single) == 1
    a, b = rows[4], single[0]
    assert (a.case_id, a.inputs_digest, a.verdict, a.witness, a.seed) == (
        b.case_id,
        b.inputs_digest,
        b.verdict,
        b.witness,
        b.seed,
    )


def test_reports_deterministic_across_runs_and_workers(tmp_path, monkeypatch):
    cfg1 = ExperimentConfig("jblocks", 8, 5, {}, str(tmp_path / "a"))
    cfg2 = ExperimentConfig("jblocks", 8, 5, {}, str(tmp_path / "b"))
    monkeypatch.setenv("COARSE_LAB_THREADS", "1")
    run_suite(cfg1)
    monkeypatch.setenv("COARSE_LAB_THREADS", "4")
    run_suite(cfg2)
    csv_a = (tmp_path / "a" / "report-jblocks.csv").read_bytes()
    csv_b = (tmp_path / "b" / "report-jblocks.csv").read_bytes()
    assert csv_a == csv_b
    json_a = (tmp_path / "a" / "report-jblocks.json").read_bytes()
    json_b = (tmp_path / "b" / "report-jblocks.json").read_bytes()
    assert json_a == json_b


def test_all_suites_pass_briefly():
    for suite in SUITES:
        rows = run_suite(ExperimentConfig(suite, 3, 11))
        assert [r.verdict for r in rows] == ["pass"] * 3, suite


def test_load_config(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(
        """
[experiment]
suite = "pigeonhole"
trials = 7
seed = 99

[caps]
k = 3
""",
        encoding="utf-8",
    )
    cfg = load_config(str(path))
    assert cfg.suite == "pigeonhole" and cfg.trials == 7 and cfg.seed == 99
    assert cfg.caps == {"k": 3}
    bad = tmp_path / "bad.toml"
    bad.write_text("[experiment]\ntrials = 3\n", encoding="utf-8")
    with pytest.raises(LabError):
        load_config(str(bad))
