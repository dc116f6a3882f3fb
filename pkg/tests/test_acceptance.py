"""Acceptance suite: each test enforces one criterion at its stated
tolerance and prints a PASS/FAIL line (run with ``pytest -s`` to see them).
"""

import json
import random
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from secad.cad_seq import parse, serialize, tokenize
from secad.captioning import filter_triplet, load_dataset, template_sentence
from secad.cli import main as cli_main
from secad.geometry import assemble, sample_point_cloud
from secad.masking import lcs, make_gt_mask_with_fills, realize, verify_consistency
from secad.metrics import DClipInputs, chamfer, dclip, jsd_from_probs
from secad.pipeline import build_infilling_prompt, build_locating_prompt
from secad.variation import CompositeRecord, VariationConfig, perturb, random_model

from conftest import CUBE, CUBE_WITH_CUT
from test_masking import lcs_len_bruteforce
from test_metrics import chamfer_bruteforce, jsd_direct

GOLDEN = Path(__file__).parent / "golden"


def _report(name, ok, detail=""):
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())


@contextmanager
def criterion(name, detail=""):
    try:
        yield
    except BaseException:
        _report(name, False)
        raise
    _report(name, True, detail)


def test_grammar_round_trip():
    rng = random.Random(1)
    config = VariationConfig(check_geometry=False)
    started = time.perf_counter()
    with criterion("grammar round-trip (1000 models, <5s)"):
        for _ in range(1000):
            model = random_model(rng, config)
            text = serialize(model)
            again = parse(text)
            assert again == model
            assert serialize(again) == text
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_lcs_oracle():
    rng = random.Random(2)
    started = time.perf_counter()
    with criterion("LCS vs exhaustive enumeration (1000 pairs, <10s)"):
        for _ in range(1000):
            a = [rng.choice("abcd") for _ in range(rng.randint(0, 12))]
            b = [rng.choice("abcd") for _ in range(rng.randint(0, 12))]
            assert len(lcs(a, b)) == lcs_len_bruteforce(a, b)
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_mask_realizability(synth_500):
    rng = random.Random(3)
    config = VariationConfig(check_geometry=False)
    with criterion("mask realizability (1000 random pairs + all synthesized triplets)"):
        for _ in range(1000):
            model = random_model(rng, config)
            edited, _ = perturb(model, seed=rng.randrange(1 << 30), config=config)
            orig = tokenize(serialize(model))
            edit = tokenize(serialize(edited))
            masked, fills = make_gt_mask_with_fills(orig, edit)
            assert realize(masked, fills) == edit
            assert verify_consistency(orig, masked)
        for triplet in synth_500:
            orig = tokenize(triplet.orig_text)
            edit = tokenize(triplet.edit_text)
            masked, fills = make_gt_mask_with_fills(orig, edit)
            assert masked.tokens == triplet.gt_mask.tokens
            assert realize(masked, fills) == edit


@pytest.fixture(scope="module")
def synth_500(tmp_path_factory):
    """`synth --count 500 --seed 1` through the CLI, twice, for criterion 4."""
    tmp = tmp_path_factory.mktemp("synth")
    runner = CliRunner()
    paths = []
    for name in ("a.jsonl", "b.jsonl"):
        out = tmp / name
        result = runner.invoke(cli_main, ["synth", "--count", "500", "--seed", "1", "--out", str(out)])
        assert result.exit_code == 0, result.output
        paths.append(out)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    return load_dataset(paths[0])


def test_synthesis_soundness(synth_500):
    from secad.metrics import valid_ratio

    with criterion("synthesis soundness (500 triplets: filters, VR=1.0, shapes, determinism)"):
        assert len(synth_500) == 500
        for t in synth_500:
            ok, reason = filter_triplet(t)
            assert ok, reason
        vr = valid_ratio([t.edit_text for t in synth_500])
        assert vr == 1.0
        for t in synth_500:
            record = t.record
            assert record is not None
            steps = record.steps if isinstance(record, CompositeRecord) else (record,)
            for step in steps:
                assert step.shape in t.instruction.text


def test_metric_oracles():
    rng = np.random.default_rng(4)
    with criterion("metric oracles (chamfer exact, jsd 1e-9, dclip signs)"):
        for _ in range(100):
            a = rng.uniform(-1, 1, size=(int(rng.integers(1, 21)), 3))
            b = rng.uniform(-1, 1, size=(int(rng.integers(1, 21)), 3))
            assert chamfer(a, b) == chamfer_bruteforce(a, b)

        checked = 0
        while checked < 50:
            n = int(rng.integers(2, 30))
            p = rng.random(n) * (rng.random(n) < 0.7)
            q = rng.random(n) * (rng.random(n) < 0.7)
            if p.sum() == 0 or q.sum() == 0:
                continue
            assert jsd_from_probs(p, q) == pytest.approx(jsd_direct(p, q), abs=1e-9)
            checked += 1
        assert jsd_from_probs([0.5, 0.5], [1.0, 0.0]) == pytest.approx(0.31128, abs=1e-5)

        e = lambda *v: np.array(v, dtype=float)
        assert dclip(DClipInputs(e(0, 0), e(1, 0), e(0, 0), e(3, 0))) == 1.0
        assert dclip(DClipInputs(e(0, 0), e(1, 0), e(3, 0), e(0, 0))) == -1.0
        assert dclip(DClipInputs(e(0, 0), e(1, 0), e(0, 0), e(0, 2))) == 0.0


def test_end_to_end_scripted_pipeline(tmp_path):
    runner = CliRunner()
    testset = tmp_path / "testset.jsonl"
    result = runner.invoke(cli_main, ["synth", "--count", "100", "--seed", "17", "--out", str(testset)])
    assert result.exit_code == 0, result.output

    started = time.perf_counter()
    result = runner.invoke(
        cli_main,
        ["eval", "--testset", str(testset), "--backend", "scripted", "-k", "5",
         "--out-dir", str(tmp_path / "report"), "--no-figures"],
    )
    elapsed = time.perf_counter() - started
    with criterion("end-to-end scripted eval (100 triplets, k=5, <120s)", f"({elapsed:.1f}s)"):
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert lines[0].split() == ["Method", "VR", "JSD", "CD", "D-CLIP"]
        row = lines[1].split()
        assert row[1] == "100.0"  # VR
        assert float(row[2]) <= 1e-4  # JSD, x100 presentation
        assert row[3] == "0.00"  # CD
        report = json.loads((tmp_path / "report" / "report.json").read_text())
        assert report["vr"] == 1.0
        assert report["cd"] == 0.0
        assert report["jsd"] * 100 <= 1e-4
        assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_prompt_golden_files():
    with criterion("prompt golden files byte-match"):
        instruction = "Remove the cylinder."
        from secad.masking import make_gt_mask

        masked = make_gt_mask(tokenize(CUBE_WITH_CUT), tokenize(CUBE)).text()
        locating = build_locating_prompt(CUBE_WITH_CUT, instruction)
        infilling = build_infilling_prompt(CUBE_WITH_CUT, instruction, masked)
        assert locating == (GOLDEN / "locating_prompt.txt").read_text(encoding="utf-8")
        assert infilling == (GOLDEN / "infilling_prompt.txt").read_text(encoding="utf-8")
        assert "Replace the parts that need to be modified" in locating
        assert "Generate the edited CAD sequence that could replace" in infilling


def test_geometry_sanity():
    with criterion("geometry sanity (normalization exact, no points inside the cut)"):
        cloud = sample_point_cloud(assemble(parse(CUBE)), n=2000, seed=5)
        lo = cloud.points.min(axis=0)
        hi = cloud.points.max(axis=0)
        longest = int(np.argmax(hi - lo))
        assert lo[longest] == -0.5
        assert hi[longest] == 0.5
        assert np.all(cloud.points >= -0.5) and np.all(cloud.points <= 0.5)

        cut_cloud = sample_point_cloud(assemble(parse(CUBE_WITH_CUT)), n=2000, seed=6)
        assert len(cut_cloud) == 2000
        world = cut_cloud.to_world()
        tau = 2 * 0.01 * cut_cloud.extent
        radial = np.hypot(world[:, 0], world[:, 1])
        inside_hole = (radial < 0.125 - tau) & (world[:, 2] > tau) & (world[:, 2] < 0.5 - tau)
        assert not inside_hole.any()
