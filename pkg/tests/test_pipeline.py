from pathlib import Path

import pytest

from secad.cad_seq import tokenize
from secad.errors import (
    BackendUnavailable,
    InconsistentMask,
    InvalidCandidate,
    InvalidInput,
    LocatingFailed,
    UnknownSession,
)
from secad.masking import make_gt_mask
from secad.pipeline import (
    Candidate,
    SamplingConfig,
    ScriptedBackend,
    SelectiveDataset,
    SequenceBackend,
    build_infilling_prompt,
    build_locating_prompt,
    edit,
    infill,
    locate,
    record_selection,
)
from secad.store import HistoryEntry, SessionStore

from conftest import CUBE, CUBE_WITH_CUT

GOLDEN = Path(__file__).parent / "golden"
INSTRUCTION = "Remove the cylinder."


def _gt_mask_text():
    return make_gt_mask(tokenize(CUBE_WITH_CUT), tokenize(CUBE)).text()


def test_sampling_defaults():
    cfg = SamplingConfig()
    assert cfg.temperature == 0.9
    assert cfg.top_p == 0.9
    assert cfg.max_tokens == 1024


def test_sampling_validation():
    with pytest.raises(InvalidInput):
        SamplingConfig(temperature=-1)
    with pytest.raises(InvalidInput):
        SamplingConfig(top_p=0.0)


def test_locating_prompt_matches_golden():
    built = build_locating_prompt(CUBE_WITH_CUT, INSTRUCTION)
    assert built == GOLDEN.joinpath("locating_prompt.txt").read_text(encoding="utf-8")
    assert "Replace the parts that need to be modified" in built


def test_infilling_prompt_matches_golden():
    built = build_infilling_prompt(CUBE_WITH_CUT, INSTRUCTION, _gt_mask_text())
    assert built == GOLDEN.joinpath("infilling_prompt.txt").read_text(encoding="utf-8")
    assert "Generate the edited CAD sequence that could replace" in built


def test_prompts_deterministic():
    assert build_locating_prompt(CUBE, "x.") == build_locating_prompt(CUBE, "x.")
    assert build_infilling_prompt(CUBE, "x.", "<mask>") == build_infilling_prompt(CUBE, "x.", "<mask>")


def test_prompt_empty_inputs():
    with pytest.raises(InvalidInput):
        build_locating_prompt(CUBE, "   ")
    with pytest.raises(InvalidInput):
        build_locating_prompt("", "do it")


def test_infilling_prompt_rejects_inconsistent_mask():
    with pytest.raises(InconsistentMask):
        build_infilling_prompt(CUBE, INSTRUCTION, "circle <mask> nonsense")


def test_locate_scripted_roundtrip():
    prompt = build_locating_prompt(CUBE_WITH_CUT, INSTRUCTION)
    backend = ScriptedBackend({prompt: _gt_mask_text()})
    masked = locate(CUBE_WITH_CUT, INSTRUCTION, backend)
    assert masked.text() == _gt_mask_text()


def test_locate_rejects_inconsistent_and_fails():
    backend = ScriptedBackend(fallback=lambda p, s: "ext one sketch <mask>")
    with pytest.raises(LocatingFailed):
        locate(CUBE_WITH_CUT, INSTRUCTION, backend, retries=2)
    assert backend.calls == 3  # initial try plus two retries


def test_locate_merges_adjacent_masks():
    masked_with_dupes = _gt_mask_text().replace("<mask>", "<mask> <mask>")
    backend = ScriptedBackend(fallback=lambda p, s: masked_with_dupes)
    masked = locate(CUBE_WITH_CUT, INSTRUCTION, backend)
    assert masked.text() == _gt_mask_text()


def test_infill_flags():
    masked = make_gt_mask(tokenize(CUBE_WITH_CUT), tokenize(CUBE))
    good = ScriptedBackend(fallback=lambda p, s: CUBE)
    out = infill(CUBE_WITH_CUT, INSTRUCTION, masked, good)
    assert out.parse_ok and out.consistency_ok and out.edit_text == CUBE

    truncated = ScriptedBackend(fallback=lambda p, s: CUBE.replace(" <eom>", ""))
    out = infill(CUBE_WITH_CUT, INSTRUCTION, masked, truncated)
    assert not out.parse_ok
    assert out.error == "TruncatedSequence"
    assert not out.consistency_ok  # the trailing <eom> span is gone too

    # garbage in the masked region only: spans preserved, parse broken
    garbage = CUBE_WITH_CUT.replace(
        "sketch face loop circle 128 128 16 extrude theta 0 phi 0 gamma 0 origin 128 128 128 "
        "scale 128 dist 224 160 op cut ext two",
        "banana 12",
    )
    sloppy = ScriptedBackend(fallback=lambda p, s: garbage)
    out = infill(CUBE_WITH_CUT, INSTRUCTION, masked, sloppy)
    assert not out.parse_ok
    assert out.consistency_ok

    tampered = ScriptedBackend(fallback=lambda p, s: CUBE.replace("line 160 96", "line 161 96"))
    out = infill(CUBE_WITH_CUT, INSTRUCTION, masked, tampered)
    assert out.parse_ok
    assert not out.consistency_ok  # an unmasked token was altered


def test_edit_mixed_candidates_in_order():
    gt_masked = _gt_mask_text()
    truncated = CUBE.replace(" <eom>", "")
    backend = SequenceBackend([gt_masked, CUBE, CUBE, truncated, CUBE, truncated])
    result = edit(CUBE_WITH_CUT, INSTRUCTION, backend, k=5)
    assert [c.parse_ok for c in result.candidates] == [True, True, False, True, False]
    assert result.k == 5 and len(result.candidates) == 5


def test_edit_k_zero_invalid():
    with pytest.raises(InvalidInput):
        edit(CUBE, INSTRUCTION, ScriptedBackend({}), k=0)


def test_edit_never_raises_on_candidate_failure():
    responses = [_gt_mask_text()]  # infill calls will find the backend exhausted
    backend = SequenceBackend(responses)
    result = edit(CUBE_WITH_CUT, INSTRUCTION, backend, k=3)
    assert all(not c.parse_ok for c in result.candidates)
    assert all(c.error == "BackendUnavailable" for c in result.candidates)


def test_scripted_backend_unavailable_when_unprogrammed():
    with pytest.raises(BackendUnavailable):
        ScriptedBackend({}).complete("nope", SamplingConfig())


def test_realize_equivalence_over_synthesized_triplets(small_dataset):
    backend = ScriptedBackend.from_triplets(small_dataset)
    for triplet in small_dataset:
        result = edit(triplet.orig_text, triplet.instruction.text, backend, k=2)
        assert result.masked.text() == triplet.gt_mask.text()
        for cand in result.candidates:
            assert cand.edit_text == triplet.edit_text
            assert cand.parse_ok and cand.consistency_ok


class _FakeResponse:
    def __init__(self, status_code, payload):
        self.status_code = status_code
        self._payload = payload

    def json(self):
        return self._payload


def test_http_backend_payload_and_retry(monkeypatch):
    import httpx

    from secad.pipeline import HttpBackend

    seen = []

    def fake_post(url, json=None, headers=None, timeout=None):
        seen.append((url, json, headers))
        if len(seen) == 1:
            raise httpx.ConnectError("refused")
        return _FakeResponse(200, {"text": "ok completion"})

    monkeypatch.setattr(httpx, "post", fake_post)
    monkeypatch.setattr("time.sleep", lambda s: None)
    backend = HttpBackend("http://model.example/v1", token="sekrit")
    out = backend.complete("a prompt", SamplingConfig(temperature=0.4, top_p=0.8, max_tokens=64))
    assert out == "ok completion"
    assert len(seen) == 2  # one failure, one success
    url, payload, headers = seen[-1]
    assert payload == {"prompt": "a prompt", "temperature": 0.4, "top_p": 0.8, "max_tokens": 64}
    assert headers["Authorization"] == "Bearer sekrit"


def test_http_backend_gives_up(monkeypatch):
    import httpx

    from secad.pipeline import HttpBackend

    monkeypatch.setattr(httpx, "post", lambda *a, **k: _FakeResponse(500, {}))
    monkeypatch.setattr("time.sleep", lambda s: None)
    with pytest.raises(BackendUnavailable):
        HttpBackend("http://down.example", max_retries=2).complete("p", SamplingConfig())


def _session_with_candidates(tmp_path):
    store = SessionStore(tmp_path)
    session = store.create(CUBE_WITH_CUT)
    entry = HistoryEntry(
        instruction=INSTRUCTION,
        orig_text=session.current_text,
        masked_text=_gt_mask_text(),
        candidates=[
            Candidate(edit_text=CUBE, parse_ok=True, consistency_ok=True).to_json(),
            Candidate(edit_text="sketch", parse_ok=False, consistency_ok=False).to_json(),
        ],
    )
    session.history.append(entry)
    store.save(session)
    return store, session


def test_record_selection_appends_and_replaces(tmp_path):
    store, session = _session_with_candidates(tmp_path)
    selective = SelectiveDataset(tmp_path / "selective.jsonl")
    record_selection(store, selective, session.id, 0, "alice")
    assert len(selective.records()) == 1
    record_selection(store, selective, session.id, 0, "alice")
    assert len(selective.records()) == 1  # idempotent per (session, annotator)
    record_selection(store, selective, session.id, 0, "bob")
    rows = selective.records()
    assert len(rows) == 2
    assert {r["annotator"] for r in rows} == {"alice", "bob"}
    assert all(r["edit"] == CUBE and "ts" in r for r in rows)


def test_record_selection_rejects_bad_candidates(tmp_path):
    store, session = _session_with_candidates(tmp_path)
    selective = SelectiveDataset(tmp_path / "selective.jsonl")
    with pytest.raises(InvalidCandidate):
        record_selection(store, selective, session.id, 1, "alice")  # parse_ok False
    with pytest.raises(InvalidCandidate):
        record_selection(store, selective, session.id, 9, "alice")
    with pytest.raises(UnknownSession):
        record_selection(store, selective, "missing", 0, "alice")
