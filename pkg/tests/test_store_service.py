import json
import os

import pytest
from fastapi.testclient import TestClient

from secad.captioning import assemble_dataset
from secad.cad_seq import parse, serialize
from secad.errors import InvalidModel, UnknownSession
from secad.pipeline import ScriptedBackend
from secad.service import create_app
from secad.store import SessionStore, StoreConfig, dump_config, load_config, replay

from conftest import CUBE, CUBE_WITH_CUT


def test_session_store_create_get(tmp_path):
    store = SessionStore(tmp_path)
    session = store.create(CUBE)
    assert session.current_text == CUBE
    loaded = store.get(session.id)
    assert loaded.orig_text == CUBE
    assert loaded.history == []
    other = store.create(CUBE)
    assert other.id != session.id


def test_session_store_rejects_bad_models(tmp_path):
    store = SessionStore(tmp_path)
    with pytest.raises(InvalidModel) as exc:
        store.create("sketch face loop extrude nope")
    payload = exc.value.to_json()
    assert payload["cause"]["error"] == "EmptyLoop"
    with pytest.raises(UnknownSession):
        store.get("zzz")


def test_session_store_atomic_writes(tmp_path):
    store = SessionStore(tmp_path)
    session = store.create(CUBE)
    path = store._path(session.id)
    for _ in range(5):
        store.save(session)
    assert not list(path.parent.glob("*.tmp"))
    json.loads(path.read_text())


def test_config_roundtrip(tmp_path):
    cfg = StoreConfig(data_dir=str(tmp_path), backend="http", backend_url="http://x", k=7, temperature=0.5)
    path = tmp_path / "service.cfg"
    dump_config(cfg, path)
    loaded = load_config(path)
    assert loaded == cfg


def test_config_env_override(tmp_path, monkeypatch):
    path = tmp_path / "c.cfg"
    dump_config(StoreConfig(), path)
    monkeypatch.setenv("SECAD_BACKEND_URL", "http://override:9")
    loaded = load_config(path)
    assert loaded.backend == "http"
    assert loaded.backend_url == "http://override:9"


@pytest.fixture()
def scripted_app(tmp_path, small_dataset):
    dataset = tmp_path / "train.jsonl"
    assemble_dataset(small_dataset, dataset)
    cfg = StoreConfig(data_dir=str(tmp_path / "data"), dataset_path=str(dataset), k=5)
    app = create_app(cfg)
    client = TestClient(app)
    return client, small_dataset, tmp_path


def test_service_full_flow(scripted_app):
    client, dataset, tmp_path = scripted_app
    t = dataset[0]

    r = client.post("/sessions", json={"orig_text": t.orig_text})
    assert r.status_code == 201
    sid = r.json()["id"]

    r = client.post(f"/sessions/{sid}/instructions", json={"instruction": t.instruction.text})
    assert r.status_code == 200
    body = r.json()
    assert body["k"] == 5
    assert len(body["candidates"]) == 5
    assert all(c["parse_ok"] for c in body["candidates"])

    r = client.get(f"/sessions/{sid}/candidates/2/mesh")
    assert r.status_code == 200
    assert r.text.startswith("v ")

    r = client.get(f"/sessions/{sid}/candidates/2/preview")
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    assert r.content[:4] == b"\x89PNG"

    r = client.post(f"/sessions/{sid}/selection", json={"index": 2, "annotator": "ann"})
    assert r.status_code == 200
    assert r.json()["current_text"] == t.edit_text
    assert r.json()["history"][0]["selection"]["index"] == 2

    selective = tmp_path / "data" / "selective.jsonl"
    rows = [json.loads(l) for l in selective.read_text().strip().splitlines()]
    assert len(rows) == 1
    assert rows[0]["edit"] == t.edit_text
    assert rows[0]["annotator"] == "ann"


def test_service_error_paths(scripted_app):
    client, dataset, _ = scripted_app
    r = client.get("/sessions/missing")
    assert r.status_code == 404
    assert r.json()["error"] == "UnknownSession"

    r = client.post("/sessions", json={"orig_text": "not a model"})
    assert r.status_code == 400
    assert r.json()["error"] == "InvalidModel"

    t = dataset[0]
    r = client.post("/sessions", json={"orig_text": t.orig_text})
    sid = r.json()["id"]
    r = client.post(f"/sessions/{sid}/instructions", json={"instruction": "an unseen instruction"})
    assert r.status_code == 502
    assert r.json()["error"] in ("LocatingFailed", "BackendUnavailable")

    r = client.post(f"/sessions/{sid}/selection", json={"index": 0, "annotator": "x"})
    assert r.status_code == 400
    assert r.json()["error"] == "InvalidCandidate"


def test_service_iterative_editing_and_replay(tmp_path, small_dataset):
    # chain two instructions: find a triplet whose edit is another triplet's orig
    by_orig = {}
    for t in small_dataset:
        by_orig.setdefault(t.orig_text, []).append(t)
    chain = None
    for t in small_dataset:
        if t.edit_text in by_orig:
            chain = (t, by_orig[t.edit_text][0])
            break
    if chain is None:
        pytest.skip("no chainable pair in this dataset")

    dataset = tmp_path / "train.jsonl"
    assemble_dataset(small_dataset, dataset)
    cfg = StoreConfig(data_dir=str(tmp_path / "data"), dataset_path=str(dataset))
    client = TestClient(create_app(cfg))

    first, second = chain
    sid = client.post("/sessions", json={"orig_text": first.orig_text}).json()["id"]
    client.post(f"/sessions/{sid}/instructions", json={"instruction": first.instruction.text})
    client.post(f"/sessions/{sid}/selection", json={"index": 0, "annotator": "a"})
    client.post(f"/sessions/{sid}/instructions", json={"instruction": second.instruction.text})
    r = client.post(f"/sessions/{sid}/selection", json={"index": 1, "annotator": "a"})
    state = r.json()
    assert len(state["history"]) == 2
    assert state["current_text"] == second.edit_text

    store = SessionStore(tmp_path / "data")
    session = store.get(sid)
    assert replay(session) == state["current_text"]


def test_service_eval_endpoint(tmp_path, small_dataset):
    dataset = tmp_path / "test.jsonl"
    assemble_dataset(small_dataset[:4], dataset)
    cfg = StoreConfig(data_dir=str(tmp_path / "data"), dataset_path=str(dataset), points=300)
    client = TestClient(create_app(cfg))
    r = client.post("/eval", json={"testset": str(dataset), "k": 2})
    assert r.status_code == 200
    body = r.json()
    assert body["vr"] == 1.0
    assert body["cd"] == 0.0
