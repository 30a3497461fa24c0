import pytest
from fastapi.testclient import TestClient

from officeagents.config import Config, ConfigError, load_config, validate_config
from officeagents.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app(Config()))


def test_create_session_201(client):
    response = client.post("/sessions")
    assert response.status_code == 201
    assert response.json()["session_id"].startswith("s-")


def test_post_message_returns_trace(client):
    sid = client.post("/sessions").json()["session_id"]
    response = client.post(
        f"/sessions/{sid}/messages",
        json={"text": "Search for the emails I received today"},
    )
    assert response.status_code == 200
    trace = response.json()
    assert trace["turn"]["calls"][0][0]["api_name"] == "search_email"
    assert trace["worker"] == "wps365"


def test_unknown_session_404(client):
    assert client.get("/sessions/ghost/trace").status_code == 404
    assert (
        client.post("/sessions/ghost/messages", json={"text": "hi"}).status_code == 404
    )


def test_catalog_endpoint(client):
    tools = client.get("/catalog").json()["tools"]
    assert len(tools) == 21


def test_transitions_endpoint(client):
    rules = client.get("/transitions").json()["rules"]
    assert len(rules) == 16


def test_memory_endpoint(client):
    sid = client.post("/sessions").json()["session_id"]
    client.post(
        f"/sessions/{sid}/messages",
        json={"text": "Search for the emails I received today"},
    )
    memory = client.get(f"/sessions/{sid}/memory").json()
    assert sorted(memory["entity_slots"]["email_ids"]) == [
        "em-0001",
        "em-0002",
        "em-0003",
    ]


def test_admin_fault_roundtrip(client):
    sid = client.post("/sessions").json()["session_id"]
    assert (
        client.post(
            "/admin/fault", json={"api_name": "search_email", "mode": "fail_once"}
        ).status_code
        == 200
    )
    trace = client.post(
        f"/sessions/{sid}/messages",
        json={"text": "Search for the emails I received today"},
    ).json()
    assert [r["action"] for r in trace["repairs"]] == ["retried"]
    assert client.delete("/admin/fault").status_code == 200


def test_admin_fault_validation(client):
    assert (
        client.post("/admin/fault", json={"api_name": "nope", "mode": "fail_once"}).status_code
        == 404
    )
    assert (
        client.post(
            "/admin/fault", json={"api_name": "search_email", "mode": "explode"}
        ).status_code
        == 422
    )


def test_admin_seed(client):
    assert client.post("/admin/seed", json={"fixture": "f1", "seed": 9}).status_code == 200
    assert client.post("/admin/seed", json={"fixture": "zzz", "seed": 9}).status_code == 404


def test_snapshot_endpoint(client):
    snap = client.get("/admin/snapshot").json()
    assert snap["fixture"] == "f1"
    assert len(snap["stores"]["emails"]) == 12


def test_state_persistence_round_trip(client):
    sid = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{sid}/messages", json={"text": "hello there"})
    client.post(
        f"/sessions/{sid}/messages",
        json={"text": "Search for the emails I received today"},
    )
    state = client.get("/state").json()
    traces_before = client.get(f"/sessions/{sid}/trace").json()

    fresh = TestClient(create_app(Config()))
    assert fresh.post("/state", json=state).json()["restored"] == 1
    traces_after = fresh.get(f"/sessions/{sid}/trace").json()
    assert traces_after == traces_before


def test_healthz(client):
    body = client.get("/healthz").json()
    assert body["status"] == "ok"


def test_config_env_overrides(monkeypatch):
    cfg = load_config(env={"OFFICEAGENTS_PORT": "9000", "OFFICEAGENTS_FIXTURE": "f1"})
    assert cfg.port == 9000
    assert cfg.fixture == "f1"


def test_config_endpoint_env(monkeypatch):
    cfg = load_config(env={"OFFICEAGENTS_ENDPOINT_REWRITE": "http://example.test/rw"})
    assert cfg.backends["rewrite"] == "endpoint"
    assert cfg.endpoints["rewrite"] == "http://example.test/rw"


def test_config_validation_errors():
    bad = Config(retrieval_k=99)
    with pytest.raises(ConfigError):
        validate_config(bad)
    bad2 = Config()
    bad2.backends["plan"] = "endpoint"  # no URL configured
    with pytest.raises(ConfigError):
        validate_config(bad2)


def test_config_file_loading(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text('{"retrieval_k": 7, "noise": 0.1}')
    cfg = load_config(str(p), env={})
    assert cfg.retrieval_k == 7 and cfg.noise == 0.1
    bad = tmp_path / "bad.json"
    bad.write_text('{"not_a_key": 1}')
    with pytest.raises(ConfigError):
        load_config(str(bad), env={})


def test_reference_backend_noted_in_trace(client):
    sid = client.post("/sessions").json()["session_id"]
    trace = client.post(f"/sessions/{sid}/messages", json={"text": "hello there"}).json()
    assert any("rewrite backend: reference" in n for n in trace["notes"])
