"""HTTP service: endpoint contracts, parity with the library, errors."""
from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

import cedesim
from cedesim.bench import RunConfig, run_benchmark
from cedesim.core.audit import AuditChain
from cedesim.genesis import GeneratorConfig, Portfolio, generate_portfolio
from cedesim.service import create_app

SMALL = {"n_treaties": 6, "generator_seed": 5, "seeds": [1, 2],
         "n_years": 300}


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def test_health(client):
    res = client.get("/health")
    assert res.status_code == 200
    body = res.json()
    assert body["status"] == "ok"
    assert body["version"] == cedesim.__version__


def test_generate_matches_library(client):
    res = client.post("/generate", json={"config": {}, "seed": 3,
                                         "n_treaties": 5})
    assert res.status_code == 200
    body = res.json()
    assert body["n_treaties"] == 5
    expected = generate_portfolio(GeneratorConfig(n_treaties=5, seed=3))
    assert body["portfolio"] == expected.to_dict()
    # The payload round-trips through the structured type.
    rebuilt = Portfolio.from_dict(body["portfolio"])
    assert rebuilt.to_dict() == body["portfolio"]


def test_generate_accepts_run_config_layout(client):
    res = client.post("/generate",
                      json={"config": {"n_treaties": 4, "generator_seed": 2,
                                       "seeds": [1]}})
    assert res.status_code == 200
    expected = generate_portfolio(GeneratorConfig(n_treaties=4, seed=2))
    assert res.json()["portfolio"] == expected.to_dict()


def test_generate_rejects_unknown_keys(client):
    res = client.post("/generate", json={"config": {"bogus": 1}})
    assert res.status_code == 400
    assert "bogus" in res.json()["detail"]


def test_validate_reports_per_seed(client):
    res = client.post("/validate", json={"config": SMALL})
    assert res.status_code == 200
    body = res.json()
    assert [r["seed"] for r in body["reports"]] == [1, 2]
    for rep in body["reports"]:
        assert len(rep["statistics"]) == 4
        for stat in rep["statistics"]:
            assert set(stat) == {"name", "value", "sd", "band", "ok"}
    assert isinstance(body["all_ok"], bool)


def test_validate_single_seed_override(client):
    res = client.post("/validate", json={"config": SMALL, "seed": 2})
    assert res.status_code == 200
    assert [r["seed"] for r in res.json()["reports"]] == [2]


def test_validate_rejects_bad_config(client):
    res = client.post("/validate",
                      json={"config": {**SMALL, "solvency_threshold": 0}})
    assert res.status_code == 400


def test_episode_contract_and_determinism(client):
    payload = {"config": SMALL, "profile": "multi", "seed": 4,
               "include_trace": True}
    res = client.post("/episode", json=payload)
    assert res.status_code == 200
    body = res.json()
    assert body["treaty_id"] == "T0001"
    assert body["profile"] == "MultiAgent"
    assert body["seed"] == 4
    assert len(body["audit_head"]) == 64
    chain = AuditChain.from_lines(body["trace"])
    chain.verify()
    assert chain.head == body["audit_head"]

    again = client.post("/episode", json=payload)
    assert again.json()["audit_head"] == body["audit_head"]

    other_seed = client.post("/episode", json={**payload, "seed": 5})
    assert other_seed.json()["audit_head"] != body["audit_head"]


def test_episode_profile_aliases_and_treaty_selection(client):
    res = client.post("/episode", json={"config": SMALL, "profile": "rule",
                                        "treaty_id": "T0003"})
    assert res.status_code == 200
    body = res.json()
    assert body["profile"] == "RuleBased"
    assert body["treaty_id"] == "T0003"
    assert body["rounds"] is None
    assert body["message_count"] == 0
    assert body["trace"] is None


def test_episode_unknown_treaty_404(client):
    res = client.post("/episode", json={"config": SMALL,
                                        "treaty_id": "T9999"})
    assert res.status_code == 404


def test_episode_unknown_profile_400(client):
    res = client.post("/episode", json={"config": SMALL,
                                        "profile": "oracle"})
    assert res.status_code == 400


def test_bench_parity_with_library(client):
    config = {"n_treaties": 4, "generator_seed": 5, "seeds": [1, 2],
              "n_years": 200}
    res = client.post("/bench", json={"config": config,
                                      "validate_generator": False})
    assert res.status_code == 200
    report = res.json()["report"]
    expected = run_benchmark(RunConfig.from_dict(config),
                             validate=False).to_dict()
    assert report == json.loads(json.dumps(expected))


def test_bench_rejects_bad_config(client):
    res = client.post("/bench", json={"config": {"seeds": []}})
    assert res.status_code == 400


def test_request_schema_rejects_unknown_fields(client):
    res = client.post("/generate", json={"config": {}, "unexpected": 1})
    assert res.status_code == 422
