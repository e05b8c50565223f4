import base64
import io
import warnings

import pytest

from phasegen import __version__, read_batch
from phasegen.service import create_app

with warnings.catch_warnings():
    warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")
    from starlette.testclient import TestClient


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


SMALL = {"seed": 3, "batch_size": 4, "geometry": {"dft_len": 64}}


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": __version__}


def test_generate_returns_parsable_container(client):
    resp = client.post("/batches", json={**SMALL, "batch_index": 2})
    assert resp.status_code == 200
    assert resp.headers["content-type"] == "application/octet-stream"
    assert resp.headers["x-phasegen-batch-index"] == "2"
    batch = read_batch(io.BytesIO(resp.content))
    assert batch.phases.shape == (4, 32, 4)
    assert batch.batch_index == 2
    assert batch.master_seed == 3


def test_generate_deterministic(client):
    a = client.post("/batches", json={**SMALL, "batch_index": 0})
    b = client.post("/batches", json={**SMALL, "batch_index": 0})
    assert a.content == b.content


def test_generate_rejects_bad_config(client):
    assert client.post("/batches", json={"batch_size": 0}).status_code == 422
    assert client.post("/batches", json={"batch_index": -1}).status_code == 422
    resp = client.post(
        "/batches", json={"distributions": {"classes": [0.0, 5.0, 200.0]}, "batch_size": 1}
    )
    assert resp.status_code == 422
    resp = client.post("/batches", json={"geometry": {"mics": [[0, 0, 0]]}, "batch_size": 1})
    assert resp.status_code == 422


def test_generate_custom_geometry(client):
    geometry = {"c": 340.0, "fs": 8000, "dft_len": 32, "mics": [[0, 0, 0], [0.1, 0, 0]]}
    resp = client.post("/batches", json={"batch_size": 2, "geometry": geometry})
    batch = read_batch(io.BytesIO(resp.content))
    assert batch.phases.shape == (2, 16, 2)


def test_validate_report_schema(client):
    resp = client.post("/validate", json={"seed": 0, "n_draws": 2000})
    assert resp.status_code == 200
    report = resp.json()
    assert set(report) == {"passed", "n_draws", "seed", "checks"}
    assert report["n_draws"] == 2000
    assert report["passed"] is True
    for check in report["checks"]:
        assert set(check) == {"check", "target", "estimate", "tolerance", "pass"}


def test_validate_rejects_tiny_draw_count(client):
    assert client.post("/validate", json={"n_draws": 10}).status_code == 422


def make_dataset(client, batches=2):
    blobs = [
        client.post("/batches", json={**SMALL, "batch_index": i}).content for i in range(batches)
    ]
    return base64.b64encode(b"".join(blobs)).decode("ascii")


def test_estimate_metrics(client):
    resp = client.post(
        "/estimate",
        json={"dataset_b64": make_dataset(client), "geometry": SMALL["geometry"]},
    )
    assert resp.status_code == 200
    report = resp.json()
    assert set(report) == {"mae", "pacc", "mae50", "pacc50", "n_frames", "n_blocks"}
    assert report["n_frames"] == 8
    assert 0.0 <= report["pacc"] <= 1.0


def test_estimate_with_records(client):
    resp = client.post(
        "/estimate",
        json={
            "dataset_b64": make_dataset(client, 1),
            "geometry": SMALL["geometry"],
            "include_records": True,
        },
    )
    report = resp.json()
    assert len(report["records"]) == report["n_frames"]
    first = report["records"][0]
    assert set(first) == {"class_true", "class_est", "scores"}
    assert len(first["scores"]) == 37


def test_estimate_geometry_mismatch_rejected(client):
    # dataset generated at dft_len 64 but evaluated with the default table
    resp = client.post("/estimate", json={"dataset_b64": make_dataset(client, 1)})
    assert resp.status_code == 422
    assert "does not match" in resp.json()["detail"]


def test_estimate_empty_dataset_rejected(client):
    assert client.post("/estimate", json={"dataset_b64": ""}).status_code == 422
    bad = base64.b64encode(b"garbage").decode("ascii")
    assert client.post("/estimate", json={"dataset_b64": bad}).status_code == 422
    assert client.post("/estimate", json={"dataset_b64": "!!!not-base64"}).status_code == 422


def test_bench_report(client):
    resp = client.post(
        "/bench",
        json={"batches": 2, "batch_size": 8, "workers": 1, "geometry": {"dft_len": 64}},
    )
    assert resp.status_code == 200
    report = resp.json()
    assert set(report) == {
        "batches",
        "batch_size",
        "workers",
        "factorize_ms",
        "total_s",
        "samples_per_sec",
        "per_sample_us",
        "per_batch_ms",
    }
    assert report["factorize_ms"] > 0.0
    assert report["samples_per_sec"] > 0.0
    assert report["workers"] == 1
