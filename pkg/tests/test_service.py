import io
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from junctiongen.colors import PALETTE, PALETTE_NAMES
from junctiongen.pipeline import GeneratorBundle
from junctiongen.service import SceneRequest, create_app


@pytest.fixture(scope="module")
def client(toy_cfg):
    app = create_app(GeneratorBundle.fresh(toy_cfg, seed=0))
    with TestClient(app) as c:
        yield c


def scene(**over):
    body = {
        "version": 1,
        "entities": [
            {"class": "car", "bbox": [0.5, 0.5, 0.2, 0.2], "color": "red"},
        ],
        "time_of_day": "12:00",
        "seed": 0,
    }
    body.update(over)
    return body


class TestMetadataEndpoints:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json() == {"status": "ok", "model_loaded": True}

    def test_palette(self, client):
        r = client.get("/palette")
        assert r.status_code == 200
        data = r.json()
        assert data["names"] == list(PALETTE_NAMES)
        assert data["rgb"] == (PALETTE * 255).round().astype(int).tolist()

    def test_model_info(self, client):
        r = client.get("/model-info")
        assert r.status_code == 200
        data = r.json()
        assert data["total_parameters"] > 0
        assert "overhead_over_baseline" in data

    def test_no_model_loaded(self, toy_cfg):
        with TestClient(create_app(None)) as c:
            assert c.get("/health").json()["model_loaded"] is False
            assert c.get("/model-info").status_code == 503
            assert c.post("/generate", json=scene()).status_code == 503


class TestGenerate:
    def test_returns_png_with_headers(self, client):
        r = client.post("/generate", json=scene(seed=7))
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        assert r.headers["x-generation-seed"] == "7"
        assert float(r.headers["x-generation-latency-ms"]) > 0
        img = Image.open(io.BytesIO(r.content))
        assert img.size == (64, 64)
        assert img.mode == "RGB"

    def test_identical_request_identical_bytes(self, client):
        a = client.post("/generate", json=scene(seed=3))
        b = client.post("/generate", json=scene(seed=3))
        assert a.content == b.content

    def test_seed_changes_bytes(self, client):
        a = client.post("/generate", json=scene(seed=0))
        b = client.post("/generate", json=scene(seed=1))
        assert a.content != b.content

    def test_empty_scene_ok(self, client):
        r = client.post("/generate", json=scene(entities=[]))
        assert r.status_code == 200
        img = np.asarray(Image.open(io.BytesIO(r.content)))
        assert img.shape == (64, 64, 3)

    def test_time_seconds_accepted(self, client):
        r = client.post("/generate", json=scene(time_of_day=None, time_seconds=43200))
        assert r.status_code == 200

    def test_concurrent_requests_serialized(self, client):
        results = []

        def fire(seed):
            results.append(client.post("/generate", json=scene(seed=seed)).status_code)

        threads = [threading.Thread(target=fire, args=(i,)) for i in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == [200, 200, 200, 200]


class TestValidation:
    def test_malformed_json_is_400(self, client):
        r = client.post(
            "/generate", content=b"{not json", headers={"content-type": "application/json"}
        )
        assert r.status_code == 400
        assert "malformed" in r.json()["detail"]

    def test_unknown_palette_color_422(self, client):
        bad = scene()
        bad["entities"][0]["color"] = "chartreuse"
        r = client.post("/generate", json=bad)
        assert r.status_code == 422
        detail = r.json()["detail"]
        assert any("palette" in e["msg"] for e in detail)
        assert all("input" not in e and "url" not in e for e in detail)

    def test_unknown_class_422(self, client):
        bad = scene()
        bad["entities"][0]["class"] = "bicycle"
        assert client.post("/generate", json=bad).status_code == 422

    def test_bbox_out_of_range_422(self, client):
        bad = scene()
        bad["entities"][0]["bbox"] = [1.5, 0.5, 0.1, 0.1]
        assert client.post("/generate", json=bad).status_code == 422

    def test_zero_size_bbox_422(self, client):
        bad = scene()
        bad["entities"][0]["bbox"] = [0.5, 0.5, 0.0, 0.1]
        assert client.post("/generate", json=bad).status_code == 422

    def test_bad_time_format_422(self, client):
        assert client.post("/generate", json=scene(time_of_day="25:00")).status_code == 422
        assert client.post("/generate", json=scene(time_of_day="noon")).status_code == 422

    def test_missing_time_422(self, client):
        assert client.post("/generate", json=scene(time_of_day=None)).status_code == 422

    def test_both_times_422(self, client):
        r = client.post("/generate", json=scene(time_seconds=100))
        assert r.status_code == 422

    def test_wrong_version_422(self, client):
        assert client.post("/generate", json=scene(version=2)).status_code == 422

    def test_variant_mismatch_422(self, client, toy_cfg):
        other = "cluster" if toy_cfg.model.variant.value == "discrete" else "discrete"
        r = client.post("/generate", json=scene(variant=other))
        assert r.status_code == 422

    def test_matching_variant_accepted(self, client, toy_cfg):
        r = client.post("/generate", json=scene(variant=toy_cfg.model.variant.value))
        assert r.status_code == 200

    def test_rgb_triple_color_accepted(self, client):
        body = scene()
        body["entities"][0]["color"] = [255, 0, 0]
        assert client.post("/generate", json=body).status_code == 200


class TestSceneRequestModel:
    def test_seconds_from_hhmm(self):
        req = SceneRequest(version=1, time_of_day="06:30")
        assert req.seconds() == 6 * 3600 + 30 * 60

    def test_seconds_passthrough(self):
        req = SceneRequest(version=1, time_seconds=12.5)
        assert req.seconds() == 12.5
