"""
Tests for the HTTP surface.
"""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from scoretest.main import app


@pytest.fixture
def client():
    return TestClient(app)


class TestCheckEndpoint:
    def test_quartic(self, client):
        response = client.post("/check", json={"model": {"type": "quartic", "tau": 1.0, "d": 2}, "probes": 5})
        assert response.status_code == 200
        body = response.json()
        assert body["passed"]
        assert body["probes"] == 5

    def test_inconsistent_rbm(self, client):
        model = {"type": "rbm", "W": [[0.5, -0.3], [0.2, 0.4]], "b": [0.1], "c": [0.0, 0.0]}
        response = client.post("/check", json={"model": model})
        assert response.status_code == 400
        assert response.json()["error"] == "input"

    def test_unknown_family(self, client):
        response = client.post("/check", json={"model": {"type": "cauchy"}})
        assert response.status_code == 422


class TestGaussianEndpoint:
    def test_unit_shift(self, client):
        response = client.post("/exponent/gaussian", json={"cov": [[1, 0], [0, 1]], "mean_shift": [1, 0], "T": 0.0})
        assert response.status_code == 200
        body = response.json()
        assert body["type1_exponent"] == pytest.approx(0.125)
        assert body["type2_exponent"] == pytest.approx(0.125)
        assert body["threshold_range"] == {"lo": -0.5, "hi": 0.5, "degenerate": False}

    def test_published_convention(self, client):
        payload = {"cov": [[1, 0], [0, 1]], "mean_shift": [1, 0], "T": 1.0, "convention": "published"}
        assert client.post("/exponent/gaussian", json=payload).json()["type1_exponent"] == pytest.approx(9 / 8)

    def test_zero_shift(self, client):
        response = client.post("/exponent/gaussian", json={"cov": [[1, 0], [0, 1]], "mean_shift": [0, 0], "T": 0.0})
        assert response.status_code == 400

    def test_indefinite_covariance(self, client):
        response = client.post("/exponent/gaussian", json={"cov": [[1, 2], [2, 1]], "mean_shift": [1, 0], "T": 0.0})
        assert response.status_code == 400
        assert response.json()["error"] == "input"


class TestEmpiricalEndpoint:
    def test_normal_differences(self, client):
        rng = np.random.default_rng(0)
        null_diffs = (rng.standard_normal(5000) - 0.5).tolist()
        alt_diffs = (rng.standard_normal(5000) - 0.5).tolist()
        response = client.post("/exponent/empirical", json={"null_diffs": null_diffs, "alt_diffs": alt_diffs, "T": 0.0})
        assert response.status_code == 200
        body = response.json()
        assert body["type1"]["error_kind"] == "type1"
        assert body["type1"]["m"] == 5000
        assert body["type1"]["exponent"] == pytest.approx(0.125, abs=0.03)
        assert not body["threshold_range"]["degenerate"]

    def test_empty_differences(self, client):
        response = client.post("/exponent/empirical", json={"null_diffs": [], "alt_diffs": [1.0], "T": 0.0})
        assert response.status_code == 422
