import math

import pytest
from fastapi.testclient import TestClient

from sideband_mixer import __version__
from sideband_mixer.core import mhz
from sideband_mixer.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


DRIVE = {"omega_minus_mhz": 1.1, "omega_plus_mhz": 1.1, "detuning_mhz": 0.0,
         "dsplit_khz": 5.0}


class TestHealth:
    def test_health(self, client):
        reply = client.get("/v1/health")
        assert reply.status_code == 200
        assert reply.json() == {"status": "ok", "version": __version__}


class TestSpectrumEndpoint:
    def test_known_point(self, client):
        reply = client.post("/v1/spectrum", json={"drive": DRIVE, "pmax": 4})
        assert reply.status_code == 200
        doc = reply.json()
        assert doc["units"] == "rad/s"
        by_n = {e["n"]: e for e in doc["entries"]}
        assert set(by_n) == {n for p in range(5) for n in (2 * p + 1, -2 * p - 1)}
        for n in (3, -3):
            assert by_n[n]["magnitude"] / mhz(1.1) == pytest.approx(0.1132, abs=2e-4)
        assert doc["tail_bound"] < 0.002

    def test_validation_rejects_negative_amplitude(self, client):
        bad = dict(DRIVE, omega_minus_mhz=-1.0)
        assert client.post("/v1/spectrum", json={"drive": bad}).status_code == 422

    def test_rejects_contradictory_rates(self, client):
        body = {
            "atom": {"gamma1_mhz": 2.2, "gamma2_mhz": 1.1, "gamma_phi_mhz": 0.3},
            "drive": DRIVE,
        }
        assert client.post("/v1/spectrum", json=body).status_code == 422

    def test_rejects_unphysical_gamma2(self, client):
        body = {"atom": {"gamma1_mhz": 2.2, "gamma2_mhz": 0.4}, "drive": DRIVE}
        assert client.post("/v1/spectrum", json=body).status_code == 422

    def test_both_tones_zero_rejected(self, client):
        bad = dict(DRIVE, omega_minus_mhz=0.0, omega_plus_mhz=0.0)
        assert client.post("/v1/spectrum", json={"drive": bad}).status_code == 422


class TestReflectionEndpoint:
    def test_curve_consistency(self, client):
        reply = client.post(
            "/v1/reflection", json={"rabi_mhz": 0.0, "span_mhz": 8.0, "points": 41}
        )
        assert reply.status_code == 200
        pts = reply.json()["points"]
        assert len(pts) == 41
        for p in pts:
            assert p["re_r"] + p["re_t"] == pytest.approx(1.0, abs=1e-12)
            assert p["im_r"] + p["im_t"] == pytest.approx(0.0, abs=1e-12)
        center = pts[20]
        assert center["detuning_hz"] == pytest.approx(0.0, abs=1e-9)
        assert center["re_r"] == pytest.approx(1.0, rel=1e-9)


class TestSweepEndpoints:
    def test_amplitude_sweep(self, client):
        body = {
            "grid": {"start_mhz": 0.2, "stop_mhz": 4.0, "points": 6},
            "orders": [1, 2],
        }
        reply = client.post("/v1/sweep/amplitude", json=body)
        assert reply.status_code == 200
        doc = reply.json()
        assert len(doc["rows"]) == 6 * 2 * 2
        assert doc["spec"]["engine"] == "analytic"
        assert doc["meta"]["version"] == "1"

    def test_asymmetric_sweep_meta(self, client):
        body = {
            "grid": {"start_mhz": 0.2, "stop_mhz": 4.0, "points": 5},
            "orders": [1],
            "offset_db": 1.0,
        }
        doc = client.post("/v1/sweep/asymmetric", json=body).json()
        ratios = doc["meta"]["asymmetry_ratios"][0]["ratio"]
        assert all(r > 1.0 for r in ratios)
        assert doc["meta"]["offset_db"] == 1.0

    def test_detuning_sweep_two_axes(self, client):
        body = {
            "grid": {"start_mhz": -6.0, "stop_mhz": 6.0, "points": 7,
                     "spacing": "linear"},
            "amplitude_grid": {"start_mhz": 0.5, "stop_mhz": 2.0, "points": 2},
            "orders": [1],
        }
        doc = client.post("/v1/sweep/detuning", json=body).json()
        assert len(doc["rows"]) == 7 * 2 * 2
        assert all("grid_value2" in r for r in doc["rows"])

    def test_bad_engine_rejected(self, client):
        body = {
            "grid": {"start_mhz": 0.2, "stop_mhz": 4.0, "points": 3},
            "engine": "warp",
        }
        assert client.post("/v1/sweep/amplitude", json=body).status_code == 422

    def test_log_grid_through_zero_rejected(self, client):
        body = {"grid": {"start_mhz": -1.0, "stop_mhz": 1.0, "points": 5}}
        assert client.post("/v1/sweep/amplitude", json=body).status_code == 422


class TestOracleCheckEndpoint:
    def test_tiny_grid(self, client):
        body = {
            "grid": {"start_mhz": 1.0, "stop_mhz": 3.0, "points": 2},
            "orders": [0, 1],
            "rtol": 1e-10,
        }
        reply = client.post("/v1/oracle-check", json=body)
        assert reply.status_code == 200
        doc = reply.json()
        assert doc["max_rel_dev"] < 1e-2
        assert len(doc["rows"]) == 2 * 2 * 2


class TestFitAndSynthEndpoints:
    def test_synth_then_fit_round_trip(self, client):
        synth = client.post(
            "/v1/synth",
            json={"rabi_mhz": 1.0, "noise": 0.01, "seed": 12, "points": 151},
        ).json()
        fit = client.post("/v1/fit", json={"curves": [synth["points"]]})
        assert fit.status_code == 200
        res = fit.json()["results"][0]
        assert res["converged"]
        assert res["gamma1_mhz"] == pytest.approx(2.2, rel=0.02)
        assert res["gamma2_mhz"] == pytest.approx(1.1, rel=0.02)
        assert res["rabi_mhz"] == pytest.approx(1.0, rel=0.02)

    def test_synth_deterministic(self, client):
        body = {"rabi_mhz": 0.4, "noise": 0.02, "seed": 3, "points": 21}
        a = client.post("/v1/synth", json=body).json()
        b = client.post("/v1/synth", json=body).json()
        assert a == b

    def test_fit_needs_enough_points(self, client):
        pts = [{"detuning_hz": float(i), "re_t": 1.0, "im_t": 0.0} for i in range(3)]
        assert client.post("/v1/fit", json={"curves": [pts]}).status_code == 422

    def test_shared_fit_two_curves(self, client):
        curves = []
        for seed, om in ((1, 0.4), (2, 1.2)):
            synth = client.post(
                "/v1/synth",
                json={"rabi_mhz": om, "noise": 0.01, "seed": seed, "points": 101},
            ).json()
            curves.append(synth["points"])
        doc = client.post(
            "/v1/fit", json={"curves": curves, "shared_rates": True}
        ).json()
        a, b = doc["results"]
        assert a["gamma1_mhz"] == b["gamma1_mhz"]
        assert a["rabi_mhz"] == pytest.approx(0.4, rel=0.05)
        assert b["rabi_mhz"] == pytest.approx(1.2, rel=0.05)


class TestCalibrateEndpoint:
    def test_ladder(self, client):
        samples = [
            {"power_db": p, "omega_mhz": 0.9 * 10 ** (p / 20.0)}
            for p in (-2.0, -1.0, 0.0)
        ]
        doc = client.post("/v1/calibrate", json={"samples": samples}).json()
        assert doc["slope_mhz"] == pytest.approx(0.9, rel=1e-9)
        assert doc["offset_mhz"] == pytest.approx(0.0, abs=1e-9)

    def test_degenerate_rejected(self, client):
        samples = [
            {"power_db": 0.0, "omega_mhz": 1.0},
            {"power_db": 0.0, "omega_mhz": 1.1},
        ]
        assert client.post("/v1/calibrate", json={"samples": samples}).status_code == 422
