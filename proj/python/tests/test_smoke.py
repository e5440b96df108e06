"""Smoke tests for the _helmgrid extension module."""

import cmath
import json
import os

import pytest

import _helmgrid as hg

FIXTURES = os.environ["HELMGRID_FIXTURE_DIR"]


def fixture(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="module")
def case14():
    return hg.load_case(fixture("case14.m"))


def test_version_string():
    assert isinstance(hg.__version__, str) and hg.__version__


def test_load_case_shape(case14):
    assert case14.n_buses == 14
    assert case14.bus_ids == list(range(1, 15))


def test_json_round_trip(case14):
    text = case14.to_json()
    again = hg.parse_case_json(text)
    assert again.n_buses == 14
    assert json.loads(text)["base_mva"] == 100.0


def test_series_matches_newton(case14):
    hem = hg.solve(case14, lambda_=1.0, n_terms=40)
    nr = hg.newton_solve(case14)
    assert nr["converged"]
    assert hem["residual"] < 1e-9
    dev = max(abs(a - b) for a, b in zip(hem["voltages"], nr["voltages"]))
    assert dev < 1e-9


def test_scaled_solve(case14):
    scaled = hg.scale_injections(case14, 1.5)
    nr = hg.newton_solve(scaled)
    hem = hg.solve(case14, lambda_=1.5, n_terms=40)
    dev = max(abs(a - b) for a, b in zip(hem["voltages"], nr["voltages"]))
    assert dev < 1e-8


def test_sigma_indices(case14):
    indices = hg.sigma_indices(case14, lambda_=1.0, n_terms=40)
    assert len(indices) == 13  # every non-slack bus
    for ix in indices:
        u = ix["u"]
        # radicand identity for a solved operating point
        assert ix["condition"] == pytest.approx((u.real - 0.5) ** 2, abs=1e-8)
        assert ix["condition"] > 0


def test_snbp_two_bus():
    tb = hg.load_case(fixture("twobus.json"))
    est = hg.estimate_snbp(tb, ceiling=5.0, n_terms=50)
    assert est["lambda_star"] == pytest.approx(2.0, abs=0.02)
    assert est["detecting_bus"] == 2
    assert len(est["scan_trace"]) > 0


def test_weak_bus_ranking(case14):
    r = hg.rank_weak_buses(case14, top_k=5)
    assert [rec["bus"] for rec in r["ranked"]][0] == 14
    assert [rec["bus"] for rec in r["excluded"]] == [4]
    sens = hg.vq_sensitivity(case14, 14, 0.01)
    assert sens == pytest.approx(r["ranked"][0]["dv_dq"], rel=1e-6)


def test_error_mapping(case14, tmp_path):
    with pytest.raises(ValueError):
        hg.load_case(str(tmp_path / "missing.m"))
    with pytest.raises(ValueError):
        hg.parse_case_json("{not json")
    with pytest.raises(ValueError):
        hg.vq_sensitivity(case14, 1, 0.01)  # slack bus
