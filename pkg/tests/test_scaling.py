"""Sweeps, envelope fits and report emission."""
import math
import re

import numpy as np
import pytest

from martenscale.relaxer import RelaxConfig
from martenscale.scaling import (
    SweepReport, SweepSpec, default_eps, emit_report, fit_arrays, fit_dichotomy, report_from_csv,
    report_to_csv, run_sweep,
)

EPS = 2.0 ** -np.arange(4, 15)


def lin_model(eps):
    return np.minimum(eps, 1.0)


def log_model(eps):
    return np.minimum(1.0, eps * (np.abs(np.log(eps)) + 1.0))


# ---------------------------------------------------------------- fitting

@pytest.mark.parametrize("c", [3.0, 0.01, 250.0])
def test_planted_linear_recovered(c):
    fit = fit_arrays(EPS, c * lin_model(EPS))
    assert fit.verdict == "linear"
    assert fit.c_lin == pytest.approx(c, rel=1e-10) and fit.rms_lin < 1e-12


@pytest.mark.parametrize("c", [0.2, 5.0])
def test_planted_log_recovered(c):
    fit = fit_arrays(EPS, c * log_model(EPS))
    assert fit.verdict == "logarithmic"
    assert fit.c_log == pytest.approx(c, rel=1e-10) and fit.rms_log < 1e-12


def test_closed_form_matches_least_squares(rng):
    E = rng.uniform(0.5, 2.0, len(EPS)) * EPS
    fit = fit_arrays(EPS, E)
    # oracle: raw least squares by a dense scan, then the relative RMS there
    f = lin_model(EPS)
    cs = np.linspace(0.1, 3.0, 290001)
    sse = ((cs[:, None] * f[None] - E[None]) ** 2).sum(axis=1)
    c = cs[int(np.argmin(sse))]
    assert abs(c - fit.c_lin) <= 1e-5
    rel = np.sqrt(np.mean(((fit.c_lin * f - E) / E) ** 2))
    assert fit.rms_lin == pytest.approx(rel, rel=1e-12)


def test_verdict_rule():
    for seed in range(20):
        r = np.random.default_rng(seed)
        E = EPS * r.uniform(0.3, 3.0, len(EPS))
        fit = fit_arrays(EPS, E)
        want = ("linear" if fit.rms_lin <= 0.5 * fit.rms_log else
                "logarithmic" if fit.rms_log <= 0.5 * fit.rms_lin else "inconclusive")
        assert fit.verdict == want


@pytest.mark.parametrize("model,name", [(lin_model, "linear"), (log_model, "logarithmic")])
def test_noisy_trials(model, name):
    good = 0
    for seed in range(100):
        r = np.random.default_rng(seed)
        E = 1.7 * model(EPS) * (1.0 + 0.05 * r.standard_normal(len(EPS)))
        good += fit_arrays(EPS, E).verdict == name
    assert good >= 95


def test_fit_needs_five_rows():
    with pytest.raises(ValueError, match="at least 5"):
        fit_arrays(EPS[:4], EPS[:4])
    # rows with eps > 2^-4 do not count
    with pytest.raises(ValueError):
        fit_arrays([0.5, 0.25, 0.125, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6], np.ones(6))


# ---------------------------------------------------------------- sweeps

def test_default_eps_grid():
    e = default_eps()
    assert len(e) == 11 and e[0] == 2.0 ** -4 and e[-1] == 2.0 ** -14
    assert all(math.log2(x) == int(math.log2(x)) for x in e)


def test_sweep_spec_validation():
    with pytest.raises(ValueError, match="empty eps"):
        SweepSpec("compatible_triangle", [])
    with pytest.raises(ValueError, match="strictly decreasing"):
        SweepSpec("compatible_triangle", [0.1, 0.2])
    with pytest.raises(ValueError):
        SweepSpec("compatible_triangle", [0.1], sources=("other",))
    with pytest.raises(ValueError):
        SweepSpec("nowhere", [0.1])


@pytest.fixture(scope="module")
def triangle_report():
    return run_sweep(SweepSpec("compatible_triangle", default_eps()))


def test_triangle_sweep_rows(triangle_report):
    rows = triangle_report.rows
    assert len(rows) == 11
    assert all(r["elastic_construction"] <= r["eps"] for r in rows)
    fit = fit_dichotomy(triangle_report)
    assert fit.verdict == "linear" and fit.rms_lin <= 0.1


def test_triangle_depth_rule(triangle_report):
    # depth N is the smallest with 2 rho^(2N) area <= eps
    rho = 7 - 4 * math.sqrt(3)
    area = math.sqrt(3) / 4
    for r in triangle_report.rows:
        N = next(k for k in range(1, 20) if 2 * rho ** (2 * k) * area <= r["eps"])
        assert r["depth"] == N


def test_square_sweep_bracketed():
    rep = run_sweep(SweepSpec("unit_square", default_eps(count=6, eps_min=2.0 ** -9)))
    e = rep.column("eps")
    ratio = rep.column("total_construction") / (e * (np.abs(np.log2(e)) + 1))
    assert np.all(np.isfinite(ratio)) and 0 < ratio.min() <= ratio.max()


def test_csv_round_trip(triangle_report):
    back = report_from_csv(report_to_csv(triangle_report), triangle_report.scenario)
    for a, b in zip(triangle_report.rows, back.rows):
        for k in ("eps", "elastic_construction", "surface_construction", "total_construction"):
            assert a[k] == b[k]
        assert math.isnan(b["total_relaxed"]) and a["verdict_running"] == b["verdict_running"]


def test_svg_structure(triangle_report):
    svg = emit_report(triangle_report, fit_dichotomy(triangle_report), "svg")
    assert 'viewBox="0 0 800 600"' in svg
    assert len(re.findall(r'class="envelope"', svg)) == 2
    assert len(re.findall(r'class="data"', svg)) == 1
    assert "log2 eps" in svg and "log2 energy" in svg


def test_json_has_verdict(triangle_report):
    import json
    doc = json.loads(emit_report(triangle_report, fit_dichotomy(triangle_report), "json"))
    assert doc["verdict"] == "linear"
    assert doc["meta"]["seed"] == 0 and len(doc["rows"]) == 11


def test_emit_errors(triangle_report, tmp_path):
    with pytest.raises(ValueError, match="empty report"):
        emit_report(SweepReport("x", []), None, "csv")
    with pytest.raises(OSError, match="unwritable"):
        emit_report(triangle_report, None, "csv", str(tmp_path / "missing" / "r.csv"))
    p = tmp_path / "r.csv"
    emit_report(triangle_report, None, "csv", str(p))
    assert p.read_text() == report_to_csv(triangle_report)


def test_relaxed_sweep_dominance_and_worker_independence():
    spec = dict(scenario="compatible_triangle", eps=[2.0 ** -4, 2.0 ** -6, 2.0 ** -8],
                sources=("construction", "relaxed"), grid_n=24,
                relax=RelaxConfig(restarts=2, max_iters=5))
    a = run_sweep(SweepSpec(**spec, threads=1))
    b = run_sweep(SweepSpec(**spec, threads=2))
    for ra, rb in zip(a.rows, b.rows):
        assert ra["total_relaxed"] <= ra["total_warm_discrete"] + 1e-9
        assert ra["total_relaxed"] == rb["total_relaxed"]
    svg = emit_report(a, None, "svg")
    assert len(re.findall(r'class="data"', svg)) == 2
