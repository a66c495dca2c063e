import json
import math

import numpy as np
import pytest

import spinpath


def test_mixture_round_trip():
    m = spinpath.Mixture.parse("2:1,4:0.25")
    assert m.degree == 4
    assert not m.is_pure
    assert spinpath.Mixture.parse(str(m)) == m
    assert m.eval(0.3, 2) == pytest.approx(2 + 0.75 * 0.09)
    with pytest.raises(ValueError, match="p must be >= 2"):
        spinpath.Mixture.parse("1:1.0")


def test_theory_values():
    m = spinpath.Mixture.parse("2:1,4:0.25")
    assert spinpath.energy_benchmark(m, 1.0) == pytest.approx(1.498195671122807, abs=1e-12)
    assert spinpath.e_infinity(3) == pytest.approx(1.6329931618554516)
    report = spinpath.theory_report(m, 2.0)
    assert report["is_full_rsb"]
    assert len(report["e_h_curve"]) == 101
    assert report["identity_gap"] < 1e-6


def test_disorder_and_derivatives():
    m = spinpath.Mixture.parse("2:1,3:0.5")
    d = spinpath.sample_disorder(m, 12, 3)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(12)
    g = d.gradient(x)
    h = 1e-6
    e = np.zeros(12)
    e[4] = h
    fd = (d.energy(x + e) - d.energy(x - e)) / (2 * h)
    assert fd == pytest.approx(g[4], rel=1e-6)
    ph = d.projected_hessian(x)
    assert np.linalg.norm(ph @ x) < 1e-10
    assert ph.shape == (12, 12)


def test_radial_path_and_verify(tmp_path):
    cfg = f"variant=radial mixture=2:1 n=40 k=8 epsilon=1.0 seeds=5 output_dir={tmp_path}"
    summary = spinpath.run_experiment(cfg)
    assert summary["exit_code"] == 0
    assert json.loads((tmp_path / "summary.json").read_text())["sup_gap"] == summary["sup_gap"]
    d = spinpath.sample_disorder(spinpath.Mixture.parse("2:1"), 40, 5)
    verdict = spinpath.verify_trace(str(tmp_path / "seed_5.trace.csv"), d)
    assert verdict["passed"]

    trace = spinpath.run_radial_path(d, k=8, epsilon=1.0, stop_on_spectral_failure=False)
    pts = np.asarray(trace["points"])
    assert pts.shape == (9, 40)
    assert np.allclose((pts**2).sum(axis=1) / 40, np.arange(9) / 8, atol=1e-12)


def test_bad_config_raises():
    with pytest.raises(spinpath.ConfigError):
        spinpath.run_experiment("variant=radial mixture=2:1")


def test_spectrum():
    d = spinpath.sample_disorder(spinpath.Mixture.parse("2:1"), 50, 1)
    r = spinpath.analyze_hessian(d, np.full(50, math.sqrt(0.5)), 0.1)
    assert len(r["eigenvalues"]) == 49
    assert r["lambda_min"] == min(r["eigenvalues"])
