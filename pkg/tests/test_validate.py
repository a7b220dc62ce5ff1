"""The validation harness itself: calibration, reports, serialization."""
import io
import json
import math

import numpy as np
import pytest

from skyvis.coverage import CoverageScenario
from skyvis.errors import ParameterError, SampleSizeError
from skyvis.process import EnvParams, ModelKind
from skyvis.validate import (ValidationReport, empirical_cdf, ks_test,
                             majority_pass, render_reports, validate_angle,
                             validate_blocking_index, validate_joint,
                             validate_ris, validate_tau, write_jsonl)

P11 = EnvParams(lam=1.0, mu=1.0)


def test_empirical_cdf_basic():
    cdf = empirical_cdf([3.0, 1.0, 2.0, 5.0, 4.0, 6.0, 7.0, 8.0, 9.0, 10.0])
    assert cdf(0.5) == 0.0
    assert cdf(1.0) == pytest.approx(0.1)
    assert cdf(10.0) == 1.0
    assert np.array_equal(cdf(np.array([2.5, 5.0])), np.array([0.2, 0.5]))
    with pytest.raises(SampleSizeError):
        empirical_cdf([1.0, 2.0])


def test_ks_test_calibrated_under_null():
    """p-values under the null are roughly uniform: the asymptotic KS
    p-value should reject ~alpha of exact-law samples."""
    rng = np.random.default_rng(12)
    pvals = []
    for _ in range(200):
        u = rng.uniform(0.0, 1.0, 400)
        _, p = ks_test(u, lambda x: np.clip(x, 0.0, 1.0))
        pvals.append(p)
    pvals = np.asarray(pvals)
    assert (pvals < 0.01).mean() < 0.06
    assert (pvals < 0.5).mean() == pytest.approx(0.5, abs=0.12)


def test_ks_test_rejects_wrong_law():
    rng = np.random.default_rng(5)
    u = rng.uniform(0.0, 1.0, 2000) ** 1.25
    _, p = ks_test(u, lambda x: np.clip(x, 0.0, 1.0))
    assert p < 1e-4


def test_ks_test_sample_size_guard():
    with pytest.raises(SampleSizeError):
        ks_test([0.1, 0.2], lambda x: x)


def test_report_json_round_trip():
    rep = ValidationReport(target="angle:mm", kind="ks", n=100, seed=7,
                           alpha=0.01, statistic=0.01, p_value=0.5,
                           passed=True, mc_estimate=0.95, mc_stderr=0.001,
                           expected=0.9493, details={"x_max": 12.5})
    blob = json.loads(rep.to_json())
    assert blob["target"] == "angle:mm"
    assert blob["details"]["x_max"] == 12.5
    assert blob["passed"] is True
    # keys are sorted for byte-stable reruns
    assert list(blob) == sorted(blob)


def test_write_jsonl_and_render():
    rep = ValidationReport(target="t", kind="ks", n=10, seed=0, alpha=0.01,
                           statistic=0.1, p_value=0.9, passed=True)
    buf = io.StringIO()
    write_jsonl([rep, rep], buf)
    lines = buf.getvalue().strip().split("\n")
    assert len(lines) == 2 and lines[0] == lines[1]
    text = render_reports([rep])
    assert "PASS" in text and "t" in text


def test_majority_pass():
    mk = lambda ok: ValidationReport(target="t", kind="ks", n=10, seed=0,
                                     alpha=0.01, statistic=0.0, p_value=1.0,
                                     passed=ok)
    assert majority_pass([mk(True), mk(True), mk(False)])
    assert not majority_pass([mk(True), mk(False), mk(False)])


def test_validate_angle_passes_all_variants():
    for variant in (ModelKind.MM, ModelKind.MD, ModelKind.DM):
        rep = validate_angle(P11, variant, n=8_000, seed=1)
        assert rep.passed, rep.to_json()
    wei = EnvParams(lam=1.0, mu=1.0, weibull_shape=2.0)
    assert validate_angle(wei, ModelKind.WEIBULL, n=8_000, seed=1).passed
    assert validate_angle(P11, ModelKind.MM, n=8_000, seed=1,
                          observer_height=1.0).passed


def test_validate_angle_elevated_needs_mm():
    with pytest.raises(ParameterError):
        validate_angle(P11, ModelKind.DM, n=1000, seed=0,
                       observer_height=1.0)


def test_validate_angle_detects_wrong_density():
    """Samples from rho=1 against the rho=1.3 law must fail loudly."""
    batch_params = EnvParams(lam=1.3, mu=1.0)
    rep_ok = validate_angle(P11, ModelKind.MM, n=20_000, seed=2)
    rep_bad = validate_angle(batch_params, ModelKind.MM, n=20_000, seed=2)
    # same seed, same machinery: only the analytic law changed
    assert rep_ok.passed
    assert rep_bad.passed  # sanity: correctly matched law still passes
    # now cross the two on purpose via the raw pieces
    from skyvis.montecarlo import sample_blockage
    from skyvis.validate import ks_test as kst
    samples = sample_blockage(P11, ModelKind.MM, n=20_000,
                              seed=2).tan_theta
    _, p = kst(samples, lambda ts: np.exp(-1.3 / np.maximum(ts, 1e-12)))
    assert p < 1e-6


def test_validate_joint_and_index():
    rep = validate_joint(P11, n=30_000, seed=3)
    assert rep.passed, rep.to_json()
    assert abs(rep.details["z_mean_x"]) < 4.0
    rep = validate_blocking_index(P11, 2.0, 2.0, n=300_000, seed=3)
    assert rep.passed, rep.to_json()
    assert rep.expected == pytest.approx(1.1353, abs=1e-3)


def test_validate_ris_both_modes():
    rep = validate_ris(P11, "trans", 2.0, 2.0, n=200_000, seed=4)
    assert rep.passed, rep.to_json()
    rep = validate_ris(P11, "refl", -2.0, 2.0, n=20_000, seed=4)
    assert rep.passed, rep.to_json()
    with pytest.raises(SampleSizeError):
        validate_ris(P11, "trans", 30.0, 0.01, n=1_000, seed=0)


def test_validate_tau_unconditional_and_conditional():
    scen = CoverageScenario(env=P11, H=10.0, nu=0.1)
    rep = validate_tau(scen, n=20_000, seed=5)
    assert rep.passed, rep.to_json()
    assert rep.expected == pytest.approx(math.pi ** 2 / 12, rel=1e-12)
    rep = validate_tau(scen, n=150_000, seed=5, conditional=True,
                       x=2.0, h=2.0)
    assert rep.passed, rep.to_json()
    with pytest.raises(ParameterError):
        validate_tau(scen, n=1000, seed=0, conditional=True)
