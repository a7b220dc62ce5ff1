"""Surface-enhanced visibility laws: conditional, deconditioned, gains."""
import math

import numpy as np
import pytest

from skyvis.analytic import cdf_tan_theta, cdf_tan_theta_elevated
from skyvis.errors import DomainError, ParameterError
from skyvis.numerics import DEFAULT_QUADRATURE, integrate
from skyvis.process import EnvParams, ModelKind
from skyvis.ris import (RisMode, angular_gains, deconditioned_mean_angle,
                        refl_angle_distribution, refl_cdf_tan, refl_pdf_tan,
                        trans_angle_distribution, trans_cdf_tan, trans_moment,
                        trans_pdf_tan)

P11 = EnvParams(lam=1.0, mu=1.0)


def test_mode_parse():
    assert RisMode.parse("trans") is RisMode.TRANSMISSIVE
    assert RisMode.parse(RisMode.REFLECTIVE) is RisMode.REFLECTIVE
    with pytest.raises(ParameterError):
        RisMode.parse("mirror")


# ---------------------------------------------------------------------------
# transmissive conditional law


def test_trans_cdf_saturates_at_blocker_ray():
    x, h = 1.0, 2.0
    cap = h / x
    assert trans_cdf_tan(P11, x, h, cap) == 1.0
    assert trans_cdf_tan(P11, x, h, cap + 5.0) == 1.0
    assert trans_cdf_tan(P11, x, h, cap - 1e-9) < 1.0
    assert trans_cdf_tan(P11, x, h, 0.0) == 0.0


def test_trans_cdf_monotone():
    ts = np.linspace(1e-4, 2.0, 300)
    vals = [trans_cdf_tan(P11, 1.0, 2.0, float(t)) for t in ts]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_trans_x_zero_reduces_to_elevated():
    """Surface at the observer's wall: the view is the elevated law."""
    for t in np.geomspace(1e-3, 30.0, 50):
        a = trans_cdf_tan(P11, 0.0, 1.5, float(t))
        b = cdf_tan_theta_elevated(P11, 1.5, float(t))
        assert abs(a - b) < 1e-10


def test_trans_pdf_integrates_to_one_with_no_atom():
    """The conditional tangent density fills the whole unit mass below
    the blocker-ray cap: saturation at the cap carries no atom."""
    for x, h in ((1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (0.5, 3.0)):
        cap = h / x
        v, _ = integrate(lambda t: trans_pdf_tan(P11, x, h, t), 0.0, cap,
                         DEFAULT_QUADRATURE)
        assert v == pytest.approx(1.0, abs=1e-6)


def test_trans_pdf_matches_cdf_derivative():
    x, h = 1.0, 2.0
    step = 1e-7
    for t in (0.1, 0.5, 1.2, 1.9):
        num = (trans_cdf_tan(P11, x, h, t + step)
               - trans_cdf_tan(P11, x, h, t - step)) / (2 * step)
        assert trans_pdf_tan(P11, x, h, t) == pytest.approx(num, rel=1e-5)


def test_trans_moments():
    x, h = 1.0, 2.0
    assert trans_moment(P11, x, h, 0.0) == 1.0
    m1, _ = integrate(lambda t: t * trans_pdf_tan(P11, x, h, t), 0.0, h / x,
                      DEFAULT_QUADRATURE)
    assert trans_moment(P11, x, h, 1.0) == pytest.approx(m1, rel=1e-7)
    m2, _ = integrate(lambda t: t * t * trans_pdf_tan(P11, x, h, t), 0.0,
                      h / x, DEFAULT_QUADRATURE)
    assert trans_moment(P11, x, h, 2.0) == pytest.approx(m2, rel=1e-7)


def test_trans_moment_x_zero_divergence():
    # at x = 0 the law is heavy-tailed: moments of order >= 1 diverge
    assert math.isinf(trans_moment(P11, 0.0, 2.0, 1.0))
    assert trans_moment(P11, 0.0, 2.0, 0.5) > 0.0


def test_trans_domain_errors():
    with pytest.raises(DomainError):
        trans_cdf_tan(P11, -1.0, 2.0, 0.5)
    with pytest.raises(DomainError):
        trans_cdf_tan(P11, 1.0, 0.0, 0.5)
    with pytest.raises(DomainError):
        trans_cdf_tan(P11, 1.0, 2.0, -0.5)


# ---------------------------------------------------------------------------
# reflective conditional law


def test_refl_cdf_monotone_and_bounded():
    ts = np.geomspace(1e-3, 100.0, 300)
    vals = [refl_cdf_tan(P11, -1.0, 1.0, float(t)) for t in ts]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[0] >= 0.0 and vals[-1] <= 1.0
    assert vals[-1] > 0.99


def test_refl_x_zero_reduces_to_elevated():
    for t in np.geomspace(1e-3, 30.0, 50):
        a = refl_cdf_tan(P11, 0.0, 1.5, float(t))
        b = cdf_tan_theta_elevated(P11, 1.5, float(t))
        assert abs(a - b) < 1e-10


def test_refl_pdf_normalizes_and_matches_derivative():
    x, h = -1.0, 1.0
    v, _ = integrate(lambda t: refl_pdf_tan(P11, x, h, t), 0.0, math.inf,
                     DEFAULT_QUADRATURE)
    assert v == pytest.approx(1.0, abs=1e-6)
    step = 1e-7
    for t in (0.2, 1.0, 3.0):
        num = (refl_cdf_tan(P11, x, h, t + step)
               - refl_cdf_tan(P11, x, h, t - step)) / (2 * step)
        assert refl_pdf_tan(P11, x, h, t) == pytest.approx(num, rel=1e-5)


def test_refl_domain_errors():
    with pytest.raises(DomainError):
        refl_cdf_tan(P11, 1.0, 1.0, 0.5)  # reflector must sit at x <= 0
    with pytest.raises(DomainError):
        refl_cdf_tan(P11, -1.0, -1.0, 0.5)


# ---------------------------------------------------------------------------
# conditional means: six published operating points


TRANS_MEANS = [((1.0, 1.0), 0.3669), ((1.0, 2.0), 0.2714),
               ((2.0, 2.0), 0.2249)]
REFL_MEANS = [((-1.0, 1.0), 0.4272), ((-1.0, 2.0), 0.2505),
              ((-2.0, 2.0), 0.2068)]


@pytest.mark.parametrize("point,expected", TRANS_MEANS)
def test_trans_conditional_mean_values(point, expected):
    x, h = point
    assert trans_angle_distribution(P11, x, h).mean() == pytest.approx(
        expected, abs=1e-3)


@pytest.mark.parametrize("point,expected", REFL_MEANS)
def test_refl_conditional_mean_values(point, expected):
    x, h = point
    assert refl_angle_distribution(P11, x, h).mean() == pytest.approx(
        expected, abs=1e-3)


# ---------------------------------------------------------------------------
# stochastic dominance: any surface can only open the sky


def test_enhanced_cdfs_dominate_blockage_cdf():
    rng = np.random.default_rng(0)
    ts = np.geomspace(1e-3, 50.0, 60)
    for _ in range(20):
        lam = float(rng.uniform(0.05, 3.0))
        mu = float(rng.uniform(0.05, 3.0))
        x = float(rng.uniform(0.05, 5.0))
        h = float(rng.uniform(0.05, 5.0))
        params = EnvParams(lam=lam, mu=mu)
        for t in ts:
            base = cdf_tan_theta(params, ModelKind.MM, float(t))
            assert trans_cdf_tan(params, x, h, float(t)) >= base - 1e-12
            assert refl_cdf_tan(params, -x, h, float(t)) >= base - 1e-12


# ---------------------------------------------------------------------------
# deconditioned means and gains


def test_deconditioned_mean_depends_only_on_rho():
    a = deconditioned_mean_angle(EnvParams(lam=0.6, mu=1.0), "trans")
    b = deconditioned_mean_angle(EnvParams(lam=0.012, mu=0.02), "trans")
    assert a == pytest.approx(b, rel=1e-6)


def test_deconditioned_mean_below_plain_mean():
    from skyvis.analytic import mean_theta
    for rho in (0.35, 1.0):
        params = EnvParams(lam=rho, mu=1.0)
        for mode in ("trans", "refl"):
            assert deconditioned_mean_angle(params, mode) < mean_theta(params)


def test_gains_quadrature_exceed_one_and_refl_above_trans():
    params = EnvParams(lam=0.6, mu=1.0)
    gt = angular_gains(params, "trans")
    gr = angular_gains(params, "refl")
    assert gt.gamma_mean > 1.0
    assert gr.gamma_mean > 1.0
    assert gt.method == "quadrature" and gt.gamma_ratio is None
    # transmissive opens more sky than reflective (its mean enhanced
    # blockage angle is smaller), so its gain is the larger one
    assert gt.gamma_mean > gr.gamma_mean


def test_gains_mc_close_to_quadrature():
    params = EnvParams(lam=1.0, mu=1.0)
    quad = angular_gains(params, "trans")
    mc = angular_gains(params, "trans", method="mc", n=40_000, seed=3)
    assert mc.gamma_ratio is not None and mc.gamma_ratio >= 1.0
    assert abs(mc.gamma_mean - quad.gamma_mean) < 5.0 * mc.gamma_mean_stderr
    assert not mc.small_sample_warning
    tiny = angular_gains(params, "refl", method="mc", n=500, seed=3)
    assert tiny.small_sample_warning


def test_gains_bad_method():
    with pytest.raises(ParameterError):
        angular_gains(P11, "trans", method="exact")
