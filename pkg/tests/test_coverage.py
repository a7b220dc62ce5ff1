"""Aerial-layer visibility lengths and connectivity probability."""
import math

import numpy as np
import pytest

from skyvis.coverage import (MEAN_LENGTH_DIVERGES, CoverageScenario,
                             DivergentMean, mean_L, mean_l, tau_conditional,
                             tau_unconditional, tau_unconditional_quadrature,
                             visible_extension, visible_length)
from skyvis.errors import DomainError, ParameterError
from skyvis.process import EnvParams

P11 = EnvParams(lam=1.0, mu=1.0)


def _scen(rho=1.0, H=1.0, nu=1.0, mu=1.0):
    return CoverageScenario(env=EnvParams(lam=rho * mu, mu=mu), H=H, nu=nu)


def test_scenario_validation():
    with pytest.raises(ParameterError):
        CoverageScenario(env=P11, H=0.0, nu=1.0)
    with pytest.raises(ParameterError):
        CoverageScenario(env=P11, H=1.0, nu=-1.0)


def test_visible_length_geometry():
    # similar triangles: the lit stretch at altitude h+H is x(1 + H/h)
    assert visible_length(P11, 2.0, 1.0, 3.0) == pytest.approx(8.0)
    with_s = visible_length(P11, 2.0, 1.0, 3.0, with_ris=True)
    assert with_s == pytest.approx(2.0 + 3.0 * (math.e / 1.0 + 2.0))
    assert with_s > 8.0
    assert visible_extension(P11, 2.0, 1.0, 3.0) == pytest.approx(
        3.0 * math.e)
    with pytest.raises(DomainError):
        visible_length(P11, -1.0, 1.0, 3.0)


def test_mean_visible_length_closed_form():
    scen = CoverageScenario(env=EnvParams(lam=0.012, mu=0.02), H=10_000.0,
                            nu=5e-5)
    assert mean_l(scen) == pytest.approx((2.0 + 10_000.0 * 0.02) / 0.012,
                                         rel=1e-12)
    # slope in H is mu/lam
    s1 = CoverageScenario(env=P11, H=1.0, nu=1.0)
    s2 = CoverageScenario(env=P11, H=2.0, nu=1.0)
    assert mean_l(s2) - mean_l(s1) == pytest.approx(1.0)


def test_mean_with_surface_diverges():
    marker = mean_L(_scen())
    assert isinstance(marker, DivergentMean)
    assert marker is MEAN_LENGTH_DIVERGES
    assert str(marker) == "inf"
    with pytest.raises(TypeError):
        float(marker)


def test_tau_conditional_bounds_and_monotonicity():
    scen = _scen(rho=1.0, H=2.0, nu=0.5)
    taus = [tau_conditional(scen, x, 1.0) for x in (0.5, 1.0, 2.0, 4.0)]
    assert all(0.0 < t < 1.0 for t in taus)
    # conditional connectivity does not depend on the blocker distance
    assert all(t == pytest.approx(taus[0], rel=1e-12) for t in taus)
    # taller blockers leave fewer beyond-roof competitors: tau grows in h
    taus_h = [tau_conditional(scen, 1.0, h) for h in (0.2, 1.0, 3.0)]
    assert taus_h[0] < taus_h[1] < taus_h[2]


def test_tau_conditional_matches_exponential_excess():
    # closed form equals 1 - a / (H nu + a) with a = rho e^{-mu h}
    scen = _scen(rho=2.0, H=3.0, nu=0.25)
    h = 1.3
    a = 2.0 * math.exp(-h)
    assert tau_conditional(scen, 0.7, h) == pytest.approx(
        1.0 - a / (3.0 * 0.25 + a), rel=1e-14)


def test_tau_unconditional_midpoint_is_pi2_over_12():
    # H nu = rho makes the ratio one and tau = pi^2/12
    scen = _scen(rho=0.7, H=2.0, nu=0.35)
    assert tau_unconditional(scen) == pytest.approx(math.pi ** 2 / 12,
                                                    rel=1e-14)


def test_tau_unconditional_scale_invariance():
    # only H*nu matters, not the split
    base = _scen(rho=0.6, H=10.0, nu=0.05)
    same = _scen(rho=0.6, H=1000.0, nu=0.0005)
    assert tau_unconditional(base) == pytest.approx(tau_unconditional(same),
                                                    rel=1e-14)


def test_tau_unconditional_increasing_in_node_density():
    scen0 = None
    last = 0.0
    for nu in np.geomspace(1e-3, 1e3, 25):
        scen0 = _scen(rho=1.0, H=1.0, nu=float(nu))
        t = tau_unconditional(scen0)
        assert 0.0 < t < 1.0
        assert t > last
        last = t
    assert last > 0.999


def test_tau_closed_form_matches_quadrature():
    rng = np.random.default_rng(7)
    for _ in range(10):
        rho = float(rng.uniform(0.05, 3.0))
        hnu = float(rng.uniform(0.05, 20.0))
        scen = _scen(rho=rho, H=1.0, nu=hnu)
        closed = tau_unconditional(scen)
        quad = tau_unconditional_quadrature(scen)
        assert closed == pytest.approx(quad, abs=1e-6)


def test_tau_published_cases():
    hap = (10_000.0, 5e-5)
    sat = (500_000.0, 2.3163e-6)
    cases = [
        (0.012, hap, 0.797838), (0.007, hap, 0.864512),
        (0.001, hap, 0.976052),
        (0.012, sat, 0.893742), (0.001, sat, 0.989409),
    ]
    for lam, (H, nu), expected in cases:
        scen = CoverageScenario(env=EnvParams(lam=lam, mu=0.02), H=H, nu=nu)
        assert tau_unconditional(scen) == pytest.approx(expected, abs=1e-5)
