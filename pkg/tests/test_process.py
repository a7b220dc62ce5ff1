"""Realization sampling, blockage reduction and serialization."""
import io
import math

import numpy as np
import pytest
from scipy import special

from skyvis.errors import DomainError, EmptyRealizationError, ParameterError
from skyvis.process import (EnvParams, ModelKind, Realization, blockage_angle,
                            mirror_realization, realization_from_csv,
                            realization_to_csv, sample_realization,
                            truncation_distance)

P11 = EnvParams(lam=1.0, mu=1.0)


def test_env_params_validation():
    with pytest.raises(ParameterError):
        EnvParams(lam=0.0, mu=1.0)
    with pytest.raises(ParameterError):
        EnvParams(lam=1.0, mu=-2.0)
    with pytest.raises(ParameterError):
        EnvParams(lam=1.0, mu=1.0, weibull_shape=0.0)
    assert EnvParams(lam=3.0, mu=2.0).rho == pytest.approx(1.5)


def test_model_kind_parse():
    assert ModelKind.parse("mm") is ModelKind.MM
    assert ModelKind.parse(ModelKind.DM) is ModelKind.DM
    with pytest.raises(ParameterError):
        ModelKind.parse("nope")


def test_sampling_deterministic_bit_identical():
    a = sample_realization(P11, ModelKind.MM, seed=42)
    b = sample_realization(P11, ModelKind.MM, seed=42)
    assert np.array_equal(a.xs, b.xs)
    assert np.array_equal(a.hs, b.hs)
    c = sample_realization(P11, ModelKind.MM, seed=43)
    assert not np.array_equal(a.xs, c.xs)


def test_realization_arrays_readonly_and_sorted():
    r = sample_realization(P11, ModelKind.MM, seed=5)
    assert not r.xs.flags.writeable
    assert np.all(np.diff(r.xs) >= 0)
    assert np.all(r.hs > 0)
    with pytest.raises(ValueError):
        r.xs[0] = 1.0


def test_poisson_count_distribution():
    """Counts over many seeds follow Poisson(lam * x_max)."""
    n_rep = 3000
    counts = np.array([sample_realization(
        EnvParams(lam=0.8, mu=1.0), ModelKind.MM, t_min=0.5,
        seed=s).n for s in range(n_rep)])
    x_max = sample_realization(EnvParams(lam=0.8, mu=1.0), ModelKind.MM,
                               t_min=0.5, seed=0).x_max
    m = 0.8 * x_max
    z = (counts.mean() - m) / math.sqrt(m / n_rep)
    assert abs(z) < 4.0
    z_var = (counts.var(ddof=1) - m) / (m * math.sqrt(2.0 / n_rep))
    assert abs(z_var) < 5.0


def test_dm_grid_spacing_exact():
    params = EnvParams(lam=0.25, mu=1.0)  # spacing 4 is a power of two
    r = sample_realization(params, ModelKind.DM, seed=9)
    gaps = np.diff(r.xs)
    assert np.all(gaps == 4.0)
    assert 0.0 <= r.xs[0] < 4.0


def test_weibull_shape_one_matches_exponential_heights():
    """k = 1 Weibull heights and exponential heights agree in law."""
    wei = EnvParams(lam=1.0, mu=0.7, weibull_shape=1.0)
    hs_w = np.concatenate([sample_realization(wei, ModelKind.WEIBULL,
                                              seed=s).hs
                           for s in range(4)])
    hs_m = np.concatenate([sample_realization(wei, ModelKind.MM,
                                              seed=s + 100).hs
                           for s in range(4)])
    n1, n2 = len(hs_w), len(hs_m)
    a, b = np.sort(hs_w), np.sort(hs_m)
    grid = np.concatenate([a, b])
    d = np.abs(np.searchsorted(a, grid, side="right") / n1
               - np.searchsorted(b, grid, side="right") / n2).max()
    en = math.sqrt(n1 * n2 / (n1 + n2))
    p = float(special.kolmogorov(en * d))
    assert p > 1e-4


def test_md_heights_constant():
    r = sample_realization(EnvParams(lam=1.0, mu=2.0), ModelKind.MD, seed=3)
    assert np.all(r.hs == 0.5)


def test_blockage_angle_basic():
    xs = np.array([1.0, 2.0, 3.0])
    hs = np.array([0.5, 4.0, 1.0])
    r = Realization(xs=xs, hs=hs, x_max=10.0, seed=0, model=ModelKind.MM,
                    params=P11, observer_height=0.0, t_min=1e-6,
                    epsilon=1e-8)
    res = blockage_angle(r)
    assert res.tan_theta == pytest.approx(2.0)
    assert res.x_plus == 2.0 and res.h_plus == 4.0
    assert res.index_k == 2
    assert res.theta == pytest.approx(math.atan(2.0))


def test_blockage_angle_tie_prefers_nearest():
    xs = np.array([1.0, 2.0])
    hs = np.array([2.0, 4.0])  # both rays have tangent exactly 2
    r = Realization(xs=xs, hs=hs, x_max=10.0, seed=0, model=ModelKind.MM,
                    params=P11, observer_height=0.0, t_min=1e-6,
                    epsilon=1e-8)
    res = blockage_angle(r)
    assert res.x_plus == 1.0
    assert res.index_k == 1


def test_blockage_angle_observer_above_all():
    xs = np.array([1.0, 2.0])
    hs = np.array([0.5, 0.9])
    r = Realization(xs=xs, hs=hs, x_max=10.0, seed=0, model=ModelKind.MM,
                    params=P11, observer_height=2.0, t_min=1e-6,
                    epsilon=1e-8)
    res = blockage_angle(r, observer=(0.0, 2.0))
    assert res.tan_theta == 0.0
    assert res.index_k == 0
    assert math.isnan(res.x_plus) and math.isnan(res.h_plus)


def test_blockage_angle_empty_raises():
    r = Realization(xs=np.empty(0), hs=np.empty(0), x_max=10.0, seed=0,
                    model=ModelKind.MM, params=P11, observer_height=0.0,
                    t_min=1e-6, epsilon=1e-8)
    with pytest.raises(EmptyRealizationError):
        blockage_angle(r)


def test_blockage_angle_bad_observer():
    r = sample_realization(P11, ModelKind.MM, seed=1)
    with pytest.raises(DomainError):
        blockage_angle(r, observer=(1.0, 0.0))  # observer inside the city


def test_append_below_max_invariance():
    """Adding buildings that stay under the winning ray can't change it."""
    r = sample_realization(P11, ModelKind.MM, seed=11)
    res = blockage_angle(r)
    extra_x = np.array([r.x_max * 0.5, r.x_max * 0.9])
    extra_h = extra_x * res.tan_theta * 0.5
    xs = np.sort(np.concatenate([r.xs, extra_x]))
    order = np.argsort(np.concatenate([r.xs, extra_x]), kind="stable")
    hs = np.concatenate([r.hs, extra_h])[order]
    r2 = Realization(xs=xs, hs=hs, x_max=r.x_max, seed=0, model=r.model,
                     params=r.params, observer_height=0.0, t_min=r.t_min,
                     epsilon=r.epsilon)
    res2 = blockage_angle(r2)
    assert res2.tan_theta == res.tan_theta
    assert res2.x_plus == res.x_plus


def test_truncation_distance_certifies_tail():
    """Window long enough that beaters past it have mass < epsilon."""
    x_max = truncation_distance(P11, ModelKind.MM, t_min=0.1, epsilon=1e-8)
    # expected exceedances past L for the exponential-height city:
    # (rho/t) e^{-t L} style bound; check the direct integral numerically
    lam = mu = 1.0
    t = 0.1
    xs = np.linspace(x_max, x_max + 2000.0, 400_000)
    rate = lam * np.exp(-mu * t * xs)
    mass = np.trapezoid(rate, xs)
    assert mass < 1e-8 * 1.05


def test_mirror_is_involution_and_flips_sign():
    r = sample_realization(P11, ModelKind.MM, seed=21)
    m = mirror_realization(r)
    assert np.all(m.xs <= 0)
    assert np.all(np.diff(m.xs) >= 0)
    back = mirror_realization(m)
    assert np.array_equal(back.xs, r.xs)
    assert np.array_equal(back.hs, r.hs)


def test_csv_round_trip_lossless():
    r = sample_realization(EnvParams(lam=0.3, mu=2.5), ModelKind.WEIBULL,
                           seed=77)
    buf = io.StringIO()
    realization_to_csv(r, buf)
    buf.seek(0)
    r2 = realization_from_csv(buf)
    assert np.array_equal(r.xs, r2.xs)
    assert np.array_equal(r.hs, r2.hs)
    assert r2.params == r.params
    assert r2.model is r.model
    assert r2.x_max == r.x_max and r2.seed == r.seed


def test_csv_rejects_garbage():
    with pytest.raises(ParameterError):
        realization_from_csv(io.StringIO("index,x,h\n0,1.0,2.0\n"))


def test_seed_validation():
    with pytest.raises(ParameterError):
        sample_realization(P11, ModelKind.MM, seed=-1)
    with pytest.raises(ParameterError):
        sample_realization(P11, ModelKind.MM, seed=2 ** 64)
