"""Closed-form blockage and visibility-angle laws of the city variants.

Angle conventions: ``theta`` is the elevation of the dominant blocker
measured from the horizon at the observer, ``psi = pi/2 - theta`` is the
visible cone half-angle from the zenith.  Everything is driven by the
density ratio rho = lam/mu and, for elevated observers, the thinning
factor exp(-mu*h).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special as _special

from .errors import DomainError, ParameterError, TruncationError
from .numerics import (DEFAULT_QUADRATURE, QuadratureSpec, bessel_k1,
                       gamma_fn, integrate)
from .process import EnvParams, ModelKind

__all__ = [
    "cdf_tan_theta",
    "dm_cdf_tan_theta",
    "cdf_theta",
    "pdf_theta",
    "cdf_psi",
    "pdf_psi",
    "cdf_tan_theta_elevated",
    "cdf_theta_elevated",
    "pdf_theta_elevated",
    "los_probability",
    "mean_theta",
    "mean_psi",
    "AngleDistribution",
    "angle_distribution",
    "joint_density",
    "marginal_h",
    "marginal_x",
    "marginal_x_cdf",
    "BlockingMeans",
    "blocking_means",
    "blocking_index_mean",
    "blocking_index_pmf",
]

_HALF_PI = 0.5 * math.pi
_LOG_TINY = -745.0  # below this, exp underflows to exactly 0.0


def _tangent_scale(params: EnvParams, variant: ModelKind) -> float:
    """Frechet scale of tan(theta) for the Poisson-location variants."""
    if variant is ModelKind.WEIBULL:
        return params.rho * gamma_fn(1.0 + 1.0 / params.weibull_shape)
    return params.rho


def _check_tangent(t: float) -> float:
    if t < 0.0 or math.isnan(t):
        raise DomainError(f"tangent must be >= 0, got {t!r}")
    return float(t)


def cdf_tan_theta(params: EnvParams, variant: ModelKind | str, t: float) -> float:
    """P[tan(theta) <= t] for a ground observer.

    Frechet law exp(-scale/t) for Poisson locations (constant and random
    heights share it); the grid variant dispatches to the phase-averaged
    product law :func:`dm_cdf_tan_theta`.
    """
    variant = ModelKind.parse(variant)
    t = _check_tangent(t)
    if variant is ModelKind.DM:
        return dm_cdf_tan_theta(params, t)
    if t == 0.0:
        return 0.0
    return math.exp(-_tangent_scale(params, variant) / t)


# ---------------------------------------------------------------------------
# grid-city law: average over the grid phase of a product of height CDFs

_DM_TERM_CAP = 1_000_000


def _dm_log_upper_bound(params: EnvParams, t: float) -> float:
    """Cheap upper bound for log CDF, to short-circuit underflow.

    Each phase-conditional factor is at most 1 - exp(-mu*t*i/lam) because
    the phase never exceeds one spacing.
    """
    lam, mu = params.lam, params.mu
    total = 0.0
    for i in range(1, 1001):
        e = -mu * t * i / lam
        if e < _LOG_TINY:
            break
        total += math.log1p(-math.exp(e))
        if total < _LOG_TINY:
            break
    return total


def _dm_terms(params: EnvParams, t: float, tol: float) -> int:
    """Factors needed so the dropped product tail is below ``tol``."""
    lam, mu = params.lam, params.mu
    r = math.exp(-mu * t / lam)
    # remaining -log factors are bounded by a geometric series with ratio r
    n = int(math.ceil(math.log(1.0 / (tol * (1.0 - r))) * lam / (mu * t))) + 2
    if n > _DM_TERM_CAP:
        raise TruncationError(
            f"grid-city law needs {n} product terms at t={t!r}; cap is "
            f"{_DM_TERM_CAP}")
    return n


def dm_cdf_tan_theta(params: EnvParams, t: float, tol: float = 1e-10) -> float:
    """P[tan(theta) <= t] for the random-phase grid city.

    Conditioned on the phase u, locations are u + (i-1)/lam and the CDF
    is the product over buildings of P[height < location * t]; the phase
    is then averaged out by quadrature.
    """
    t = _check_tangent(t)
    if t == 0.0:
        return 0.0
    if not (0.0 < tol < 1e-2):
        raise ParameterError(f"tol must lie in (0, 1e-2), got {tol!r}")
    if _dm_log_upper_bound(params, t) < _LOG_TINY:
        return 0.0
    lam, mu = params.lam, params.mu
    n = _dm_terms(params, t, tol)
    offsets = np.arange(n, dtype=np.float64) / lam

    def integrand(u: float) -> float:
        logs = np.log1p(-np.exp(-mu * (u + offsets) * t))
        return math.exp(float(logs.sum()))

    spec = QuadratureSpec(rel_tol=tol, abs_tol=tol * 1e-3,
                          max_subdivisions=DEFAULT_QUADRATURE.max_subdivisions)
    value, _ = integrate(integrand, 0.0, 1.0 / lam, spec)
    return min(value * lam, 1.0)


def _dm_pdf_tan(params: EnvParams, t: float, tol: float = 1e-10) -> float:
    """Density of tan(theta) for the grid city (derivative of the product)."""
    t = _check_tangent(t)
    if t == 0.0 or _dm_log_upper_bound(params, t) < _LOG_TINY:
        return 0.0
    lam, mu = params.lam, params.mu
    n = _dm_terms(params, t, tol)
    offsets = np.arange(n, dtype=np.float64) / lam

    def integrand(u: float) -> float:
        a = u + offsets
        e = np.exp(-mu * a * t)
        prod = math.exp(float(np.log1p(-e).sum()))
        return prod * float((mu * a * e / (1.0 - e)).sum())

    spec = QuadratureSpec(rel_tol=max(tol, 1e-9), abs_tol=1e-300,
                          max_subdivisions=DEFAULT_QUADRATURE.max_subdivisions)
    value, _ = integrate(integrand, 0.0, 1.0 / lam, spec)
    return value * lam


def _dm_cdf_tan_grid(params: EnvParams, ts: np.ndarray, nodes: int = 64,
                     tol: float = 1e-12) -> np.ndarray:
    """Vectorized grid-city CDF on many tangents (fixed-order quadrature).

    Gauss-Legendre in the phase converges spectrally for this analytic
    integrand; 64 nodes are far below 1e-10 error.  Used by the MC
    validators, where thousands of evaluations are needed.
    """
    lam, mu = params.lam, params.mu
    ug, wg = leggauss(nodes)
    inv = 1.0 / lam
    u = 0.5 * inv * (ug + 1.0)        # (nodes,)
    w = 0.5 * inv * wg * lam          # folds in the phase-average factor
    out = np.zeros(len(ts))
    for j, t in enumerate(np.asarray(ts, dtype=np.float64)):
        if t <= 0.0 or _dm_log_upper_bound(params, t) < _LOG_TINY:
            continue
        n = _dm_terms(params, t, tol)
        acc = np.zeros(nodes)
        block = 4096
        for i0 in range(0, n, block):
            offs = np.arange(i0, min(n, i0 + block), dtype=np.float64) / lam
            acc += np.log1p(-np.exp(-mu * t * (u[:, None] + offs[None, :]))
                            ).sum(axis=1)
        out[j] = float((np.exp(acc) * w).sum())
    return np.minimum(out, 1.0)


# ---------------------------------------------------------------------------
# angle-domain wrappers


def _check_angle(phi: float) -> float:
    if phi < 0.0 or phi >= _HALF_PI or math.isnan(phi):
        raise DomainError(f"angle must lie in [0, pi/2), got {phi!r}")
    return float(phi)


def cdf_theta(params: EnvParams, variant: ModelKind | str, phi: float) -> float:
    """P[theta <= phi] for a ground observer, phi in [0, pi/2)."""
    return cdf_tan_theta(params, variant, math.tan(_check_angle(phi)))


def pdf_theta(params: EnvParams, variant: ModelKind | str, phi: float) -> float:
    """Density of the blockage elevation angle at ``phi``."""
    variant = ModelKind.parse(variant)
    phi = _check_angle(phi)
    if variant is ModelKind.DM:
        t = math.tan(phi)
        sec2 = 1.0 + t * t
        return _dm_pdf_tan(params, t) * sec2
    if phi == 0.0:
        return 0.0
    scale = _tangent_scale(params, variant)
    s = math.sin(phi)
    arg = -scale / math.tan(phi)
    if arg < _LOG_TINY:
        return 0.0
    return math.exp(arg) * scale / (s * s)


def cdf_psi(params: EnvParams, variant: ModelKind | str, phi: float) -> float:
    """P[psi <= phi] for the visible half-angle psi = pi/2 - theta."""
    if phi <= 0.0:
        return 0.0
    if phi >= _HALF_PI:
        return 1.0
    return 1.0 - cdf_theta(params, variant, _HALF_PI - phi)


def pdf_psi(params: EnvParams, variant: ModelKind | str, phi: float) -> float:
    if phi <= 0.0 or phi >= _HALF_PI:
        return 0.0
    return pdf_theta(params, variant, _HALF_PI - phi)


# ---------------------------------------------------------------------------
# elevated observer (exponential-height Poisson city)


def _check_height(h: float) -> float:
    if h < 0.0 or math.isnan(h):
        raise DomainError(f"height must be >= 0, got {h!r}")
    return float(h)


def cdf_tan_theta_elevated(params: EnvParams, h: float, t: float) -> float:
    """P[tan(theta) <= t] from height ``h``: the ground law thinned by
    exp(-mu*h).  Location along the street does not matter (stationarity).
    """
    h = _check_height(h)
    t = _check_tangent(t)
    if t == 0.0:
        return 0.0
    arg = -params.rho * math.exp(-params.mu * h) / t
    return math.exp(arg)


def cdf_theta_elevated(params: EnvParams, h: float, phi: float) -> float:
    return cdf_tan_theta_elevated(params, h, math.tan(_check_angle(phi)))


def pdf_theta_elevated(params: EnvParams, h: float, phi: float) -> float:
    h = _check_height(h)
    phi = _check_angle(phi)
    if phi == 0.0:
        return 0.0
    scale = params.rho * math.exp(-params.mu * h)
    s = math.sin(phi)
    arg = -scale / math.tan(phi)
    if arg < _LOG_TINY:
        return 0.0
    return math.exp(arg) * scale / (s * s)


def los_probability(params: EnvParams, h: float, zeta: float) -> float:
    """Probability that the slant path at elevation ``zeta`` is clear.

    Equals P[theta <= zeta] for an observer at height ``h``:
    exp(-rho * exp(-mu*h) * cot(zeta)).
    """
    h = _check_height(h)
    if not (0.0 < zeta <= _HALF_PI) or math.isnan(zeta):
        raise DomainError(f"elevation must lie in (0, pi/2], got {zeta!r}")
    if zeta == _HALF_PI:
        return 1.0
    return cdf_theta_elevated(params, h, zeta)


# ---------------------------------------------------------------------------
# mean angles


def mean_theta(params: EnvParams, variant: ModelKind | str = ModelKind.MM,
               observer_height: float = 0.0) -> float:
    """E[theta] via the tail integral of the angle CDF.

    Elevation is only defined for the exponential-height Poisson city.
    """
    variant = ModelKind.parse(variant)
    h = _check_height(observer_height)
    if h > 0.0 and variant is not ModelKind.MM:
        raise ParameterError("elevated observers are modeled for the "
                             "exponential-height Poisson city only")
    if h > 0.0:
        def tail(phi: float) -> float:
            return 1.0 - cdf_theta_elevated(params, h, phi)
    elif variant is ModelKind.DM:
        def tail(phi: float) -> float:
            return 1.0 - dm_cdf_tan_theta(params, math.tan(phi), 1e-11)
    else:
        scale = _tangent_scale(params, variant)

        def tail(phi: float) -> float:
            if phi == 0.0:
                return 1.0
            a = -scale / math.tan(phi)
            return 1.0 if a < _LOG_TINY else -math.expm1(a)

    value, _ = integrate(tail, 0.0, _HALF_PI)
    return value


def mean_psi(params: EnvParams, variant: ModelKind | str = ModelKind.MM,
             observer_height: float = 0.0) -> float:
    """E[psi] = pi/2 - E[theta]."""
    return _HALF_PI - mean_theta(params, variant, observer_height)


# ---------------------------------------------------------------------------
# reusable distribution handle


@dataclass(frozen=True)
class AngleDistribution:
    """Bundled cdf/pdf/mean of one visibility-angle law.

    ``support`` is the angle interval carrying the mass; cdf clamps to
    0/1 outside it, pdf to 0.  ``tan_cdf``/``tan_pdf`` work on the
    tangent scale where the closed forms live.
    """

    label: str
    support: tuple[float, float]
    tan_cdf: Callable[[float], float]
    tan_pdf: Callable[[float], float]
    _mean: Callable[[], float]

    def cdf(self, phi: float) -> float:
        if phi <= self.support[0]:
            return 0.0
        if phi >= self.support[1]:
            return 1.0
        return self.tan_cdf(math.tan(phi))

    def pdf(self, phi: float) -> float:
        if phi <= self.support[0] or phi > self.support[1] or phi >= _HALF_PI:
            return 0.0
        t = math.tan(phi)
        return self.tan_pdf(t) * (1.0 + t * t)

    def mean(self) -> float:
        return self._mean()


def angle_distribution(params: EnvParams, variant: ModelKind | str = ModelKind.MM,
                       observer_height: float = 0.0) -> AngleDistribution:
    """Distribution handle for the blockage angle of one city variant."""
    variant = ModelKind.parse(variant)
    h = _check_height(observer_height)
    if h > 0.0:
        if variant is not ModelKind.MM:
            raise ParameterError("elevated observers are modeled for the "
                                 "exponential-height Poisson city only")
        return AngleDistribution(
            label=f"elevated(h={h:g})", support=(0.0, _HALF_PI),
            tan_cdf=lambda t: cdf_tan_theta_elevated(params, h, t),
            tan_pdf=lambda t: _frechet_tan_pdf(
                params.rho * math.exp(-params.mu * h), t),
            _mean=lambda: mean_theta(params, ModelKind.MM, h))
    if variant is ModelKind.DM:
        return AngleDistribution(
            label="dm", support=(0.0, _HALF_PI),
            tan_cdf=lambda t: dm_cdf_tan_theta(params, t),
            tan_pdf=lambda t: _dm_pdf_tan(params, t),
            _mean=lambda: mean_theta(params, ModelKind.DM))
    scale = _tangent_scale(params, variant)
    return AngleDistribution(
        label=variant.value, support=(0.0, _HALF_PI),
        tan_cdf=lambda t: 0.0 if t == 0.0 else math.exp(-scale / t),
        tan_pdf=lambda t: _frechet_tan_pdf(scale, t),
        _mean=lambda: mean_theta(params, variant))


def _frechet_tan_pdf(scale: float, t: float) -> float:
    if t <= 0.0:
        return 0.0
    a = -scale / t
    if a < _LOG_TINY:
        return 0.0
    return math.exp(a) * scale / (t * t)


# ---------------------------------------------------------------------------
# joint law of the dominant blocker (exponential-height Poisson city)


def joint_density(params: EnvParams, x: float, h: float) -> float:
    """Joint density of the blocker location and height at ``(x, h)``.

    The blocker sits at x with height h iff a building is there and no
    earlier building rises above the ray to (x, h), giving
    lam*mu*exp(-mu*h - lam*x/(mu*h)).  Vanishes as h -> 0.
    """
    if not x > 0.0 or math.isnan(x):
        raise DomainError(f"blocker location must be positive, got {x!r}")
    h = _check_height(h)
    if h == 0.0:
        return 0.0
    arg = -params.mu * h - params.lam * x / (params.mu * h)
    return 0.0 if arg < _LOG_TINY else params.lam * params.mu * math.exp(arg)


def marginal_h(params: EnvParams, h: float) -> float:
    """Blocker height density mu^2 * h * exp(-mu*h) (Gamma(2, 1/mu))."""
    h = _check_height(h)
    return params.mu * params.mu * h * math.exp(-params.mu * h)


def marginal_x(params: EnvParams, x: float) -> float:
    """Blocker distance density 2*lam*sqrt(lam*x)*K1(2*sqrt(lam*x))."""
    if not x > 0.0 or math.isnan(x):
        raise DomainError(f"blocker location must be positive, got {x!r}")
    s = 2.0 * math.sqrt(params.lam * x)
    return params.lam * s * bessel_k1(s)


def marginal_x_cdf(params: EnvParams, x: float) -> float:
    """Closed-form CDF of the blocker distance.

    1 - (s^2/2) K2(s) at s = 2*sqrt(lam*x), with K2 = K0 + 2*K1/s.
    """
    if x < 0.0 or math.isnan(x):
        raise DomainError(f"blocker location must be >= 0, got {x!r}")
    if x == 0.0:
        return 0.0
    s = 2.0 * math.sqrt(params.lam * x)
    k2 = float(_special.k0(s)) + 2.0 * bessel_k1(s) / s
    return 1.0 - 0.5 * s * s * k2


class BlockingMeans:
    """Mean blocker coordinates; attribute access avoids order mixups."""

    __slots__ = ("x_plus", "h_plus")

    def __init__(self, x_plus: float, h_plus: float):
        self.x_plus = x_plus
        self.h_plus = h_plus

    def __repr__(self):
        return f"BlockingMeans(x_plus={self.x_plus!r}, h_plus={self.h_plus!r})"


def blocking_means(params: EnvParams) -> BlockingMeans:
    """E[X+] = 2/lam and E[H+] = 2/mu."""
    return BlockingMeans(x_plus=2.0 / params.lam, h_plus=2.0 / params.mu)


def blocking_index_mean(params: EnvParams, x: float, h: float) -> float:
    """Mean count of non-blocking buildings before a blocker at (x, h).

    Buildings land uniformly on (0, x) and must stay below the sight
    line h*u/x; integrating the exponential height CDF along the ray
    gives lam*x*(1 - (1 - exp(-mu*h))/(mu*h)).
    """
    if not x > 0.0 or math.isnan(x):
        raise DomainError(f"blocker location must be positive, got {x!r}")
    h = _check_height(h)
    if h == 0.0:
        return 0.0
    mh = params.mu * h
    return params.lam * x * (1.0 + math.expm1(-mh) / mh)


def blocking_index_pmf(params: EnvParams, x: float, h: float, i: int) -> float:
    """P[blocker at (x, h) is the i-th building], i = 1, 2, ...

    The i-1 earlier buildings below the sight line are Poisson with the
    mean of :func:`blocking_index_mean`.
    """
    if not isinstance(i, (int, np.integer)) or i < 1:
        raise ParameterError(f"index must be a positive integer, got {i!r}")
    m = blocking_index_mean(params, x, h)
    k = int(i) - 1
    if m == 0.0:
        return 1.0 if k == 0 else 0.0
    logp = -m + k * math.log(m) - math.lgamma(k + 1.0)
    return 0.0 if logp < _LOG_TINY else math.exp(logp)
