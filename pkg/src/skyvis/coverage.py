"""Aerial-node visibility lengths and two-hop connectivity probabilities.

Aerial nodes form a stationary Poisson process of intensity ``nu`` on a
layer ``H`` above the blocker top.  Conditioned on the dominant blocker
at ``(x, h)``, the directly visible part of the layer is the segment
from the user out to x*(1 + H/h); a transmissive surface on the blocker
stretches it to x + H/tan(enhanced angle), whose excess length over the
direct part is exactly exponential with rate rho*exp(-mu*h)/H.  That
exponential race against the node spacing gives every closed form here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import joint_density
from .errors import DomainError, ParameterError
from .numerics import QuadratureSpec, dilog, integrate
from .process import EnvParams

__all__ = [
    "CoverageScenario",
    "visible_length",
    "visible_extension",
    "mean_l",
    "DivergentMean",
    "MEAN_LENGTH_DIVERGES",
    "mean_L",
    "tau_conditional",
    "tau_unconditional",
    "tau_unconditional_quadrature",
]

_PI2_6 = math.pi * math.pi / 6.0


@dataclass(frozen=True)
class CoverageScenario:
    """City parameters plus an aerial layer: altitude ``H``, node density ``nu``."""

    env: EnvParams
    H: float
    nu: float

    def __post_init__(self):
        if not (self.H > 0.0 and math.isfinite(self.H)):
            raise ParameterError(f"layer altitude must be positive, got {self.H!r}")
        if not (self.nu > 0.0 and math.isfinite(self.nu)):
            raise ParameterError(f"node density must be positive, got {self.nu!r}")

    @property
    def h_nu(self) -> float:
        """The product H*nu, the only combination the connectivity laws see."""
        return self.H * self.nu


def _check_blocker(x: float, h: float):
    if not x > 0.0 or math.isnan(x):
        raise DomainError(f"blocker location must be positive, got {x!r}")
    if not h > 0.0 or math.isnan(h):
        raise DomainError(f"blocker height must be positive, got {h!r}")


def visible_length(params: EnvParams, x: float, h: float, H: float,
                   with_ris: bool = False) -> float:
    """Visible layer length conditioned on the blocker at ``(x, h)``.

    Without a surface this is the deterministic x*(1 + H/h); with a
    transmissive surface it is the conditional mean
    x + H*(exp(mu*h)/rho + x/h).
    """
    _check_blocker(x, h)
    if not H > 0.0 or math.isnan(H):
        raise DomainError(f"layer altitude must be positive, got {H!r}")
    if not with_ris:
        return x * (1.0 + H / h)
    return x + H * (math.exp(params.mu * h) / params.rho + x / h)


def visible_extension(params: EnvParams, x: float, h: float, H: float) -> float:
    """Mean extra visible length added by the surface: H*exp(mu*h)/rho."""
    _check_blocker(x, h)
    if not H > 0.0 or math.isnan(H):
        raise DomainError(f"layer altitude must be positive, got {H!r}")
    return H * math.exp(params.mu * h) / params.rho


def mean_l(scenario: CoverageScenario) -> float:
    """Mean direct visible length over the blocker law: (2 + H*mu)/lam."""
    return (2.0 + scenario.H * scenario.env.mu) / scenario.env.lam


class DivergentMean:
    """Typed marker: a deconditioned mean with no finite value.

    Deliberately not convertible to float so it cannot slip into
    arithmetic unnoticed.
    """

    __slots__ = ()

    def __repr__(self):
        return "DivergentMean()"

    def __str__(self):
        return "inf"


MEAN_LENGTH_DIVERGES = DivergentMean()


def mean_L(scenario: CoverageScenario) -> DivergentMean:
    """Mean with-surface visible length over the blocker law.

    The surface extension averages exp(mu*h) against the Gamma(2) height
    law, which has no finite integral, so the deconditioned mean
    diverges for every parameter choice; a typed marker says so.
    """
    return MEAN_LENGTH_DIVERGES


def tau_conditional(scenario: CoverageScenario, x: float, h: float) -> float:
    """P[some node visible through the surface | none visible directly].

    Conditioned on the blocker at ``(x, h)``; the location only gates
    the domain, the value depends on the height alone because the
    surface-added length is Exp(rho*exp(-mu*h)/H) regardless of x.
    """
    _check_blocker(x, h)
    # stable form of 1 - rho/(exp(mu*h)*H*nu + rho): never overflows
    a = scenario.env.rho * math.exp(-scenario.env.mu * h)
    return 1.0 - a / (scenario.h_nu + a)


def tau_unconditional(scenario: CoverageScenario) -> float:
    """Connectivity probability deconditioned over the blocker law.

    Closed form in r = H*nu/rho:
    (r/6) * (pi^2 - 6*ln(r)*ln(1+1/r) - 3*ln(1+1/r)^2 - 6*Li2(r/(1+r))).
    Well-defined at r = 1 (value pi^2/12) and stable for extreme r.
    """
    r = scenario.h_nu / scenario.env.rho
    l1 = math.log1p(1.0 / r)
    li = dilog(r / (1.0 + r))
    return (r / 6.0) * (6.0 * _PI2_6 - 6.0 * math.log(r) * l1
                        - 3.0 * l1 * l1 - 6.0 * li)


def tau_unconditional_quadrature(scenario: CoverageScenario) -> float:
    """Independent route: double quadrature of the conditional law
    against the joint blocker density, on a box holding all but ~1e-12
    of the blocker mass.
    """
    params = scenario.env
    lam, mu = params.lam, params.mu
    lo, hi = 0.0, 80.0 / mu
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (1.0 + mu * mid) * math.exp(-mu * mid) > 1e-12:
            lo = mid
        else:
            hi = mid
    h_hi = hi
    lnq = math.log(1e12)
    inner_spec = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-14,
                                max_subdivisions=200)
    outer_spec = QuadratureSpec(rel_tol=1e-8, abs_tol=1e-12,
                                max_subdivisions=200)

    def inner(h: float) -> float:
        if h <= 0.0:
            return 0.0
        x_hi = mu * h * lnq / lam
        tau_h = tau_conditional(scenario, 1.0, h)

        def f(x: float) -> float:
            return tau_h * joint_density(params, x, h)

        value, _ = integrate(f, 0.0, x_hi, inner_spec)
        return value

    value, _ = integrate(inner, 0.0, h_hi, outer_spec)
    return value
