"""Special functions and adaptive quadrature used by the closed-form laws.

The gamma function, the modified Bessel function K1 and the integration
backend are thin wrappers over ``math`` / ``scipy``; the upper incomplete
gamma for non-positive order and the dilogarithm are implemented here
because the wrapped libraries only cover part of the needed domain
(``scipy.special.gammaincc`` rejects negative orders, ``scipy.special.spence``
uses a different argument convention and is kept solely as a test oracle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import integrate as _quadpack
from scipy import special as _special

from .errors import DomainError, QuadratureError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUADRATURE",
    "gamma_fn",
    "upper_incomplete_gamma",
    "bessel_k1",
    "dilog",
    "integrate",
]

_PI2_6 = math.pi * math.pi / 6.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance knobs for :func:`integrate`."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200


DEFAULT_QUADRATURE = QuadratureSpec()


def gamma_fn(x: float) -> float:
    """Gamma function for positive real ``x``."""
    if not x > 0.0:
        raise DomainError(f"gamma_fn requires x > 0, got {x!r}")
    return math.gamma(x)


def _upper_gamma_cf(s: float, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction
    #   Gamma(s, x) = e^{-x} x^s / (x + 1 - s - 1(1-s)/(x + 3 - s - ...)),
    # valid for x > 0 and any real s; convergence degrades as x -> 0,
    # which is why small x is routed through the recurrence instead.
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, 600):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + s * math.log(x)) * h


_EULER_GAMMA = 0.5772156649015328606
_ZETA_TABLE = tuple(float(_special.zeta(k)) for k in range(2, 41))


def _lngamma1p_over_s(s: float) -> float:
    """ln(Gamma(1+s))/s for |s| <= 0.25, full precision down to s -> 0.

    lgamma itself only carries absolute precision near its zero at 1,
    which is fatal once divided by a tiny s; the zeta series for
    ln(Gamma(1+s)) = -gamma*s + sum_k (-1)^k zeta(k) s^k / k has its
    leading factor of s removed analytically instead.
    """
    c = -_EULER_GAMMA
    sk = 1.0
    for i, z in enumerate(_ZETA_TABLE):
        sk *= -s
        c -= z * sk / (i + 2.0)
    return c


def _upper_gamma_small_s(s: float, x: float) -> float:
    """Gamma(s, x) for 0 < |s| < 0.25 and small x, stable as s -> 0.

    Uses Gamma(s, x) = [Gamma(s+1) - x^s]/s - x^s sum_{k>=1}
    (-x)^k / (k! (s+k)); the head is a difference of expm1 terms whose
    s -> 0 cancellation is analytic (the limit is E1(x) = -gamma - ln x
    + x - ...), so no precision is lost.
    """
    b = s * math.log(x)
    big_l = s * _lngamma1p_over_s(s)
    head = (math.expm1(big_l) - math.expm1(b)) / s
    xs = math.exp(b)
    tail = 0.0
    term = 1.0
    for k in range(1, 80):
        term *= -x / k
        delta = term / (s + k)
        tail += delta
        if abs(delta) < 1e-18 * max(abs(tail), 1e-30):
            break
    return head - xs * tail


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Upper incomplete gamma integral for real order and positive argument.

    Supports the non-positive orders needed by the conditional moment
    formulas, where neither ``math`` nor ``scipy.special.gammaincc``
    applies.  Strategy: positive order goes to the regularized scipy
    routine, order zero is the exponential integral, and negative order
    uses the continued fraction for moderate/large ``x`` or a downward
    recurrence from a fractional (or zero) anchor order for small ``x``.
    """
    if not x > 0.0:
        if x == 0.0 and s > 0.0:
            return math.gamma(s)
        raise DomainError(
            f"upper_incomplete_gamma requires x > 0 (or x = 0 with s > 0), "
            f"got s={s!r}, x={x!r}")
    if s >= 0.25:
        return math.gamma(s) * float(_special.gammaincc(s, x))
    if abs(s) < 1e-280:
        # below double-subnormal resolution the order is exactly zero
        return float(_special.exp1(x))
    if x >= 1.5:
        return _upper_gamma_cf(s, x)
    if abs(s) < 0.25:
        return _upper_gamma_small_s(s, x)
    frac = s - math.floor(s)
    if frac == 0.0:
        # Integer order: anchor at Gamma(0, x) = E1(x).
        g = float(_special.exp1(x))
        t = 0.0
    elif frac < 0.25 or frac > 0.75:
        # Gamma(frac) explodes as frac -> 0+; the shifted expansion stays
        # finite there and one upward step recovers frac near 1.
        if frac > 0.75:
            g0 = _upper_gamma_small_s(frac - 1.0, x)
            g = (frac - 1.0) * g0 + math.pow(x, frac - 1.0) * math.exp(-x)
        else:
            g = _upper_gamma_small_s(frac, x)
        t = frac
    else:
        g = math.gamma(frac) * float(_special.gammaincc(frac, x))
        t = frac
    # Gamma(t - 1, x) = (Gamma(t, x) - x^{t-1} e^{-x}) / (t - 1)
    emx = math.exp(-x)
    while t > s + 0.5:
        t -= 1.0
        g = (g - math.pow(x, t) * emx) / t
    return g


def bessel_k1(x: float) -> float:
    """Modified Bessel function of the second kind, order one."""
    if not x > 0.0:
        raise DomainError(f"bessel_k1 requires x > 0, got {x!r}")
    return float(_special.k1(x))


def _dilog_series(z: float) -> float:
    total = 0.0
    term = z
    k = 1
    while abs(term) > 1e-17 * max(abs(total), 1e-3) and k < 200:
        total += term / (k * k)
        term *= z
        k += 1
    return total


def dilog(z: float) -> float:
    """Real dilogarithm Li2(z) for z <= 1.

    Series on |z| <= 1/2, extended by the reflection, Landen and
    inversion identities elsewhere; every branch reduces the argument
    into the series disk in one step.
    """
    if z > 1.0:
        raise DomainError(f"dilog is real only for z <= 1, got {z!r}")
    if z == 1.0:
        return _PI2_6
    if z == 0.0:
        return 0.0
    if z < -1.0:
        # inversion: Li2(z) = -pi^2/6 - ln(-z)^2/2 - Li2(1/z)
        lg = math.log(-z)
        return -_PI2_6 - 0.5 * lg * lg - dilog(1.0 / z)
    if z > 0.5:
        # reflection: Li2(z) = pi^2/6 - ln(z) ln(1-z) - Li2(1-z)
        return _PI2_6 - math.log(z) * math.log1p(-z) - _dilog_series(1.0 - z)
    if z < -0.5:
        # Landen: Li2(z) = -Li2(z/(z-1)) - ln(1-z)^2/2, and z/(z-1) lands
        # in [1/3, 1/2] for z in [-1, -0.5)
        l1mz = math.log1p(-z)
        return -_dilog_series(z / (z - 1.0)) - 0.5 * l1mz * l1mz
    return _dilog_series(z)


def integrate(f: Callable[[float], float], a: float, b: float,
              spec: QuadratureSpec = DEFAULT_QUADRATURE) -> tuple[float, float]:
    """Adaptive quadrature of ``f`` over ``[a, b]``; ``b`` may be ``inf``.

    Returns ``(value, error_bound)``.  A semi-infinite range is mapped to
    (0, 1] via u = 1/(1 + x - a) before handing off to QUADPACK, so the
    same machinery serves both cases.  Raises :class:`QuadratureError`
    (carrying the best estimate) when the requested tolerance cannot be
    certified.
    """
    if math.isinf(a):
        raise DomainError("lower limit must be finite")
    if not b > a:
        raise DomainError(f"integration bounds must satisfy a < b, got [{a!r}, {b!r}]")
    if math.isinf(b):
        def g(u: float, _f=f, _a=a) -> float:
            x = _a + (1.0 - u) / u
            return _f(x) / (u * u)
        lo, hi = 0.0, 1.0
    else:
        g, lo, hi = f, a, b
    out = _quadpack.quad(g, lo, hi, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                         limit=spec.max_subdivisions, full_output=1)
    value, err = float(out[0]), float(out[1])
    if math.isnan(value):
        raise QuadratureError("integrand produced NaN", best=value, error_bound=err)
    if len(out) > 3:
        # QUADPACK flagged trouble; accept anyway if the achieved bound
        # already satisfies the request, otherwise surface the failure.
        if err > max(spec.abs_tol, spec.rel_tol * abs(value)):
            raise QuadratureError(str(out[3]), best=value, error_bound=err)
    return value, err
