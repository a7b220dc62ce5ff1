"""City skyline point processes and single-realization blockage geometry.

A city is a marked point process on the positive half line: building
locations on (0, x_max] with i.i.d. height marks.  Four variants are
supported (random/deterministic locations crossed with random/constant
heights, plus Weibull-shaped heights), all sharable through one sampling
routine with a certified truncation window: the probability that any
building beyond ``x_max`` subtends a view tangent above ``t_min`` from
the observer is below ``epsilon``.
"""
from __future__ import annotations

import dataclasses
import enum
import io
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import (DomainError, EmptyRealizationError, ParameterError,
                     TruncationError)
from .numerics import upper_incomplete_gamma

__all__ = [
    "ModelKind",
    "EnvParams",
    "Realization",
    "BlockageResult",
    "DEFAULT_T_MIN",
    "DEFAULT_EPSILON",
    "truncation_distance",
    "sample_realization",
    "blockage_angle",
    "mirror_realization",
    "realization_to_csv",
    "realization_from_csv",
]

#: Default smallest view tangent the truncation window must certify
#: (half a degree of elevation).
DEFAULT_T_MIN = math.tan(math.radians(0.5))

#: Default bound on the probability that truncation affects the result.
DEFAULT_EPSILON = 1e-8

#: Hard cap on the certified window; beyond this the request is absurd.
X_MAX_CAP = 1e9

_U32 = 2.0 ** -32


class ModelKind(enum.Enum):
    """City variants: locations x heights."""

    MM = "mm"            # Poisson locations, exponential heights
    MD = "md"            # Poisson locations, constant heights 1/mu
    DM = "dm"            # regular grid with random phase, exponential heights
    WEIBULL = "weibull"  # Poisson locations, Weibull heights (scale 1/mu)

    @classmethod
    def parse(cls, name: str | "ModelKind") -> "ModelKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ParameterError(f"unknown model {name!r}; expected one of "
                                 f"{[m.value for m in cls]}") from None


@dataclass(frozen=True)
class EnvParams:
    """Built-environment parameters.

    lam
        Building density along the street (1/m): Poisson intensity for
        random locations, inverse grid spacing for the deterministic grid.
    mu
        Inverse mean building height (1/m); constant-height cities use
        height 1/mu exactly.
    weibull_shape
        Shape of the Weibull height mark (scale stays 1/mu); shape 1 is
        the exponential city.
    """

    lam: float
    mu: float
    weibull_shape: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ParameterError(f"lam must be positive and finite, got {self.lam!r}")
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise ParameterError(f"mu must be positive and finite, got {self.mu!r}")
        if not (self.weibull_shape > 0.0 and math.isfinite(self.weibull_shape)):
            raise ParameterError(
                f"weibull_shape must be positive and finite, got {self.weibull_shape!r}")

    @property
    def rho(self) -> float:
        """Density-to-height ratio lam/mu controlling every blockage law."""
        return self.lam / self.mu


@dataclass(frozen=True, eq=False)
class Realization:
    """One sampled city: sorted locations ``xs`` with heights ``hs``.

    The window (0, x_max] is certified for views from
    ``(0, observer_height)``: any building beyond it subtends a tangent
    above ``t_min`` with probability below ``epsilon``.
    """

    xs: np.ndarray
    hs: np.ndarray
    x_max: float
    seed: int
    model: ModelKind
    params: EnvParams
    observer_height: float
    t_min: float
    epsilon: float

    @property
    def n(self) -> int:
        return len(self.xs)


@dataclass(frozen=True)
class BlockageResult:
    """Dominant blocker of the sky as seen from one observer.

    ``theta`` is the blockage elevation angle in radians; ``index_k`` is
    the 1-based rank (by distance) of the blocking building, 0 when no
    building rises above the observer (then ``theta`` is 0 and the
    blocker coordinates are NaN).
    """

    theta: float
    tan_theta: float
    x_plus: float
    h_plus: float
    index_k: int
    truncation_warning: bool


def _expected_beaters(params: EnvParams, model: ModelKind, h0: float,
                      t: float, span: float) -> float:
    """Mean number of buildings past ``span`` subtending tangent > t.

    ``h0`` is the observer height and ``span`` the distance from the
    observer to the window edge.  For the deterministic-height variant
    the count is 0/1 and deterministic; for the grid variant this is a
    geometric-series upper bound on the Poisson-free union.
    """
    lam, mu, k = params.lam, params.mu, params.weibull_shape
    if model is ModelKind.MD:
        top = 1.0 / mu - h0
        return math.inf if (top > 0.0 and top / t > span) else 0.0
    if model is ModelKind.DM:
        r = math.exp(-mu * t / lam)
        return math.exp(-mu * (h0 + t * span)) * r / (1.0 - r)
    if model is ModelKind.WEIBULL and k != 1.0:
        w0 = mu * (h0 + t * span)
        return lam / (mu * t * k) * upper_incomplete_gamma(1.0 / k, w0 ** k)
    return lam / (mu * t) * math.exp(-mu * (h0 + t * span))


def _solve_span(params: EnvParams, model: ModelKind, h0: float, t: float,
                budget: float) -> float:
    """Smallest span with _expected_beaters below ``budget``."""
    if model is ModelKind.MD:
        top = 1.0 / params.mu - h0
        return max(top, 0.0) / t
    lo, hi = 0.0, 8.0 / params.lam
    while _expected_beaters(params, model, h0, t, hi) >= budget:
        lo, hi = hi, 2.0 * hi
        if hi > X_MAX_CAP:
            raise TruncationError(
                f"certified window would exceed {X_MAX_CAP:g} m for t_min={t!r}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _expected_beaters(params, model, h0, t, mid) < budget:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-9 * max(hi, 1.0):
            break
    return hi


def truncation_distance(params: EnvParams, model: ModelKind = ModelKind.MM,
                        observer_height: float = 0.0,
                        t_min: float = DEFAULT_T_MIN,
                        epsilon: float = DEFAULT_EPSILON) -> float:
    """Certified window length for sampling.

    Post-condition: the probability that any building beyond the
    returned distance subtends a view tangent above ``t_min`` from
    ``(0, observer_height)`` is below ``epsilon``.  Floored at one mean
    building spacing so realizations are never trivially empty.
    """
    model = ModelKind.parse(model)
    if not (0.0 < epsilon < 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not t_min > 0.0:
        raise ParameterError(f"t_min must be positive, got {t_min!r}")
    if observer_height < 0.0:
        raise ParameterError(f"observer_height must be >= 0, got {observer_height!r}")
    budget = -math.log1p(-epsilon)
    span = _solve_span(params, model, observer_height, t_min, budget)
    span = max(span, 1.0 / params.lam)
    if span > X_MAX_CAP:
        raise TruncationError(
            f"certified window {span:g} m exceeds the {X_MAX_CAP:g} m cap")
    return span


def sample_realization(params: EnvParams, model: ModelKind = ModelKind.MM,
                       observer_height: float = 0.0,
                       t_min: float = DEFAULT_T_MIN,
                       epsilon: float = DEFAULT_EPSILON,
                       seed: int = 0) -> Realization:
    """Draw one city on the certified window.

    Same seed, same realization, bit for bit.  The grid variant draws
    its phase as a 32-bit fraction of the spacing so that consecutive
    location differences are exact whenever 1/lam is exactly
    representable (e.g. lam = 2 gives spacings of exactly 0.5).
    """
    model = ModelKind.parse(model)
    if not isinstance(seed, (int, np.integer)) or seed < 0 or seed >= 2 ** 64:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    x_max = truncation_distance(params, model, observer_height, t_min, epsilon)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    inv = 1.0 / params.lam
    if model is ModelKind.DM:
        frac = float(rng.integers(0, 2 ** 32, dtype=np.uint64)) * _U32
        count = int(math.floor((x_max - frac * inv) / inv)) + 1
        count = max(count, 0)
        xs = (frac + np.arange(count, dtype=np.float64)) * inv
        hs = rng.exponential(1.0 / params.mu, count)
    else:
        count = int(rng.poisson(params.lam * x_max))
        xs = np.sort(rng.uniform(0.0, x_max, count))
        if model is ModelKind.MM:
            hs = rng.exponential(1.0 / params.mu, count)
        elif model is ModelKind.MD:
            hs = np.full(count, 1.0 / params.mu)
        else:
            hs = rng.weibull(params.weibull_shape, count) / params.mu
    xs.flags.writeable = False
    hs.flags.writeable = False
    return Realization(xs=xs, hs=hs, x_max=float(x_max), seed=int(seed),
                       model=model, params=params,
                       observer_height=float(observer_height),
                       t_min=float(t_min), epsilon=float(epsilon))


def _certified_tangent(realization: Realization, ox: float, oh: float) -> float:
    """Largest tangent NOT certified by the window for this observer.

    Returns -1.0 when every tangent is certified (possible only for the
    constant-height city seen from above the roofline).
    """
    params, model = realization.params, realization.model
    span = realization.x_max - ox
    budget = -math.log1p(-realization.epsilon)
    if model is ModelKind.MD:
        top = 1.0 / params.mu - oh
        return top / span if top > 0.0 else -1.0
    lo, hi = 0.0, 1.0
    while _expected_beaters(params, model, oh, hi, span) >= budget:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _expected_beaters(params, model, oh, mid, span) < budget:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * max(hi, 1.0):
            break
    return hi


def blockage_angle(realization: Realization,
                   observer: tuple[float, float] | None = None) -> BlockageResult:
    """Dominant sky blocker seen from ``observer`` (x, height).

    Defaults to the observer the realization was sampled for, i.e.
    ``(0, observer_height)``.  All buildings must lie strictly to the
    observer's right.  ``truncation_warning`` is set when the measured
    tangent falls at or below the largest tangent the window fails to
    certify for this observer, including the no-blocker case.
    """
    if realization.n == 0:
        raise EmptyRealizationError("realization contains no buildings")
    if observer is None:
        ox, oh = 0.0, realization.observer_height
    else:
        ox, oh = float(observer[0]), float(observer[1])
    xs, hs = realization.xs, realization.hs
    if xs[0] <= ox:
        raise DomainError(
            f"observer x={ox!r} must lie strictly left of every building")
    if oh < 0.0:
        raise DomainError(f"observer height must be >= 0, got {oh!r}")
    dx = xs - ox
    dh = hs - oh
    mask = dh > 0.0
    t_cert = _certified_tangent(realization, ox, oh)
    if not mask.any():
        return BlockageResult(theta=0.0, tan_theta=0.0, x_plus=math.nan,
                              h_plus=math.nan, index_k=0,
                              truncation_warning=0.0 <= t_cert)
    tangents = np.where(mask, dh / dx, -math.inf)
    best = float(tangents.max())
    winners = np.nonzero(tangents == best)[0]
    j = int(winners[0])  # xs sorted ascending: first winner is nearest
    return BlockageResult(theta=math.atan(best), tan_theta=best,
                          x_plus=float(xs[j]), h_plus=float(hs[j]),
                          index_k=j + 1, truncation_warning=best <= t_cert)


def mirror_realization(realization: Realization) -> Realization:
    """Reflect the city through the observer: window becomes [-x_max, 0).

    Applying it twice restores the original arrays exactly.
    """
    xs = (-realization.xs[::-1]).copy()
    hs = realization.hs[::-1].copy()
    xs.flags.writeable = False
    hs.flags.writeable = False
    return dataclasses.replace(realization, xs=xs, hs=hs)


# ---------------------------------------------------------------------------
# CSV debugging round trip

_CSV_MAGIC = "# skyvis realization v1"


def realization_to_csv(realization: Realization, dest: str | TextIO) -> None:
    """Write ``index,x,h`` rows plus a metadata comment header.

    Floats are written with ``repr`` so the round trip is lossless.
    """
    p = realization.params
    meta = (f"# model={realization.model.value} lam={p.lam!r} mu={p.mu!r} "
            f"shape={p.weibull_shape!r} x_max={realization.x_max!r} "
            f"seed={realization.seed} "
            f"observer_height={realization.observer_height!r} "
            f"t_min={realization.t_min!r} epsilon={realization.epsilon!r}")
    lines = [_CSV_MAGIC, meta, "index,x,h"]
    lines.extend(f"{i + 1},{float(x)!r},{float(h)!r}"
                 for i, (x, h) in enumerate(zip(realization.xs, realization.hs)))
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, bytes)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        dest.write(text)


def realization_from_csv(src: str | TextIO) -> Realization:
    """Inverse of :func:`realization_to_csv`."""
    if isinstance(src, (str, bytes)):
        with open(src, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    elif isinstance(src, io.TextIOBase) or hasattr(src, "read"):
        lines = src.read().splitlines()
    else:
        raise ParameterError(f"cannot read realization from {src!r}")
    if not lines or lines[0] != _CSV_MAGIC:
        raise ParameterError("not a skyvis realization CSV")
    meta = dict(item.split("=", 1) for item in lines[1].lstrip("# ").split())
    xs, hs = [], []
    for row in lines[3:]:
        if not row:
            continue
        _, x, h = row.split(",")
        xs.append(float(x))
        hs.append(float(h))
    axs = np.asarray(xs, dtype=np.float64)
    ahs = np.asarray(hs, dtype=np.float64)
    axs.flags.writeable = False
    ahs.flags.writeable = False
    return Realization(
        xs=axs, hs=ahs, x_max=float(meta["x_max"]), seed=int(meta["seed"]),
        model=ModelKind.parse(meta["model"]),
        params=EnvParams(lam=float(meta["lam"]), mu=float(meta["mu"]),
                         weibull_shape=float(meta["shape"])),
        observer_height=float(meta["observer_height"]),
        t_min=float(meta["t_min"]), epsilon=float(meta["epsilon"]))
