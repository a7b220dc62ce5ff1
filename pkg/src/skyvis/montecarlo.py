"""Chunked Monte-Carlo engines for blockage and visibility statistics.

Sampling is organized in fixed-size chunks of 8192 realizations.  Each
chunk owns an independent generator seeded by ``(seed, chunk_index)``,
so results are reproducible bit for bit for a given ``(seed, n)`` and do
not depend on how chunks are scheduled.  Within a chunk the draw order
is fixed: stage-A city draws, then the rare brute-force window
extensions (ascending realization index), then the vectorized
beyond-blocker extensions.

Windows are certified: stage A samples the full marked process on
(0, x_max] where x_max comes from :func:`skyvis.process.truncation_distance`.
Realizations whose measured tangent falls below the certified floor
(``t_min``, chosen so this has probability ~1e-7) are re-extended with
exact conditional draws until certified, so no estimator inherits the
censoring bias.  Views past the dominant blocker are completed with a
thinned height-exceedance process: buildings shorter than the viewpoint
can never raise a positive view tangent, taller ones arrive at rate
lam*exp(-mu*h0) with heights h0 + Exp(mu) by memorylessness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import reduce_skyline
from .errors import ParameterError
from .numerics import gamma_fn
from .process import (DEFAULT_EPSILON, EnvParams, ModelKind,
                      _expected_beaters, truncation_distance)

__all__ = [
    "BASE_CHUNK",
    "BlockageBatch",
    "GainBatch",
    "characteristic_tangent",
    "auto_t_min",
    "sample_blockage",
    "sample_view_tangents",
    "sample_gain_triples",
]

#: Chunk size; fixed so chunking never changes the sampled values.
BASE_CHUNK = 8192

#: Target censoring mass when ``t_min`` is chosen automatically.
AUTO_CENSOR_MASS = 1e-7

#: Per-realization tangent floor for extensions, as a fraction of the
#: characteristic tangent; the true tangent falls below the floor with
#: probability exp(-1/_FLOOR_FRACTION), i.e. never.
_FLOOR_FRACTION = 1e-3

_EXT_ROUND_CAP = 4000
_BRUTE_WINDOW_CAP = 200
_U32 = 2.0 ** -32


@dataclass
class BlockageBatch:
    """Per-realization blockage reductions from one MC run."""

    tan_theta: np.ndarray
    x_plus: np.ndarray
    h_plus: np.ndarray
    index_k: np.ndarray
    tan_trans: np.ndarray | None
    t_min: float
    x_max: float
    seed: int
    n_censored: int
    n_warnings: int


@dataclass
class GainBatch:
    """Coupled view tangents for RIS gain estimation (same realizations)."""

    tan_theta: np.ndarray
    tan_trans: np.ndarray
    tan_refl: np.ndarray
    seed: int
    n_censored: int
    n_warnings: int


def characteristic_tangent(params: EnvParams, model: ModelKind = ModelKind.MM,
                           observer_height: float = 0.0) -> float:
    """Scale of the blockage tangent: rho*Gamma(1+1/k)*exp(-mu*h).

    Exact Frechet scale for the Poisson variants; for the grid variant it
    is the matching proxy (the laws agree closely for moderate densities).
    """
    k = params.weibull_shape if model is ModelKind.WEIBULL else 1.0
    return params.rho * gamma_fn(1.0 + 1.0 / k) * math.exp(
        -params.mu * observer_height)


def auto_t_min(params: EnvParams, model: ModelKind = ModelKind.MM,
               observer_height: float = 0.0,
               censor_mass: float = AUTO_CENSOR_MASS) -> float:
    """Certified tangent floor leaving ~``censor_mass`` below it.

    Solves exp(-scale/t) = censor_mass, which keeps the expected number
    of buildings per realization independent of the density ratio.
    """
    scale = characteristic_tangent(params, model, observer_height)
    return scale / math.log(1.0 / censor_mass)


# ---------------------------------------------------------------------------
# stage-A city draws


def _draw_city(rng: np.random.Generator, params: EnvParams, model: ModelKind,
               x_max: float, m: int):
    """Draw ``m`` cities on (0, x_max]; returns flat ragged arrays.

    Every stage draws for a full chunk before slicing to ``m``, so the
    stage-A stream content (and hence realization i's city) does not
    depend on the requested total.  Locations are left unsorted (the
    reduction does not need order).
    """
    lam, mu = params.lam, params.mu
    if model is ModelKind.DM:
        inv = 1.0 / lam
        fr_full = rng.integers(0, 2 ** 32, BASE_CHUNK, dtype=np.uint64) * _U32
        counts_full = np.floor((x_max - fr_full * inv) / inv).astype(
            np.int64) + 1
        np.maximum(counts_full, 0, out=counts_full)
        fr, counts = fr_full[:m], counts_full[:m]
        starts = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(counts, out=starts[1:])
        tot = int(starts[-1])
        ordinal = np.arange(tot, dtype=np.float64) - np.repeat(
            starts[:-1].astype(np.float64), counts)
        xs = (np.repeat(fr, counts) + ordinal) * inv
        hs = rng.exponential(1.0 / mu, int(counts_full.sum()))[:tot]
        return xs, hs, starts, fr, counts
    counts_full = rng.poisson(lam * x_max, BASE_CHUNK).astype(np.int64)
    counts = counts_full[:m]
    starts = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=starts[1:])
    tot = int(starts[-1])
    tot_full = int(counts_full.sum())
    xs = rng.uniform(0.0, x_max, tot_full)[:tot]
    if model is ModelKind.MM:
        hs = rng.exponential(1.0 / mu, tot_full)[:tot]
    elif model is ModelKind.MD:
        hs = np.full(tot, 1.0 / mu)
    else:
        hs = rng.weibull(params.weibull_shape, tot_full)[:tot] / mu
    return xs, hs, starts, None, counts


# ---------------------------------------------------------------------------
# rare brute-force completion of the origin view


def _brute_extend_theta(rng, params, model, h_obs, x_max, budget, idx_list,
                        tan1, xp, hp, kidx, tan2, pos0, fracs, counts,
                        want_beyond):
    """Exact window extension for realizations censored at stage A.

    Mutates the per-chunk result arrays in place.  Called for ~1e-7 of
    realizations; clarity over speed.  Returns the safety-valve count.
    """
    lam, mu = params.lam, params.mu
    warned = 0
    floor = _FLOOR_FRACTION * characteristic_tangent(params, model, h_obs)
    for i in idx_list:
        if model is ModelKind.MD:
            top = 1.0 / mu - h_obs
            if top <= 0.0 or counts[i] > 0:
                continue  # view is exactly 0 / stage value already exact
            gap = rng.exponential(1.0 / lam)
            x1 = x_max + gap
            tan1[i] = top / x1
            xp[i], hp[i], kidx[i] = x1, 1.0 / mu, 1
            tan2[i] = 0.0  # equal heights: nothing past the blocker is taller
            pos0[i] = x1
            continue
        best, bx, bh = tan1[i], xp[i], hp[i]
        rank = int(kidx[i])
        total = int(counts[i])
        x_end = x_max
        ext_x = []
        ext_h = []
        it = 0
        while _expected_beaters(params, model, h_obs, max(best, floor),
                                x_end) >= budget:
            it += 1
            if it > _BRUTE_WINDOW_CAP:
                warned += 1
                break
            if model is ModelKind.DM:
                nx = (fracs[i] + total) / lam
                nh = rng.exponential(1.0 / mu)
                new_x = np.array([nx])
                new_h = np.array([nh])
                x_end = nx
            else:
                cnt = int(rng.poisson(lam * x_max))
                new_x = x_end + rng.uniform(0.0, x_max, cnt)
                if model is ModelKind.MM:
                    new_h = rng.exponential(1.0 / mu, cnt)
                else:
                    new_h = rng.weibull(params.weibull_shape, cnt) / mu
                x_end += x_max
            ext_x.append(new_x)
            ext_h.append(new_h)
            cand = (new_h - h_obs) / new_x
            j = int(np.argmax(cand)) if len(cand) else -1
            if j >= 0 and cand[j] > best:
                best, bx, bh = float(cand[j]), float(new_x[j]), float(new_h[j])
                rank = total + int(np.sum(new_x < bx)) + 1
            total += len(new_x)
        if best > 0.0:
            tan1[i], xp[i], hp[i], kidx[i] = best, bx, bh, rank
            if want_beyond:
                ax = np.concatenate(ext_x) if ext_x else np.empty(0)
                ah = np.concatenate(ext_h) if ext_h else np.empty(0)
                sel = (ax > bx) & (ah > bh)
                tan2[i] = float(((ah[sel] - bh) / (ax[sel] - bx)).max()) \
                    if sel.any() else 0.0
                pos0[i] = x_end
    return warned


# ---------------------------------------------------------------------------
# vectorized thinned completion of a view past the window


def _extend_view(rng, params, pos0, x0, h0, m0, budget):
    """Complete view tangents from per-realization viewpoints.

    Only buildings taller than the viewpoint height ``h0`` can raise the
    running maximum ``m0``; they form a Poisson process of rate
    lam*exp(-mu*h0) with excess heights Exp(mu).  Each round draws one
    such building per still-active realization and retires those whose
    residual tail mass is certified below ``budget``.
    """
    lam, mu = params.lam, params.mu
    m = m0.astype(np.float64).copy()
    pos = pos0.astype(np.float64).copy()
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        floor = _FLOOR_FRACTION * (lam / mu) * np.exp(-mu * h0)
        rate = lam * np.exp(-mu * h0)
        active = np.arange(len(m))
        warned = 0
        for _ in range(_EXT_ROUND_CAP):
            mh = np.maximum(m[active], floor[active])
            tail = (lam / (mu * mh)) * np.exp(
                -mu * (h0[active] + mh * (pos[active] - x0[active])))
            active = active[tail >= budget]
            if active.size == 0:
                break
            pos[active] += rng.exponential(1.0, active.size) / rate[active]
            dh = rng.exponential(1.0 / mu, active.size)
            m[active] = np.maximum(m[active],
                                   dh / (pos[active] - x0[active]))
        else:
            warned = int(active.size)
    return m, warned


def _blocker_coords(xs, hs, arg):
    """Coordinates of the per-realization blocker; NaN where none."""
    found = arg >= 0
    if len(xs) == 0:
        nan = np.full(len(arg), np.nan)
        return found, nan, nan.copy()
    safe = np.where(found, arg, 0)
    return found, np.where(found, xs[safe], np.nan), \
        np.where(found, hs[safe], np.nan)


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), chunk]))


def _check_n(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or n <= 0:
        raise ParameterError(f"sample count must be a positive integer, got {n!r}")
    return int(n)


# ---------------------------------------------------------------------------
# public samplers


def sample_blockage(params: EnvParams, model: ModelKind = ModelKind.MM,
                    n: int = 10_000, seed: int = 0,
                    observer_height: float = 0.0, want_trans: bool = False,
                    t_min: float | None = None,
                    epsilon: float = DEFAULT_EPSILON) -> BlockageBatch:
    """Sample the dominant-blocker statistics of ``n`` city realizations.

    Returns tangents, blocker coordinates and 1-based blocker ranks
    (0 = no blocker, possible only above a constant-height roofline).
    With ``want_trans`` the view past the blocker is completed as well
    (exponential-height Poisson city only).
    """
    model = ModelKind.parse(model)
    n = _check_n(n)
    if want_trans and model is not ModelKind.MM:
        raise ParameterError("beyond-blocker views require the Poisson city "
                             "with exponential heights")
    if t_min is None:
        t_min = auto_t_min(params, model, observer_height)
    x_max = truncation_distance(params, model, observer_height, t_min, epsilon)
    budget = -math.log1p(-epsilon)
    tan_theta = np.empty(n)
    x_plus = np.empty(n)
    h_plus = np.empty(n)
    index_k = np.empty(n, dtype=np.int64)
    tan_trans = np.empty(n) if want_trans else None
    n_cens = n_warn = 0
    for c in range((n + BASE_CHUNK - 1) // BASE_CHUNK):
        rng = _chunk_rng(seed, c)
        lo = c * BASE_CHUNK
        m = min(BASE_CHUNK, n - lo)
        xs, hs, starts, fracs, counts = _draw_city(rng, params, model, x_max, m)
        t1, arg, nbef, t2 = reduce_skyline(
            xs, hs, starts, np.zeros(m), np.full(m, float(observer_height)),
            want_trans)
        found, xp, hp = _blocker_coords(xs, hs, arg)
        kidx = np.where(found, nbef + 1, 0)
        pos0 = np.full(m, x_max)
        censored = np.nonzero(t1 < t_min)[0]
        if censored.size:
            n_cens += int(censored.size)
            n_warn += _brute_extend_theta(
                rng, params, model, observer_height, x_max, budget,
                censored.tolist(), t1, xp, hp, kidx, t2, pos0, fracs, counts,
                want_trans)
        if want_trans:
            has = kidx > 0
            if has.any():
                t2[has], w = _extend_view(rng, params, pos0[has], xp[has],
                                          hp[has], t2[has], budget)
                n_warn += w
            tan_trans[lo:lo + m] = np.where(has, t2, np.nan)
        tan_theta[lo:lo + m] = t1
        x_plus[lo:lo + m] = xp
        h_plus[lo:lo + m] = hp
        index_k[lo:lo + m] = kidx
    return BlockageBatch(tan_theta=tan_theta, x_plus=x_plus, h_plus=h_plus,
                         index_k=index_k, tan_trans=tan_trans,
                         t_min=float(t_min), x_max=float(x_max),
                         seed=int(seed), n_censored=n_cens, n_warnings=n_warn)


def sample_view_tangents(params: EnvParams, x: float, h: float,
                         n: int = 10_000, seed: int = 0,
                         epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """View tangents of the positive-side skyline from a fixed point.

    The viewpoint ``(x, h)`` must sit on or left of the origin with
    positive height (a reflector atop a mirror-side blocker).  City is
    the exponential-height Poisson variant.
    """
    if x > 0.0:
        raise ParameterError(f"viewpoint must have x <= 0, got {x!r}")
    if not h > 0.0:
        raise ParameterError(f"viewpoint height must be positive, got {h!r}")
    n = _check_n(n)
    t_min = auto_t_min(params, ModelKind.MM, 0.0)
    x_max = truncation_distance(params, ModelKind.MM, 0.0, t_min, epsilon)
    budget = -math.log1p(-epsilon)
    out = np.empty(n)
    for c in range((n + BASE_CHUNK - 1) // BASE_CHUNK):
        rng = _chunk_rng(seed, c)
        lo = c * BASE_CHUNK
        m = min(BASE_CHUNK, n - lo)
        xs, hs, starts, _, _ = _draw_city(rng, params, ModelKind.MM, x_max, m)
        t1, _, _, _ = reduce_skyline(xs, hs, starts, np.full(m, float(x)),
                                     np.full(m, float(h)), False)
        t1, _ = _extend_view(rng, params, np.full(m, x_max),
                             np.full(m, float(x)), np.full(m, float(h)),
                             t1, budget)
        out[lo:lo + m] = t1
    return out


def sample_gain_triples(params: EnvParams, n: int = 10_000, seed: int = 0,
                        epsilon: float = DEFAULT_EPSILON) -> GainBatch:
    """Coupled (direct, past-blocker, reflected) view tangents.

    Direct and past-blocker tangents share one positive-side city; the
    reflected view is taken from the top of an independently drawn
    mirror-side dominant blocker over that same positive city, matching
    the coupling used for visibility-gain ratios.  The rare (~1e-7)
    brute-extension buildings of a censored direct view are not replayed
    into the reflected reduction; the error is folded into the epsilon
    budget.
    """
    n = _check_n(n)
    t_min = auto_t_min(params, ModelKind.MM, 0.0)
    x_max = truncation_distance(params, ModelKind.MM, 0.0, t_min, epsilon)
    budget = -math.log1p(-epsilon)
    tan_theta = np.empty(n)
    tan_trans = np.empty(n)
    tan_refl = np.empty(n)
    n_cens = n_warn = 0
    for c in range((n + BASE_CHUNK - 1) // BASE_CHUNK):
        rng = _chunk_rng(seed, c)
        lo = c * BASE_CHUNK
        m = min(BASE_CHUNK, n - lo)
        zeros = np.zeros(m)
        # positive-side city and its origin view
        xs, hs, starts, _, counts = _draw_city(rng, params, ModelKind.MM,
                                               x_max, m)
        t1, arg, nbef, t2 = reduce_skyline(xs, hs, starts, zeros, zeros, True)
        found, xp, hp = _blocker_coords(xs, hs, arg)
        kidx = np.where(found, nbef + 1, 0)
        pos0 = np.full(m, x_max)
        # mirror-side city, same law, reduced from the origin
        xs2, hs2, starts2, _, counts2 = _draw_city(rng, params, ModelKind.MM,
                                                   x_max, m)
        s1, arg2, nbef2, _ = reduce_skyline(xs2, hs2, starts2, zeros, zeros,
                                            False)
        found2, xm, hm = _blocker_coords(xs2, hs2, arg2)
        kidx2 = np.where(found2, nbef2 + 1, 0)
        pos2 = np.full(m, x_max)
        cens1 = np.nonzero(t1 < t_min)[0]
        if cens1.size:
            n_cens += int(cens1.size)
            n_warn += _brute_extend_theta(
                rng, params, ModelKind.MM, 0.0, x_max, budget, cens1.tolist(),
                t1, xp, hp, kidx, t2, pos0, None, counts, True)
        cens2 = np.nonzero(s1 < t_min)[0]
        if cens2.size:
            n_cens += int(cens2.size)
            dummy = np.zeros(m)
            n_warn += _brute_extend_theta(
                rng, params, ModelKind.MM, 0.0, x_max, budget, cens2.tolist(),
                s1, xm, hm, kidx2, dummy, pos2, None, counts2, False)
        has = kidx > 0
        t2[has], w1 = _extend_view(rng, params, pos0[has], xp[has], hp[has],
                                   t2[has], budget)
        n_warn += w1
        # reflected view: from (-xm, hm) over the positive-side city
        has2 = kidx2 > 0
        xr = np.where(has2, -xm, 0.0)
        hr = np.where(has2, hm, 0.0)
        tR, _, _, _ = reduce_skyline(xs, hs, starts, xr, hr, False)
        tR[has2], w2 = _extend_view(rng, params, np.full(int(has2.sum()), x_max),
                                    xr[has2], hr[has2], tR[has2], budget)
        n_warn += w2
        # pathological leftovers (no blocker found even after extension)
        tR = np.where(has2, tR, t1)
        t2 = np.where(has, t2, t1)
        tan_theta[lo:lo + m] = t1
        tan_trans[lo:lo + m] = t2
        tan_refl[lo:lo + m] = tR
    return GainBatch(tan_theta=tan_theta, tan_trans=tan_trans,
                     tan_refl=tan_refl, seed=int(seed), n_censored=n_cens,
                     n_warnings=n_warn)
