"""Statistical validation of the closed-form laws against simulation.

Every validator draws fresh Monte-Carlo samples, compares them with the
corresponding analytic law through a distribution-free test (KS or
chi-square on equal-probability bins) or a z-test on a probability, and
returns a :class:`ValidationReport`.  A report passes when its p-value
exceeds ``alpha`` (default 0.01); suites that want robustness against
the expected false-alarm rate run three fixed seeds and require two
passes (:func:`majority_pass`).

Conditioning conventions: laws conditioned on the dominant blocker
standing at (x, h) are validated on samples whose blocker falls in a
small bin around (x, h); bin widths shrink like n^(-1/5) and are
recorded in the report details.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _special

from .analytic import (_dm_cdf_tan_grid, blocking_index_mean, cdf_tan_theta,
                       _tangent_scale)
from .coverage import CoverageScenario, tau_conditional, tau_unconditional
from .errors import ParameterError, SampleSizeError
from .montecarlo import sample_blockage, sample_view_tangents
from .process import EnvParams, ModelKind
from .ris import RisMode, refl_cdf_tan, trans_cdf_tan

__all__ = [
    "ValidationReport",
    "EmpiricalCdf",
    "empirical_cdf",
    "ks_test",
    "validate_angle",
    "validate_joint",
    "validate_blocking_index",
    "validate_ris",
    "validate_tau",
    "majority_pass",
    "render_reports",
    "write_jsonl",
    "run_battery",
]

DEFAULT_ALPHA = 0.01

#: Aerial-node windows extend 40 mean spacings past the point of
#: interest; the probability that anything outside matters is e^-40.
_NODE_WINDOW = 40.0


@dataclass
class ValidationReport:
    """Outcome of one MC-versus-analytic comparison."""

    target: str
    kind: str
    n: int
    seed: int
    alpha: float
    statistic: float
    p_value: float
    passed: bool
    mc_estimate: float | None = None
    mc_stderr: float | None = None
    expected: float | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        out = {}
        for key, val in self.__dict__.items():
            if isinstance(val, dict):
                val = {k: (float(v) if isinstance(v, (int, float, np.floating))
                           and not isinstance(v, bool) else v)
                       for k, v in val.items()}
            elif isinstance(val, (np.floating, np.integer)):
                val = float(val)
            out[key] = val
        return json.dumps(out, sort_keys=True)


class EmpiricalCdf:
    """Right-continuous empirical CDF of a sample."""

    def __init__(self, samples):
        xs = np.sort(np.asarray(samples, dtype=np.float64))
        if len(xs) < 10:
            raise SampleSizeError(
                f"empirical CDF needs at least 10 samples, got {len(xs)}")
        self.xs = xs
        self.n = len(xs)

    def __call__(self, x):
        return np.searchsorted(self.xs, x, side="right") / self.n


def empirical_cdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


def _apply_cdf(cdf, xs: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(cdf(xs), dtype=np.float64)
        if out.shape == xs.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(v)) for v in xs])


def ks_test(samples, cdf) -> tuple[float, float]:
    """One-sample KS statistic and asymptotic p-value."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(xs)
    if n < 10:
        raise SampleSizeError(f"KS test needs at least 10 samples, got {n}")
    f = _apply_cdf(cdf, xs)
    i = np.arange(1, n + 1, dtype=np.float64)
    d = max(float((i / n - f).max()), float((f - (i - 1.0) / n).max()))
    p = float(_special.kolmogorov(math.sqrt(n) * d))
    return d, p


def _chi2_p(stat: float, dof: int) -> float:
    return float(_special.chdtrc(dof, stat))


def _z_p(z: float) -> float:
    return float(_special.erfc(abs(z) / math.sqrt(2.0)))


def _bin_mask(batch, x: float, h: float, n: int, bin_scale: float,
              params: EnvParams):
    """Blocker-in-bin mask plus the bin widths used."""
    wx = bin_scale * (2.0 / params.lam) * n ** -0.2
    wh = bin_scale * (2.0 / params.mu) * n ** -0.2
    sel = ((batch.index_k > 0)
           & (np.abs(batch.x_plus - x) <= 0.5 * wx)
           & (np.abs(batch.h_plus - h) <= 0.5 * wh))
    return sel, wx, wh


# ---------------------------------------------------------------------------
# blockage-angle laws


def validate_angle(params: EnvParams, variant: ModelKind | str = ModelKind.MM,
                   n: int = 100_000, seed: int = 0,
                   alpha: float = DEFAULT_ALPHA,
                   observer_height: float = 0.0) -> ValidationReport:
    """KS test of sampled blockage tangents against the variant law."""
    variant = ModelKind.parse(variant)
    if observer_height > 0.0 and variant is not ModelKind.MM:
        raise ParameterError("elevated laws exist for the exponential "
                             "Poisson city only")
    batch = sample_blockage(params, variant, n=n, seed=seed,
                            observer_height=observer_height)
    samples = batch.tan_theta
    if variant is ModelKind.DM:
        pos = samples[samples > 0]
        grid = np.geomspace(0.5 * pos.min(), 2.0 * samples.max(), 4097)
        fg = _dm_cdf_tan_grid(params, grid)

        def cdf(ts):
            return np.interp(ts, grid, fg)
    else:
        scale = _tangent_scale(params, variant) * math.exp(
            -params.mu * observer_height)

        def cdf(ts):
            ts = np.asarray(ts, dtype=np.float64)
            with np.errstate(divide="ignore"):
                return np.where(ts > 0.0, np.exp(-scale / np.maximum(ts, 1e-300)),
                                0.0)
    stat, p = ks_test(samples, cdf)
    target = f"angle:{variant.value}"
    if observer_height > 0.0:
        target += f"@h={observer_height:g}"
    return ValidationReport(
        target=target, kind="ks", n=n, seed=seed, alpha=alpha, statistic=stat,
        p_value=p, passed=p > alpha,
        mc_estimate=float(np.arctan(samples).mean()),
        mc_stderr=float(np.arctan(samples).std(ddof=1) / math.sqrt(n)),
        details={"x_max": batch.x_max, "t_min": batch.t_min,
                 "n_censored": batch.n_censored,
                 "n_warnings": batch.n_warnings})


# ---------------------------------------------------------------------------
# joint blocker law


def validate_joint(params: EnvParams, n: int = 100_000, seed: int = 0,
                   alpha: float = DEFAULT_ALPHA,
                   bins: int = 20) -> ValidationReport:
    """Chi-square test of the joint blocker law on equal-probability bins.

    The probability integral transform maps the blocker height through
    its Gamma(2) marginal and the location through the conditional
    Exp(lam/(mu*h)) law; under the analytic law the pair is uniform on
    the unit square, tested on a bins-by-bins equal grid.
    """
    batch = sample_blockage(params, ModelKind.MM, n=n, seed=seed)
    keep = batch.index_k > 0
    xs = batch.x_plus[keep]
    hs = batch.h_plus[keep]
    m = len(xs)
    if m < 100:
        raise SampleSizeError(f"joint validation needs >= 100 blockers, got {m}")
    mh = params.mu * hs
    u = 1.0 - (1.0 + mh) * np.exp(-mh)
    v = -np.expm1(-params.lam * xs / (params.mu * hs))
    iu = np.minimum((u * bins).astype(np.int64), bins - 1)
    iv = np.minimum((v * bins).astype(np.int64), bins - 1)
    counts = np.bincount(iu * bins + iv, minlength=bins * bins)
    expected = m / (bins * bins)
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = bins * bins - 1
    p = _chi2_p(stat, dof)
    zx = (float(xs.mean()) - 2.0 / params.lam) / (float(xs.std(ddof=1))
                                                  / math.sqrt(m))
    zh = (float(hs.mean()) - 2.0 / params.mu) / (float(hs.std(ddof=1))
                                                 / math.sqrt(m))
    return ValidationReport(
        target="joint", kind="chi2", n=n, seed=seed, alpha=alpha,
        statistic=stat, p_value=p, passed=p > alpha,
        mc_estimate=float(xs.mean()), mc_stderr=float(xs.std(ddof=1)
                                                      / math.sqrt(m)),
        expected=2.0 / params.lam,
        details={"bins": bins, "dof": dof, "n_dropped": int(n - m),
                 "z_mean_x": zx, "z_mean_h": zh})


def validate_blocking_index(params: EnvParams, x: float, h: float,
                            n: int = 1_000_000, seed: int = 0,
                            alpha: float = DEFAULT_ALPHA,
                            bin_scale: float = 1.0) -> ValidationReport:
    """Chi-square test of the blocker rank near (x, h) against the
    shifted Poisson law with mean :func:`blocking_index_mean`."""
    batch = sample_blockage(params, ModelKind.MM, n=n, seed=seed)
    sel, wx, wh = _bin_mask(batch, x, h, n, bin_scale, params)
    ks = batch.index_k[sel] - 1
    m = len(ks)
    if m < 100:
        raise SampleSizeError(
            f"only {m} blockers fell in the bin around ({x}, {h})")
    m0 = blocking_index_mean(params, x, h)
    # cells 0..K-1 plus a lumped tail, keeping expected counts >= 5
    pmf = []
    k = 0
    while True:
        pk = math.exp(-m0 + k * math.log(m0) - math.lgamma(k + 1)) \
            if m0 > 0 else (1.0 if k == 0 else 0.0)
        tail = 1.0 - sum(pmf) - pk
        if m * tail < 5.0 and k >= 1:
            pmf.append(pk)
            break
        pmf.append(pk)
        k += 1
        if k > 10_000:
            break
    probs = np.array(pmf + [max(1.0 - sum(pmf), 0.0)])
    edges = len(probs) - 1
    obs = np.bincount(np.minimum(ks, edges), minlength=edges + 1)
    exp = m * probs
    good = exp > 0
    stat = float(((obs[good] - exp[good]) ** 2 / exp[good]).sum())
    dof = int(good.sum()) - 1
    p = _chi2_p(stat, dof)
    return ValidationReport(
        target=f"index@({x:g},{h:g})", kind="chi2", n=n, seed=seed,
        alpha=alpha, statistic=stat, p_value=p, passed=p > alpha,
        mc_estimate=float(ks.mean()), mc_stderr=float(ks.std(ddof=1)
                                                      / math.sqrt(m)),
        expected=m0,
        details={"n_selected": m, "bin_w_x": wx, "bin_w_h": wh,
                 "cells": len(probs), "dof": dof})


# ---------------------------------------------------------------------------
# surface-enhanced laws


def validate_ris(params: EnvParams, mode: RisMode | str, x: float, h: float,
                 n: int = 400_000, seed: int = 0,
                 alpha: float = DEFAULT_ALPHA,
                 bin_scale: float = 1.0) -> ValidationReport:
    """KS test of an enhanced-angle law conditioned on the blocker (x, h).

    Transmissive: samples whose dominant blocker falls in a shrinking
    bin around (x, h) carry the conditional law of the view past it.
    Reflective: the positive-side skyline is independent of the mirror
    -side conditioning, so the view is sampled directly from (x, h).
    """
    mode = RisMode.parse(mode)
    if mode is RisMode.TRANSMISSIVE:
        batch = sample_blockage(params, ModelKind.MM, n=n, seed=seed,
                                want_trans=True)
        sel, wx, wh = _bin_mask(batch, x, h, n, bin_scale, params)
        samples = batch.tan_trans[sel]
        if len(samples) < 10:
            raise SampleSizeError(
                f"only {len(samples)} blockers fell in the bin around "
                f"({x}, {h})")
        details = {"n_selected": int(len(samples)), "bin_w_x": wx,
                   "bin_w_h": wh, "n_censored": batch.n_censored,
                   "n_warnings": batch.n_warnings}

        def cdf(ts):
            return np.array([trans_cdf_tan(params, x, h, t) for t in ts])
    else:
        samples = sample_view_tangents(params, x, h, n=n, seed=seed)
        details = {"n_selected": int(n), "direct_conditioning": True}

        def cdf(ts):
            return np.array([refl_cdf_tan(params, x, h, t) for t in ts])
    stat, p = ks_test(samples, cdf)
    return ValidationReport(
        target=f"ris:{mode.value}@({x:g},{h:g})", kind="ks",
        n=n, seed=seed, alpha=alpha, statistic=stat, p_value=p,
        passed=p > alpha, mc_estimate=float(np.arctan(samples).mean()),
        mc_stderr=float(np.arctan(samples).std(ddof=1)
                        / math.sqrt(len(samples))),
        details=details)


# ---------------------------------------------------------------------------
# aerial connectivity


def validate_tau(scenario: CoverageScenario, n: int = 200_000, seed: int = 0,
                 alpha: float = DEFAULT_ALPHA, conditional: bool = False,
                 x: float | None = None, h: float | None = None,
                 bin_scale: float = 1.0) -> ValidationReport:
    """z-test of the two-hop connectivity probability.

    Simulates aerial nodes as a Poisson process on the layer and tests
    the geometric visibility of each node.  Unconditional: frequency of
    [some node visible only through the surface] against the closed
    form.  Conditional: within a blocker bin around (x, h), frequency of
    [some node in the surface-extended stretch] among realizations whose
    directly visible stretch holds no node (literal rejection, which also
    exercises the independence argument behind the closed form).
    """
    params = scenario.env
    batch = sample_blockage(params, ModelKind.MM, n=n, seed=seed,
                            want_trans=True)
    nu, big_h = scenario.nu, scenario.H
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xA151A1]))
    if conditional:
        if x is None or h is None:
            raise ParameterError("conditional validation needs the blocker "
                                 "bin center (x, h)")
        sel, wx, wh = _bin_mask(batch, x, h, n, bin_scale, params)
        idx = np.nonzero(sel)[0]
        if len(idx) < 100:
            raise SampleSizeError(
                f"only {len(idx)} blockers fell in the bin around ({x}, {h})")
        l_len = batch.x_plus[idx] * (1.0 + big_h / batch.h_plus[idx])
        L_len = batch.x_plus[idx] + big_h / batch.tan_trans[idx]
        w = l_len + _NODE_WINDOW / nu
        hits = np.zeros(len(idx), dtype=bool)
        empty_direct = np.zeros(len(idx), dtype=bool)
        counts = rng.poisson(nu * w)
        for i in range(len(idx)):
            u = rng.uniform(0.0, w[i], counts[i])
            if (u < l_len[i]).any():
                continue  # a node is directly visible: outside the event
            empty_direct[i] = True
            hits[i] = bool((u < L_len[i]).any())
        m = int(empty_direct.sum())
        if m < 50:
            raise SampleSizeError(
                f"only {m} realizations survived the empty-direct rejection")
        est = float(hits.sum()) / m
        expected = tau_conditional(scenario, x, h)
        details = {"n_selected": int(len(idx)), "n_conditioned": m,
                   "bin_w_x": wx, "bin_w_h": wh}
        target = f"tau|({x:g},{h:g})"
    else:
        keep = batch.index_k > 0
        xp = batch.x_plus[keep]
        hp = batch.h_plus[keep]
        tt = batch.tan_trans[keep]
        m = len(xp)
        l_len = xp * (1.0 + big_h / hp)
        L_len = xp + big_h / tt
        hits = np.zeros(m, dtype=bool)
        block = 100_000
        for lo in range(0, m, block):
            hi = min(m, lo + block)
            counts = rng.poisson(_NODE_WINDOW, hi - lo)
            starts = np.zeros(hi - lo + 1, dtype=np.int64)
            np.cumsum(counts, out=starts[1:])
            u = rng.uniform(0.0, 1.0, int(starts[-1])) * (_NODE_WINDOW / nu)
            seg = np.repeat(np.arange(hi - lo), counts)
            pos = l_len[lo:hi][seg] + u
            inside = pos < L_len[lo:hi][seg]
            hit = np.zeros(hi - lo, dtype=bool)
            np.logical_or.at(hit, seg, inside)
            hits[lo:hi] = hit
        est = float(hits.mean())
        expected = tau_unconditional(scenario)
        details = {"n_dropped": int(n - m)}
        target = "tau"
    se = math.sqrt(max(est * (1.0 - est), 1e-12) / m)
    z = (est - expected) / se
    p = _z_p(z)
    details.update({"z": z, "H": big_h, "nu": nu})
    return ValidationReport(
        target=target, kind="ztest", n=n, seed=seed, alpha=alpha,
        statistic=z, p_value=p, passed=p > alpha, mc_estimate=est,
        mc_stderr=se, expected=expected, details=details)


# ---------------------------------------------------------------------------
# reporting helpers


def majority_pass(reports) -> bool:
    """Two-of-three rule for repeated stochastic tests."""
    passes = sum(1 for r in reports if r.passed)
    return passes * 2 > len(reports)


def render_reports(reports) -> str:
    """Human-readable fixed-width summary table."""
    lines = [f"{'target':<28} {'kind':<6} {'n':>9} {'stat':>10} "
             f"{'p':>9} {'estimate':>12} {'expected':>12} verdict"]
    for r in reports:
        est = f"{r.mc_estimate:.5g}" if r.mc_estimate is not None else "-"
        exp = f"{r.expected:.5g}" if r.expected is not None else "-"
        lines.append(
            f"{r.target:<28} {r.kind:<6} {r.n:>9d} {r.statistic:>10.4g} "
            f"{r.p_value:>9.3g} {est:>12} {exp:>12} "
            f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)


def write_jsonl(reports, fh) -> None:
    for r in reports:
        fh.write(r.to_json() + "\n")


def run_battery(params: EnvParams, n: int = 20_000, seed: int = 0,
                alpha: float = DEFAULT_ALPHA,
                weibull_shape: float = 0.5) -> list[ValidationReport]:
    """Default validation battery used by the command-line tool.

    Angle laws for the four variants and one elevated observer, the
    joint blocker law, both surface modes, the blocker rank and both
    connectivity probabilities.  Validators that condition on a blocker
    bin get ten times the base sample count so the bins stay populated;
    the scenario for the connectivity checks puts the mean node spacing
    at the mean surface extension (H*nu = rho), mid-curve.
    """
    lam, mu = params.lam, params.mu
    wei = EnvParams(lam=lam, mu=mu, weibull_shape=weibull_shape)
    x0, h0 = 2.0 / lam, 2.0 / mu
    scenario = CoverageScenario(env=params, H=10.0 / mu,
                                nu=params.rho / (10.0 / mu))
    reports = [
        validate_angle(params, ModelKind.MM, n=n, seed=seed, alpha=alpha),
        validate_angle(params, ModelKind.MD, n=n, seed=seed, alpha=alpha),
        validate_angle(params, ModelKind.DM, n=n, seed=seed, alpha=alpha),
        validate_angle(wei, ModelKind.WEIBULL, n=n, seed=seed, alpha=alpha),
        validate_angle(params, ModelKind.MM, n=n, seed=seed, alpha=alpha,
                       observer_height=1.0 / mu),
        validate_joint(params, n=n, seed=seed, alpha=alpha),
        validate_ris(params, RisMode.TRANSMISSIVE, x0, h0, n=10 * n,
                     seed=seed, alpha=alpha),
        validate_ris(params, RisMode.REFLECTIVE, -x0, h0, n=n, seed=seed,
                     alpha=alpha),
        validate_blocking_index(params, x0, h0, n=10 * n, seed=seed,
                                alpha=alpha),
        validate_tau(scenario, n=n, seed=seed, alpha=alpha),
        validate_tau(scenario, n=10 * n, seed=seed, alpha=alpha,
                     conditional=True, x=x0, h=h0),
    ]
    return reports
