"""Command-line front end producing plot-ready tables.

Subcommands
-----------
angles    cdf/pdf of the blockage angle and its complement over an angle
          grid, for any city variant and observer height; ``--n`` adds an
          empirical Monte-Carlo CDF column.
means     mean blockage angle / visibility angle over a density-ratio grid.
joint     marginal density and CDF of the blocking building's height and
          distance.
ris       with ``--x/--height``: conditional enhanced-angle law past a
          blocker at (x, h); without: visibility gains versus density ratio.
coverage  aerial connectivity: ``--cases`` emits the three-case summary
          table, ``--H/--nu`` a single-scenario row, otherwise the
          connectivity curve versus the ratio of mean surface extension to
          mean node spacing.
threegpp  line-of-sight probability versus elevation for the three
          standardized urban density ratios.
validate  run the Monte-Carlo validation battery; JSONL reports on stdout
          (or ``--out``), a human summary on stderr.

All tables are long-format CSV (default) or JSON; numeric cells use
shortest round-trip float formatting so reruns are byte-identical.
Exit codes: 0 success, 1 failed validation under ``--strict``, 2 usage or
parameter error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analytic
from . import coverage as cov
from . import ris as ris_mod
from . import validate as val
from .errors import (DomainError, ParameterError, QuadratureError,
                     SampleSizeError, TruncationError)
from .montecarlo import sample_blockage
from .process import EnvParams, ModelKind
from .ris import RisMode

GRID_POINTS = 512

_SUMMARY_CASES = ((1, 0.012, 0.02), (2, 0.007, 0.02), (3, 0.001, 0.02))
_HAP_SCENARIO = (10_000.0, 5e-5)
_SAT_SCENARIO = (500_000.0, 2.3163e-6)
_THREEGPP_RHOS = (0.05, 0.35, 0.57)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config / argument plumbing


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


_CASTS = {
    "lam": float, "mu": float, "shape": float, "h": float, "x": float,
    "height": float, "H": float, "nu": float, "n": int, "seed": int,
    "alpha": float, "model": str, "ris": str, "format": str, "out": str,
    "rho_grid": str, "strict": _parse_bool, "cases": _parse_bool,
}
_ALIASES = {"lambda": "lam"}

_COMMON_KEYS = {"lam", "mu", "shape", "model", "h", "n", "seed", "format",
                "out", "strict"}
_ALLOWED_KEYS = {
    "angles": _COMMON_KEYS,
    "means": _COMMON_KEYS | {"rho_grid"},
    "joint": _COMMON_KEYS,
    "ris": _COMMON_KEYS | {"ris", "x", "height", "rho_grid"},
    "coverage": _COMMON_KEYS | {"H", "nu", "cases"},
    "threegpp": _COMMON_KEYS,
    "validate": _COMMON_KEYS | {"alpha"},
}


def load_config(path: str) -> dict:
    """Flat key=value file mirroring the long flags; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, "
                                 f"got {line!r}")
            key, _, text = line.partition("=")
            key = _ALIASES.get(key.strip(), key.strip())
            if key not in _CASTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CASTS[key](text.strip())
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for "
                                 f"{key!r}: {exc}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skyline",
        description="Sky-visibility statistics of a ground user in a "
                    "random city: blockage-angle laws, blocker geometry, "
                    "surface-enhanced visibility and aerial connectivity.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="FILE",
                       help="key=value config file mirroring the flags")
        p.add_argument("--lambda", dest="lam", type=float, metavar="F",
                       help="building density per unit length (default 1)")
        p.add_argument("--mu", type=float, metavar="F",
                       help="inverse mean building height (default 1)")
        p.add_argument("--shape", type=float, metavar="F",
                       help="Weibull height shape (default 1)")
        p.add_argument("--model", choices=[m.value for m in ModelKind],
                       help="city variant (default mm)")
        p.add_argument("--h", type=float, metavar="F",
                       help="observer height above ground (default 0)")
        p.add_argument("--n", type=int, metavar="INT",
                       help="Monte-Carlo sample count (0 = analytic only)")
        p.add_argument("--seed", type=int, metavar="INT",
                       help="Monte-Carlo seed (default 0)")
        p.add_argument("--format", choices=["csv", "json"],
                       help="output format (default csv)")
        p.add_argument("--out", metavar="PATH",
                       help="output file (default stdout)")
        p.add_argument("--strict", action="store_true", default=None,
                       help="exit 1 if any validation check fails")

    p = sub.add_parser("angles", help="blockage-angle cdf/pdf tables")
    common(p)

    p = sub.add_parser("means", help="mean angles vs density ratio")
    common(p)
    p.add_argument("--rho-grid", dest="rho_grid", metavar="A:B:N",
                   help="density-ratio grid (default 0.05:2:40)")

    p = sub.add_parser("joint", help="blocker height/distance marginals")
    common(p)

    p = sub.add_parser("ris", help="surface-enhanced visibility laws/gains")
    common(p)
    p.add_argument("--ris", choices=[m.value for m in RisMode],
                   help="surface mode")
    p.add_argument("--x", type=float, metavar="F",
                   help="blocker distance (negative for reflective)")
    p.add_argument("--height", type=float, metavar="F",
                   help="blocker height")
    p.add_argument("--rho-grid", dest="rho_grid", metavar="A:B:N",
                   help="density-ratio grid for gains (default 0.1:2:5)")

    p = sub.add_parser("coverage", help="aerial connectivity tables")
    common(p)
    p.add_argument("--H", type=float, metavar="F",
                   help="aerial layer height above the blocker top")
    p.add_argument("--nu", type=float, metavar="F",
                   help="aerial node density per unit length")
    p.add_argument("--cases", action="store_true", default=None,
                   help="emit the three-case summary table")

    p = sub.add_parser("threegpp", help="LOS probability vs elevation")
    common(p)

    p = sub.add_parser("validate", help="run the MC validation battery")
    common(p)
    p.add_argument("--alpha", type=float, metavar="F",
                   help="test level (default 0.01)")
    return parser


_DEFAULTS = {"lam": 1.0, "mu": 1.0, "shape": 1.0, "model": "mm", "h": 0.0,
             "n": 0, "seed": 0, "format": "csv", "out": None,
             "strict": False, "rho_grid": None, "ris": None, "x": None,
             "height": None, "H": None, "nu": None, "cases": False,
             "alpha": 0.01}


def _merge(args: argparse.Namespace) -> argparse.Namespace:
    """Layer flag > config > built-in default onto the namespace."""
    if getattr(args, "config", None):
        allowed = _ALLOWED_KEYS[args.command]
        for key, value in load_config(args.config).items():
            if key not in allowed and key not in ("format", "out"):
                raise UsageError(f"config key {key!r} not accepted by "
                                 f"command {args.command!r}")
            if getattr(args, key, None) is None:
                setattr(args, key, value)
    for key, value in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.n < 0:
        raise UsageError(f"--n must be >= 0, got {args.n}")
    if args.seed < 0:
        raise UsageError(f"--seed must be >= 0, got {args.seed}")
    return args


def _parse_grid(text: str, what: str) -> np.ndarray:
    try:
        start, stop, count = text.split(":")
        grid = np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise UsageError(f"bad {what} grid {text!r}: {exc}") from None
    if len(grid) < 1 or grid[0] <= 0.0:
        raise UsageError(f"{what} grid must be positive, got {text!r}")
    return grid


# ---------------------------------------------------------------------------
# output


def _fmt_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _emit(columns, rows, args) -> None:
    if args.format == "json":
        payload = [{c: (float(v) if isinstance(v, (float, np.floating))
                        else int(v) if isinstance(v, (int, np.integer))
                        else str(v))
                    for c, v in zip(columns, row)} for row in rows]
        text = json.dumps(payload) + "\n"
    else:
        lines = [",".join(columns)]
        lines += [",".join(_fmt_cell(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _angle_grid() -> np.ndarray:
    return np.linspace(0.0, math.pi / 2 - 1e-6, GRID_POINTS)


def _params(args) -> EnvParams:
    return EnvParams(lam=args.lam, mu=args.mu, weibull_shape=args.shape)


# ---------------------------------------------------------------------------
# commands


def cmd_angles(args) -> int:
    params = _params(args)
    model = ModelKind.parse(args.model)
    dist = analytic.angle_distribution(params, model,
                                       observer_height=args.h)
    phi = _angle_grid()
    columns = ["phi", "cdf_theta", "pdf_theta", "cdf_psi", "pdf_psi"]
    cdf_t = [dist.cdf(v) for v in phi]
    pdf_t = [dist.pdf(v) for v in phi]
    cdf_p = [1.0 - dist.cdf(math.pi / 2 - v) for v in phi]
    pdf_p = [dist.pdf(math.pi / 2 - v) for v in phi]
    rows = list(zip(phi, cdf_t, pdf_t, cdf_p, pdf_p))
    if args.n > 0:
        batch = sample_blockage(params, model, n=args.n, seed=args.seed,
                                observer_height=args.h)
        tans = np.sort(batch.tan_theta)
        emp = np.searchsorted(tans, np.tan(phi), side="right") / args.n
        columns.append("emp_cdf_theta")
        rows = [row + (e,) for row, e in zip(rows, emp)]
    _emit(columns, rows, args)
    return 0


def cmd_means(args) -> int:
    model = ModelKind.parse(args.model)
    grid = _parse_grid(args.rho_grid or "0.05:2:40", "density-ratio")
    rows = []
    for rho in grid:
        params = EnvParams(lam=rho * args.mu, mu=args.mu,
                           weibull_shape=args.shape)
        mt = analytic.mean_theta(params, model, observer_height=args.h)
        rows.append((float(rho), mt, math.pi / 2 - mt))
    _emit(["rho", "mean_theta", "mean_psi"], rows, args)
    return 0


def cmd_joint(args) -> int:
    params = _params(args)
    rows = []
    h_grid = np.linspace(0.0, 12.0 / params.mu, GRID_POINTS)
    for h in h_grid:
        mh = params.mu * h
        rows.append(("height", float(h), analytic.marginal_h(params, h),
                     1.0 - (1.0 + mh) * math.exp(-mh)))
    x_grid = np.linspace(0.0, 30.0 / params.lam, GRID_POINTS + 1)[1:]
    for x in x_grid:
        rows.append(("location", float(x), analytic.marginal_x(params, x),
                     analytic.marginal_x_cdf(params, x)))
    _emit(["variable", "value", "pdf", "cdf"], rows, args)
    return 0


def cmd_ris(args) -> int:
    params = _params(args)
    if args.x is not None or args.height is not None:
        if args.ris is None or args.x is None or args.height is None:
            raise UsageError("conditional law needs --ris, --x and --height")
        mode = RisMode.parse(args.ris)
        if mode is RisMode.TRANSMISSIVE:
            dist = ris_mod.trans_angle_distribution(params, args.x,
                                                    args.height)
        else:
            dist = ris_mod.refl_angle_distribution(params, args.x,
                                                   args.height)
        lo, hi = dist.support
        phi = np.linspace(lo, hi, GRID_POINTS + 1)[1:]
        rows = [(float(v), dist.cdf(float(v)), dist.pdf(float(v)))
                for v in phi]
        _emit(["phi", "cdf", "pdf"], rows, args)
        print(f"mean_angle = {dist.mean()!r}", file=sys.stderr)
        return 0
    grid = _parse_grid(args.rho_grid or "0.1:2:5", "density-ratio")
    columns = ["rho", "gamma1_trans", "gamma1_refl"]
    if args.n > 0:
        columns += ["gamma1_trans_mc", "gamma1_trans_mc_stderr",
                    "gamma2_trans_mc", "gamma1_refl_mc",
                    "gamma1_refl_mc_stderr", "gamma2_refl_mc"]
    rows = []
    for rho in grid:
        p = EnvParams(lam=rho * args.mu, mu=args.mu)
        gt = ris_mod.angular_gains(p, RisMode.TRANSMISSIVE)
        gr = ris_mod.angular_gains(p, RisMode.REFLECTIVE)
        row = [float(rho), gt.gamma_mean, gr.gamma_mean]
        if args.n > 0:
            mt = ris_mod.angular_gains(p, RisMode.TRANSMISSIVE, method="mc",
                                       n=args.n, seed=args.seed)
            mr = ris_mod.angular_gains(p, RisMode.REFLECTIVE, method="mc",
                                       n=args.n, seed=args.seed)
            row += [mt.gamma_mean, mt.gamma_mean_stderr, mt.gamma_ratio,
                    mr.gamma_mean, mr.gamma_mean_stderr, mr.gamma_ratio]
        rows.append(tuple(row))
    _emit(columns, rows, args)
    return 0


def cmd_coverage(args) -> int:
    params = EnvParams(lam=args.lam, mu=args.mu)
    if args.cases:
        columns = ["case", "lam", "mu", "rho", "E_theta", "E_theta_T",
                   "E_theta_R", "E_l_HAP", "E_l_sat", "tau_HAP", "tau_sat"]
        rows = []
        for case, lam, mu in _SUMMARY_CASES:
            p = EnvParams(lam=lam, mu=mu)
            hap = cov.CoverageScenario(env=p, H=_HAP_SCENARIO[0],
                                       nu=_HAP_SCENARIO[1])
            sat = cov.CoverageScenario(env=p, H=_SAT_SCENARIO[0],
                                       nu=_SAT_SCENARIO[1])
            rows.append((case, lam, mu, p.rho,
                         analytic.mean_theta(p),
                         ris_mod.deconditioned_mean_angle(
                             p, RisMode.TRANSMISSIVE),
                         ris_mod.deconditioned_mean_angle(
                             p, RisMode.REFLECTIVE),
                         cov.mean_l(hap), cov.mean_l(sat),
                         cov.tau_unconditional(hap),
                         cov.tau_unconditional(sat)))
        _emit(columns, rows, args)
        return 0
    if args.H is not None and args.nu is not None:
        scenario = cov.CoverageScenario(env=params, H=args.H, nu=args.nu)
        row = (args.H, args.nu, params.rho, args.H * args.nu,
               cov.mean_l(scenario), cov.mean_L(scenario),
               cov.tau_unconditional(scenario))
        _emit(["H", "nu", "rho", "H_nu", "E_l", "E_L", "tau"], [row], args)
        return 0
    if args.H is not None or args.nu is not None:
        raise UsageError("give both --H and --nu, or neither for the curve")
    ratios = np.geomspace(1e-2, 1e2, GRID_POINTS)
    rows = []
    for r in ratios:
        scenario = cov.CoverageScenario(env=params, H=1.0,
                                        nu=r * params.rho)
        rows.append((float(r), cov.tau_unconditional(scenario)))
    _emit(["Hnu_over_rho", "tau"], rows, args)
    return 0


def cmd_threegpp(args) -> int:
    zeta_deg = np.linspace(90.0 / GRID_POINTS, 90.0, GRID_POINTS)
    rows = []
    for rho in _THREEGPP_RHOS:
        p = EnvParams(lam=rho, mu=1.0)
        for zd in zeta_deg:
            rows.append((rho, float(zd),
                         analytic.los_probability(p, args.h,
                                                  math.radians(zd))))
    _emit(["rho", "zeta_deg", "p_los"], rows, args)
    return 0


def cmd_validate(args) -> int:
    params = _params(args)
    n = args.n if args.n > 0 else 20_000
    reports = val.run_battery(params, n=n, seed=args.seed, alpha=args.alpha,
                              weibull_shape=args.shape
                              if args.shape != 1.0 else 0.5)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            val.write_jsonl(reports, fh)
    else:
        val.write_jsonl(reports, sys.stdout)
    print(val.render_reports(reports), file=sys.stderr)
    failures = [r.target for r in reports if not r.passed]
    if failures and args.strict:
        print(f"skyline: {len(failures)} validation failure(s): "
              + ", ".join(failures), file=sys.stderr)
        return 1
    return 0


_COMMANDS = {
    "angles": cmd_angles,
    "means": cmd_means,
    "joint": cmd_joint,
    "ris": cmd_ris,
    "coverage": cmd_coverage,
    "threegpp": cmd_threegpp,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge(args)
        return _COMMANDS[args.command](args)
    except (UsageError, ParameterError, DomainError) as exc:
        print(f"skyline: error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, TruncationError, SampleSizeError) as exc:
        print(f"skyline: numeric failure in {args.command!r}: {exc}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
