"""Command-line front end: figure data as CSV plus a JSON run manifest.

Every subcommand writes ``<name>.csv`` and ``<name>.manifest.json`` into
``--out``. Data files are deterministic given the flags; the manifest (written
last) records the command line, parameters, tolerances, SHA-256 of each data
file and the wall-clock duration.

Exit codes: 0 success, 1 verification failure, 2 invalid arguments.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, agnostic, bounds, dolinar, estimate, telegraph
from .agnostic import AgnosticConfig, agnostic_ode_solve, implicit_solution_residual, invert_implicit
from .bounds import (
    RicePrior,
    helstrom_error,
    helstrom_success,
    mec_optimal_error,
    mec_optimal_error_asymptotic,
    mec_optimal_error_with_prior,
    poisson_weights,
    sector_trace_norm_oracle,
)
from .dolinar import dolinar_ode_solve, dolinar_success, eande_success
from .estimate import EstimatorKind, SplitConfig, apriori_m, apriori_m_is_reported, rice_averaged_errors, split_success
from .telegraph import AgnosticRateModel, DolinarRateModel, McConfig, discretized_dolinar, simulate_receiver

DEFAULT_N = "1:128:16"
DEFAULT_ALPHA = "0.05:1.5:60"
DEFAULT_XC = "0.1:1.2:45"
ESTIMATORS = {"photon": EstimatorKind.PHOTON_COUNTING, "heterodyne": EstimatorKind.HETERODYNE}


class UsageError(ValueError):
    """Invalid command-line input; maps to exit status 2."""


@dataclass(frozen=True)
class SweepSpec:
    """A swept variable: either ``start:stop:points`` or an explicit comma list.

    Integer variables (``n``, ``m``) use log spacing for ranges and are
    rounded and de-duplicated.
    """

    variable: str
    values: tuple

    @classmethod
    def parse(cls, variable: str, text: str) -> "SweepSpec":
        integer = variable in ("n", "m")
        conv = int if integer else float
        try:
            if ":" in text:
                start, stop, points = text.split(":")
                start, stop, points = float(start), float(stop), int(points)
                if points < 2 or not start < stop:
                    raise UsageError(f"--{variable}: need points >= 2 and start < stop")
                if integer:
                    if start < 1:
                        raise UsageError(f"--{variable}: log-spaced range must start at >= 1")
                    vals = sorted({int(round(v)) for v in np.geomspace(start, stop, points)})
                else:
                    vals = [float(v) for v in np.linspace(start, stop, points)]
            else:
                vals = [conv(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            if isinstance(exc, UsageError):
                raise
            raise UsageError(f"--{variable}: cannot parse {text!r}") from exc
        if not vals:
            raise UsageError(f"--{variable}: empty sweep")
        if any(not math.isfinite(v) for v in vals):
            raise UsageError(f"--{variable}: values must be finite")
        return cls(variable, tuple(vals))


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12e}"


def _write_csv(path: Path, columns: list[str], rows: list[list], params: dict) -> None:
    header = "# " + ",".join(columns) + " | " + json.dumps(params, sort_keys=True)
    lines = [header] + [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _tolerances() -> dict:
    return {
        "poisson_tail": bounds.POISSON_TAIL,
        "poisson_floor": bounds.POISSON_FLOOR,
        "prior_photon_quadrature": bounds.PRIOR_QUAD_TOL,
        "implicit_residual": agnostic.IMPLICIT_TOL,
        "eande_quadrature": dolinar.EANDE_TOL,
        "photon_count_tail": estimate.PHOTON_TAIL,
        "heterodyne_quadrature": estimate.HETERODYNE_TOL,
        "rice_quadrature": estimate.PRIOR_TOL,
        "success_curve": estimate.CURVE_TOL,
        "mc_max_slice_probability": telegraph.MAX_SLICE_PROB,
    }


def _alphas(args, default: str) -> list[float]:
    if getattr(args, "alpha_sq", None):
        sq = SweepSpec.parse("alpha-sq", args.alpha_sq).values
        if any(v < 0 for v in sq):
            raise UsageError("--alpha-sq values must be >= 0")
        return [math.sqrt(v) for v in sq]
    vals = SweepSpec.parse("alpha", args.alpha or default).values
    if any(v < 0 for v in vals):
        raise UsageError("--alpha values must be >= 0 (the magnitude |alpha|)")
    return list(vals)


def _ns(args, default: str, minimum: int = 1) -> list[int]:
    vals = SweepSpec.parse("n", args.n or default).values
    if any(v < minimum for v in vals):
        raise UsageError(f"--n values must be >= {minimum}")
    return list(vals)


def _estimators(args) -> list[str]:
    return [args.estimator] if args.estimator else ["photon", "heterodyne"]


# ---------------------------------------------------------------- figures


def cmd_fig2(args) -> dict:
    alphas, ns = _alphas(args, "0.25,0.625"), _ns(args, DEFAULT_N)
    rows = []
    for a in alphas:
        a2 = a * a
        for n in ns:
            pe = 1.0 - agnostic_ode_solve(AgnosticConfig(n, a2), args.grid_steps).terminal
            rows.append([a, n, pe, mec_optimal_error(n, a2, paper_literal=args.paper_literal), helstrom_error(a2)])
    cols = ["alpha", "n", "Pe_agnostic", "Pe_opt_bound", "Pe_helstrom"]
    return {"columns": cols, "rows": rows, "params": {"alpha": alphas, "n": ns, "grid_steps": args.grid_steps}}


def cmd_fig3(args) -> dict:
    alphas, ns = _alphas(args, "0.25,0.625,1"), _ns(args, DEFAULT_N)
    rows = [[a, n, 1.0 - eande_success(a, n), helstrom_error(a * a)] for a in alphas for n in ns]
    cols = ["alpha", "n", "Pe_eande", "Pe_helstrom"]
    return {"columns": cols, "rows": rows, "params": {"alpha": alphas, "n": ns}}


def plateau_check(pc_by_m: np.ndarray, ms: list[int], n_total: int, width: float = 0.01) -> dict:
    """Interior maximum and a broad plateau of the alpha-averaged success over ``m``."""
    mean = pc_by_m.mean(axis=1)
    best = ms[int(np.argmax(mean))]
    plateau = [m for m, v in zip(ms, mean) if v >= mean.max() - width]
    ok = 1 < best < n_total - 1 and len(plateau) >= 3
    return {"best_m": best, "plateau_m": plateau, "passed": bool(ok)}


def cmd_fig4(args) -> dict:
    n = args.n_total
    if n < 3:
        raise UsageError("--n must be >= 3 for an m sweep")
    alphas = _alphas(args, DEFAULT_ALPHA)
    ms = list(SweepSpec.parse("m", args.m).values) if args.m else list(range(1, n))
    if any(not 0 <= m < n for m in ms):
        raise UsageError("--m values must satisfy 0 <= m < n")
    a2 = np.square(alphas)
    rows, checks = [], {}
    for name in _estimators(args):
        pc = np.array([split_success(a2, SplitConfig(n, m), ESTIMATORS[name], grid_steps=args.grid_steps) for m in ms])
        checks[name] = plateau_check(pc, ms, n)
        rows += [[name, a, m, pc[i, j]] for i, m in enumerate(ms) for j, a in enumerate(alphas)]
    cols = ["estimator", "alpha", "m", "Pc"]
    return {
        "columns": cols,
        "rows": rows,
        "params": {"n": n, "m": ms, "alpha": alphas, "grid_steps": args.grid_steps},
        "checks": checks,
    }


def _split_m(args, n: int) -> tuple[int, str]:
    if args.m is not None:
        m = int(args.m)
        if not 0 <= m < n:
            raise UsageError("--m must satisfy 0 <= m < n")
        return m, "user"
    return apriori_m(n), "reported" if apriori_m_is_reported(n) else "extrapolated round(sqrt(n))"


def cmd_fig5(args) -> dict:
    alphas, ns = _alphas(args, DEFAULT_ALPHA), _ns(args, "4,8", minimum=2)
    a2 = np.square(alphas)
    rows, m_source = [], {}
    for n in ns:
        m, m_source[n] = _split_m(args, n)
        split = SplitConfig(n, m)
        ph = 1.0 - split_success(a2, split, EstimatorKind.PHOTON_COUNTING, grid_steps=args.grid_steps)
        het = 1.0 - split_success(a2, split, EstimatorKind.HETERODYNE, grid_steps=args.grid_steps)
        for j, a in enumerate(alphas):
            rows.append([n, m, a, ph[j], het[j], 1.0 - eande_success(a, n), helstrom_error(a * a)])
    cols = ["n", "m", "alpha", "Pe_photon", "Pe_heterodyne", "Pe_misED", "Pe_helstrom"]
    params = {"n": ns, "alpha": alphas, "grid_steps": args.grid_steps, "m_source": m_source}
    return {"columns": cols, "rows": rows, "params": params}


def cmd_fig6(args) -> dict:
    xcs, ns = SweepSpec.parse("xc", args.xc or DEFAULT_XC).values, _ns(args, "4,8", minimum=2)
    if args.sigma <= 0 or any(x < 0 for x in xcs):
        raise UsageError("--sigma must be > 0 and --xc values >= 0")
    priors = [RicePrior(args.sigma, x) for x in xcs]
    rows, m_source = [], {}
    for n in ns:
        m, m_source[n] = _split_m(args, n)
        het = rice_averaged_errors(n, priors, EstimatorKind.HETERODYNE, m=m, grid_steps=args.grid_steps)
        ph = rice_averaged_errors(n, priors, EstimatorKind.PHOTON_COUNTING, m=m, grid_steps=args.grid_steps)
        for j, p in enumerate(priors):
            bound = mec_optimal_error_with_prior(n, p, paper_literal=args.paper_literal)
            rows.append([n, m, p.x_c, het[j], ph[j], bound])
    cols = ["n", "m", "x_c", "Pe_het", "Pe_phot", "Pe_opt_bound"]
    params = {"n": ns, "sigma": args.sigma, "x_c": list(xcs), "grid_steps": args.grid_steps, "m_source": m_source}
    return {"columns": cols, "rows": rows, "params": params}


def cmd_mc(args) -> dict:
    alpha = _alphas(args, "0.5")
    if len(alpha) != 1:
        raise UsageError("mc takes a single --alpha")
    a2 = alpha[0] ** 2
    cfg = McConfig(args.trials, args.slices, args.seed)
    if args.receiver == "dolinar":
        model, n = DolinarRateModel(a2), 0
        reference = dolinar_success(0.5, 0.5, a2)
    else:
        n = int(args.n or 8)
        if n < 1:
            raise UsageError("--n must be >= 1")
        model = AgnosticRateModel(a2, n)
        reference = agnostic_ode_solve(AgnosticConfig(n, a2), args.grid_steps).terminal
    res = simulate_receiver(model, cfg, workers=args.workers)
    z = (res.success_rate - reference) / res.std_error if res.std_error > 0 else 0.0
    cols = ["receiver", "alpha", "n", "trials", "slices", "success_rate", "std_error", "reference", "z_score"]
    row = [args.receiver, alpha[0], n, res.trials, res.slices, res.success_rate, res.std_error, reference, z]
    params = {"receiver": args.receiver, "alpha": alpha[0], "n": n, "trials": args.trials, "slices": args.slices, "seed": args.seed}
    return {"columns": cols, "rows": [row], "params": params, "checks": {"within_3_sigma": bool(abs(z) <= 3.0)}}


# ---------------------------------------------------------------- verify


def verification_checks(trials: int, seed: int) -> list[tuple[str, float, float, bool]]:
    """Oracle cross-checks as ``(name, observed, threshold, passed)``."""
    out = []

    def add(name, observed, threshold):
        out.append((name, float(observed), float(threshold), bool(observed <= threshold)))

    amps = (0.1, 0.25, 0.625, 1.0, 2.0)
    add("helstrom = dolinar closed form", max(abs(dolinar_success(.5, .5, a * a) - helstrom_success(.5, .5, a, -a)) for a in amps), 1e-12)
    add("dolinar ODE vs closed form", max(abs(dolinar_ode_solve(.5, a * a).terminal - dolinar_success(.5, .5, a * a)) for a in amps), 1e-6)

    worst = 0.0
    for n in (1, 2, 3, 5, 10):
        for a in (0.25, 0.625, 1.0):
            w = poisson_weights((n + 1) * a * a)
            norms = sector_trace_norm_oracle(n, a, min(len(w.weights) - 1, 60))
            rebuilt = 0.5 * (1.0 - 0.5 * math.fsum(norms))
            worst = max(worst, abs(rebuilt - mec_optimal_error(n, a * a)))
    add("sector trace norm vs series", worst, 1e-8)
    add("bound at n=1 vs closed form", max(abs(mec_optimal_error(1, a * a) - 0.5 * math.exp(-2 * a * a)) for a in (0.25, 0.625, 1.0)), 1e-12)
    add("bound at n=1e4 vs Helstrom", max(abs(mec_optimal_error(10_000, a * a) - helstrom_error(a * a)) for a in (0.25, 0.625, 1.0)), 1e-3)

    scaled = [n * n * abs(mec_optimal_error(n, 0.25) - mec_optimal_error_asymptotic(n, 0.25)) for n in (100, 200, 500, 1000)]
    add("asymptotic remainder growth n^2 (last/first)", scaled[-1] / scaled[0], 2.0)

    worst = 0.0
    for n in (1, 2, 4, 8, 16):
        for a in (0.1, 0.25, 0.5, 0.625, 1.0):
            sol = agnostic_ode_solve(AgnosticConfig(n, a * a))
            xi = sol.terminal - 0.5
            worst = max(worst, abs(implicit_solution_residual(xi, 1.0, a * a, n)), abs(invert_implicit(1.0, a * a, n) - xi))
    add("agnostic ODE / implicit / inversion", worst, 1e-6)

    for k_alpha in (0.25, 0.625):
        add(f"discretized chain K=1e4 |alpha|={k_alpha}", abs(discretized_dolinar(10_000, k_alpha) - helstrom_success(.5, .5, k_alpha, -k_alpha)), 1e-3)

    cfg = McConfig(trials, seed=seed)
    mc = simulate_receiver(DolinarRateModel(0.625**2), cfg)
    add("MC Dolinar |alpha|=0.625 (std errors)", abs(mc.success_rate - dolinar_success(.5, .5, 0.625**2)) / mc.std_error, 3.0)
    mc = simulate_receiver(AgnosticRateModel(0.25, 8), cfg)
    ref = agnostic_ode_solve(AgnosticConfig(8, 0.25)).terminal
    add("MC agnostic n=8 |alpha|=0.5 (std errors)", abs(mc.success_rate - ref) / mc.std_error, 3.0)
    return out


def cmd_verify(args) -> dict:
    checks = verification_checks(args.trials, args.seed)
    width = max(len(c[0]) for c in checks)
    for name, obs, thr, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {obs:.3e} <= {thr:.1e}")
    rows = [[name, obs, thr, "pass" if ok else "fail"] for name, obs, thr, ok in checks]
    return {
        "columns": ["check", "observed", "threshold", "status"],
        "rows": rows,
        "params": {"trials": args.trials, "seed": args.seed},
        "checks": {"all_passed": all(c[3] for c in checks)},
    }


# ---------------------------------------------------------------- plumbing


COMMANDS = {
    "fig2": (cmd_fig2, "agnostic receiver vs bound and Helstrom over n"),
    "fig3": (cmd_fig3, "estimate-and-discriminate error over n"),
    "fig4": (cmd_fig4, "split strategy success over (alpha, m)"),
    "fig5": (cmd_fig5, "split strategies vs miscalibrated E&D over alpha"),
    "fig6": (cmd_fig6, "Rice-prior averaged errors over the prior centre"),
    "mc": (cmd_mc, "Monte Carlo telegraph simulation vs ODE"),
    "verify": (cmd_verify, "run the oracle suite and print a pass/fail table"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agdolinar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", default="out", metavar="DIR", help="output directory (default: ./out)")
        p.add_argument("--format", choices=["csv"], default="csv")
        p.add_argument("--seed", type=int, default=12345)
        p.add_argument("--grid-steps", type=int, default=1000)
        if name in ("fig2", "fig3", "fig4", "fig5", "mc"):
            amp = p.add_mutually_exclusive_group()
            amp.add_argument("--alpha", help="|alpha| values: 'a,b,c' or 'start:stop:points'")
            amp.add_argument("--alpha-sq", help="|alpha|^2 values, same syntax")
        if name == "fig4":
            p.add_argument("--n", dest="n_total", type=int, default=15)
            p.add_argument("--m", help="m values (default 1..n-1)")
        elif name != "verify":
            p.add_argument("--n", help="n values: 'a,b,c' or log-spaced 'start:stop:points'")
        if name in ("fig4",):
            p.add_argument("--estimator", choices=sorted(ESTIMATORS))
        if name in ("fig5", "fig6"):
            p.add_argument("--m", type=int, help="override the a-priori split")
        if name in ("fig2", "fig6"):
            p.add_argument("--paper-literal", action="store_true", help="bound with the extra factor 1/2")
        if name == "fig6":
            p.add_argument("--sigma", type=float, default=0.1)
            p.add_argument("--xc", help="prior centres, same syntax as --alpha")
        if name in ("mc", "verify"):
            p.add_argument("--trials", type=int, default=1_000_000 if name == "mc" else 200_000)
            p.add_argument("--slices", type=int, default=20_000)
        if name == "mc":
            p.add_argument("--receiver", choices=["agnostic", "dolinar"], default="agnostic")
            p.add_argument("--workers", type=int, default=1)
    return parser


def _check_common(args) -> None:
    if args.grid_steps < 100:
        raise UsageError("--grid-steps must be >= 100")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if getattr(args, "trials", 1) < 1 or getattr(args, "slices", 1) < 1:
        raise UsageError("--trials and --slices must be positive")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    func = COMMANDS[args.command][0]
    try:
        _check_common(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = func(args)
    except (UsageError, ValueError) as exc:
        print(f"agdolinar {args.command}: error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = out / f"{args.command}.csv"
    _write_csv(data, result["columns"], result["rows"], result["params"])
    checks = result.get("checks", {})
    manifest = {
        "tool": "agdolinar",
        "version": __version__,
        "command": args.command,
        "command_line": ["agdolinar"] + argv,
        "parameters": {k: v for k, v in sorted(vars(args).items())},
        "derived": result["params"],
        "tolerances": _tolerances(),
        "checks": checks,
        "warnings": sorted({str(w.message) for w in caught}),
        "outputs": {data.name: {"sha256": _sha256(data), "rows": len(result["rows"])}},
        "duration_s": round(time.perf_counter() - start, 3),
    }
    (out / f"{args.command}.manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
    print(f"wrote {data} ({len(result['rows'])} rows)")

    failed = [k for k, v in checks.items() if (v is False) or (isinstance(v, dict) and v.get("passed") is False)]
    if args.command == "verify" and failed:
        return 1
    if failed:
        print(f"checks not met: {', '.join(failed)}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
