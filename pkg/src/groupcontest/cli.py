"""Command-line front end.

    groupcontest equilibrium --scenario s.json --out results/
    groupcontest design      --scenario s.json
    groupcontest compare     --scenario s.json
    groupcontest verify      --scenario s.json --samples 100000 --seed 7

Exit codes: 0 success, 2 bad scenario or arguments, 3 solver failure,
4 a verification check failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import design, verify
from .equilibrium import DEFAULT_GRID, Group, expected_group_output, solve_equilibrium
from .errors import ContestError, ScenarioError
from .scenario import Scenario, bundled_path, load_scenario

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.17g}"


def write_table(path: Path, header, rows, fmt: str):
    """Write rows as CSV with 17 significant digits, or as a JSON list of records."""
    if fmt == "json":
        records = [{h: (float(v) if not isinstance(v, (int, np.integer)) else int(v))
                    for h, v in zip(header, row)} for row in rows]
        path.write_text(json.dumps(records, indent=1))
        return
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _emit(summary: dict, out: Path, name: str):
    out.joinpath(name).write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))


def cmd_equilibrium(sc: Scenario, args) -> int:
    spec = sc.contest()
    grid = args.grid_size or sc.grid_size or DEFAULT_GRID
    notes = []
    if spec.regime == "none":
        msg = "all prizes are zero: every agent produces nothing"
        warnings.warn(msg)
        notes.append(msg)
    eq = solve_equilibrium(spec, grid)
    v = np.linspace(0.0, 1.0, grid + 1)
    rows = zip(v, eq.alpha(v), eq.beta(v))
    ext = "json" if args.format == "json" else "csv"
    write_table(args.out / f"{sc.name}_strategies.{ext}", ["ability", "alpha", "beta"], rows, args.format)
    summary = {
        "scenario": sc.name,
        "regime": eq.regime,
        "expected_target_output": eq.expected_target_output(),
        "expected_nontarget_output": eq.expected_nontarget_output(),
        "target_group_total": eq.target_group_total(),
        "warnings": notes,
    }
    if eq.regime == "mixed":
        summary["k_at_1"] = eq.k_at_1
    _emit(summary, args.out, f"{sc.name}_summary.json")
    return EXIT_OK


def cmd_design(sc: Scenario, args) -> int:
    pop = sc.population
    if sc.regime == "group":
        res = design.optimal_group_design(pop, sc.n)
    else:
        res = design.optimal_general_design(pop, sc.n)
    ext = "json" if args.format == "json" else "csv"
    write_table(args.out / f"{sc.name}_per_j.{ext}", ["j", "objective"],
                enumerate(res.per_j_objective, 1), args.format)
    _emit(res.to_dict(), args.out, f"{sc.name}_design.json")
    return EXIT_OK


def cmd_compare(sc: Scenario, args) -> int:
    mus = sc.mu_grid if sc.mu_grid is not None else (np.arange(1, 100) / 100).tolist()
    cmp = design.compare_schemes(sc.n, mus, sc.F, sc.G)
    ext = "json" if args.format == "json" else "csv"
    write_table(args.out / f"{sc.name}_compare.{ext}", ["mu", "A", "B", "C"], cmp.rows(), args.format)
    _emit({"scenario": sc.name, "n": sc.n, "method": cmp.method, "crossing_mu": cmp.crossing},
          args.out, f"{sc.name}_compare_summary.json")
    return EXIT_OK


def verification_report(sc: Scenario, samples: int, seed: int, grid_size: int) -> dict:
    """Run the best-response, group-output and first-order-condition checks."""
    spec = sc.contest()
    eq = solve_equilibrium(spec, grid_size)
    alpha, beta = eq.alpha, eq.beta
    scale = sc.perturb_scale
    if scale is not None:
        alpha = alpha.scaled(scale)
        if eq.regime == "general":
            beta = beta.scaled(scale)
    strategies = (alpha, beta)
    checks = []

    groups = [Group.TARGET] + ([Group.NONTARGET] if not beta.is_zero else [])
    for g in groups:
        res = verify.best_response_check(spec, strategies, group=g, samples=samples, seed=seed)
        worst = max(res, key=lambda r: r.best_gain - 3 * r.gain_se)
        checks.append({
            "check": f"best_response_{g.value}",
            "passed": all(r.passed for r in res),
            "worst_ability": worst.ability,
            "worst_gain": worst.best_gain,
            "gain_se": worst.gain_se,
        })

    mean, se = verify.simulate_group_output(spec, strategies, samples, seed + 1)
    predicted = spec.mu * spec.n * expected_group_output(alpha, spec.population.target)
    checks.append({
        "check": "group_output",
        "passed": abs(mean - predicted) <= 3 * se + 1e-12,
        "mean": mean, "se": se, "predicted": predicted,
    })

    v = np.linspace(0.02, 0.98, 50)
    for g in groups:
        r = verify.foc_residual(spec, strategies, v, g)
        worst = float(np.nanmax(r)) if np.any(np.isfinite(r)) else float("nan")
        checks.append({"check": f"foc_{g.value}", "passed": bool(worst < 1e-4),
                       "max_residual": worst, "undefined_points": int(np.isnan(r).sum())})

    return {"scenario": sc.name, "regime": eq.regime, "samples": samples, "seed": seed,
            "passed": all(c["passed"] for c in checks), "checks": checks}


def cmd_verify(sc: Scenario, args) -> int:
    samples = args.samples or sc.samples or 100_000
    seed = args.seed if args.seed is not None else (sc.seed if sc.seed is not None else 0)
    grid = args.grid_size or sc.grid_size or DEFAULT_GRID
    report = verification_report(sc, samples, seed, grid)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['check']}", file=sys.stderr)
    _emit(report, args.out, f"{sc.name}_verify.json")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "design": cmd_design,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupcontest",
                                     description="Equilibria and prize design for two-group contests")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True,
                       help="scenario JSON file, or the name of a bundled scenario")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--grid-size", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists() or p.suffix == ".json":
        return p
    return bundled_path(path)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        sc = load_scenario(_resolve(args.scenario))
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](sc, args)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContestError as exc:
        print(f"solver error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
