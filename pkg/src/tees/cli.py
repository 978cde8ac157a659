"""Command-line entry point: run pathways, compare criteria tables, sweep parameters."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import criteria as crit
from . import mcda
from .dispatch import (
    rolling_solve,
    validate,
    write_dispatch_csv,
    write_house_csv,
    write_transformer_csv,
)
from .errors import ChunkError, TeesError, TooFewPathways
from .scenario import Scenario, load_scenario, parse_window
from .timeseries import format_timestamp

log = logging.getLogger("tees")

SENSITIVITY_PARAMETERS = ("cutoff_temp", "indoor_setpoint", "pv_scale")


@dataclass(frozen=True)
class RunManifest:
    scenario: str
    pathways: tuple
    window: tuple
    dt_minutes: float | None
    out: str
    weights: str | None = None
    seed: int = 0
    workers: int = 1
    chunk_days: int = 7
    detail: bool = False

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "pathways": list(self.pathways),
            "from": format_timestamp(self.window[0]),
            "to": format_timestamp(self.window[1]),
            "dt_minutes": self.dt_minutes,
            "seed": self.seed,
            "chunk_days": self.chunk_days,
            "weights": self.weights,
        }


def _prepare(args) -> tuple[Scenario, RunManifest]:
    scenario = load_scenario(args.scenario, seed=args.seed)
    if args.dt:
        scenario = scenario.with_dt(args.dt)
    names = tuple(args.pathways.split(",")) if args.pathways else tuple(scenario.pathways)
    for n in names:
        scenario.pathway(n)
    window = parse_window(args.from_, args.to, scenario)
    manifest = RunManifest(
        scenario=str(args.scenario),
        pathways=names,
        window=window,
        dt_minutes=args.dt,
        out=str(args.out),
        weights=getattr(args, "weights", None),
        seed=args.seed,
        workers=args.workers,
        chunk_days=args.chunk_days,
        detail=getattr(args, "detail", False),
    )
    return scenario, manifest


def _solve_pathway(job):
    scenario, pathway, window, chunk_days = job
    t0 = time.perf_counter()
    solution = rolling_solve(scenario, pathway, window, chunk_days=chunk_days)
    return pathway.name, solution, time.perf_counter() - t0


def _solve_all(scenario: Scenario, pathways, window, chunk_days: int, workers: int) -> dict:
    jobs = [(scenario, p, window, chunk_days) for p in pathways]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_pathway, jobs))
    else:
        results = [_solve_pathway(j) for j in jobs]
    return {name: (sol, secs) for name, sol, secs in results}


def _assess_all(scenario: Scenario, solutions: dict, order) -> list[crit.CriteriaReport]:
    base_name = scenario.baseline
    base = crit.assess(solutions[base_name], scenario.pathway(base_name), scenario, as_baseline=True)
    reports = []
    for name in order:
        if name == base_name:
            reports.append(base)
        else:
            reports.append(crit.assess(solutions[name], scenario.pathway(name), scenario, baseline=base))
    return reports


def _write_error(out: Path, exc: Exception) -> None:
    out.mkdir(parents=True, exist_ok=True)
    record = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ChunkError):
        record["chunk"] = exc.chunk
        record["cause"] = type(exc.cause).__name__
    (out / "error.json").write_text(json.dumps(record, indent=2) + "\n")


def _write_solve_log(out: Path, solutions: dict) -> None:
    # wall-clock diagnostics live apart from the deterministic artifacts
    logdir = out / "logs"
    logdir.mkdir(parents=True, exist_ok=True)
    with (logdir / "solve_log.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pathway", "chunk", "start", "steps", "objective", "gap", "seconds"])
        for name, (sol, _) in solutions.items():
            for rec in sol.chunk_log:
                w.writerow([name, rec.index, format_timestamp(rec.start), rec.steps,
                            f"{rec.objective:.6g}", f"{rec.gap:.3g}", f"{rec.seconds:.3f}"])


def score_reports(reports, weights_path, out: Path | None):
    matrix = mcda.matrix_from_reports(reports)
    if weights_path:
        matrix.weights = mcda.load_weights(weights_path, matrix.criteria)
    norm = mcda.normalize(matrix)
    scores = mcda.score(norm)
    if out is not None:
        mcda.write_normalized_csv(norm, out / "normalized.csv")
        mcda.write_scores_csv(matrix, scores, out / "scores.csv")
    return norm, scores


def run(scenario: Scenario, manifest: RunManifest) -> list[crit.CriteriaReport]:
    out = Path(manifest.out)
    out.mkdir(parents=True, exist_ok=True)
    names = list(manifest.pathways)
    to_solve = names if scenario.baseline in names else [scenario.baseline] + names
    solutions = _solve_all(scenario, [scenario.pathway(n) for n in to_solve], manifest.window,
                           manifest.chunk_days, manifest.workers)
    for name in names:
        sol = solutions[name][0]
        write_dispatch_csv(sol, out / f"dispatch_{name}.csv")
        if manifest.detail:
            write_transformer_csv(sol, out / f"transformers_{name}.csv")
            write_house_csv(sol, out / f"houses_{name}.csv")
    reports = _assess_all(scenario, {k: v[0] for k, v in solutions.items()}, names)
    crit.write_reports_csv(reports, out / "criteria.csv")
    if len(reports) >= 2:
        score_reports(reports, manifest.weights, out)
    (out / "run_manifest.json").write_text(json.dumps(manifest.as_dict(), indent=2) + "\n")
    _write_solve_log(out, solutions)
    return reports


def compare(criteria_csv, weights_path=None, out: Path | None = None):
    matrix = mcda.read_matrix_csv(criteria_csv)
    if len(matrix.pathways) < 2:
        raise TooFewPathways("comparison needs at least two pathway rows")
    if weights_path:
        matrix.weights = mcda.load_weights(weights_path, matrix.criteria)
    norm = mcda.normalize(matrix)
    scores = mcda.score(norm)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        mcda.write_normalized_csv(norm, out / "normalized.csv")
        mcda.write_scores_csv(matrix, scores, out / "scores.csv")
    return norm, scores


def vary(pathway, parameter: str, value: float):
    if parameter == "cutoff_temp":
        return replace(pathway, hp_cutoff_temp_c=value)
    if parameter == "indoor_setpoint":
        width = pathway.comfort_max_c - pathway.comfort_min_c
        return replace(pathway, comfort_min_c=value, comfort_max_c=value + width)
    if parameter == "pv_scale":
        return replace(pathway, pv_scale=value)
    raise ValueError(f"unknown sensitivity parameter {parameter!r}")


def _sensitivity_point(job):
    scenario, pathway, window, chunk_days, base = job
    try:
        sol = rolling_solve(scenario, pathway, window, chunk_days=chunk_days)
        rep = crit.assess(sol, pathway, scenario, baseline=base)
        return rep.saving_pct, rep.co2e_reduction_pct, "ok"
    except TeesError as exc:
        return float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"


def sensitivity(scenario: Scenario, manifest: RunManifest, parameter: str, grid) -> list[tuple]:
    """Savings and emission reductions of each non-baseline pathway over a parameter grid."""
    if parameter not in SENSITIVITY_PARAMETERS:
        raise ValueError(f"parameter must be one of {SENSITIVITY_PARAMETERS}")
    if not grid:
        raise ValueError("sensitivity grid is empty")
    base_p = scenario.pathway(scenario.baseline)
    base_sol = rolling_solve(scenario, base_p, manifest.window, chunk_days=manifest.chunk_days)
    base = crit.assess(base_sol, base_p, scenario, as_baseline=True)
    names = [n for n in manifest.pathways if n != scenario.baseline]
    jobs, keys = [], []
    for value in grid:
        for n in names:
            jobs.append((scenario, vary(scenario.pathway(n), parameter, value), manifest.window,
                         manifest.chunk_days, base))
            keys.append((value, n))
    if manifest.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=manifest.workers) as pool:
            results = list(pool.map(_sensitivity_point, jobs))
    else:
        results = [_sensitivity_point(j) for j in jobs]
    rows = [(parameter, v, n, s, r, status) for (v, n), (s, r, status) in zip(keys, results)]
    out = Path(manifest.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / f"sensitivity_{parameter}.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", "pathway", "cost_saving_pct", "co2e_reduction_pct", "status"])
        for p, v, n, s, r, status in rows:
            w.writerow([p, f"{v:.6g}", n, f"{s:.6g}", f"{r:.6g}", status])
    return rows


def check(scenario: Scenario, manifest: RunManifest) -> list[str]:
    """Solve every chunk of every pathway and re-check all constraints."""
    problems = []
    for name in manifest.pathways:
        _, chunks = rolling_solve(scenario, scenario.pathway(name), manifest.window,
                                  chunk_days=manifest.chunk_days, return_chunks=True)
        for i, (problem, sol) in enumerate(chunks):
            for v in validate(sol, problem):
                problems.append(f"{name} chunk {i}: {v}")
    return problems


# --- argument parsing ---------------------------------------------------------------

def _common(p: argparse.ArgumentParser, out_required=True):
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--pathways", help="comma-separated pathway names (default: all)")
    p.add_argument("--from", dest="from_", help="window start, ISO 8601 (default: series start)")
    p.add_argument("--to", help="window end, exclusive (default: last whole day)")
    p.add_argument("--dt", type=float, help="resample to this step in minutes")
    p.add_argument("--out", required=out_required, default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for house thermal parameters")
    p.add_argument("--workers", type=int, default=1, help="parallel solver processes")
    p.add_argument("--chunk-days", type=int, default=7, help="days per dispatch chunk")


def _grid(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tees", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="dispatch, assess and score pathways")
    _common(p)
    p.add_argument("--weights", help="criterion weights (JSON or CSV)")
    p.add_argument("--detail", action="store_true", help="also write per-transformer and per-house CSVs")

    p = sub.add_parser("compare", help="score an existing criteria table")
    p.add_argument("--criteria", required=True, help="criteria CSV, one row per pathway")
    p.add_argument("--weights", help="criterion weights (JSON or CSV)")
    p.add_argument("--out", help="directory for normalized.csv and scores.csv")

    p = sub.add_parser("sensitivity", help="sweep one parameter and record savings")
    _common(p)
    p.add_argument("--parameter", required=True, choices=SENSITIVITY_PARAMETERS)
    p.add_argument("--grid", required=True, type=_grid, help="comma-separated values")

    p = sub.add_parser("validate", help="solve and re-check every constraint")
    _common(p, out_required=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(getattr(args, "out", None) or ".")
    try:
        if args.command == "compare":
            norm, scores = compare(args.criteria, args.weights, Path(args.out) if args.out else None)
            for name in mcda.ranking(scores, norm.pathways):
                print(f"{name}\t{scores[norm.pathways.index(name)]:.4f}")
            if norm.degenerate:
                print("degenerate criteria (set to 1):", ", ".join(norm.degenerate))
            return 0
        scenario, manifest = _prepare(args)
        if args.command == "run":
            reports = run(scenario, manifest)
            for r in reports:
                print(f"{r.pathway}\tcost/house {r.total_energy_cost_per_house:.0f}\t"
                      f"saving {r.saving_pct:.1f}%\tCO2e {r.co2e_total_t:.1f} t")
            return 0
        if args.command == "sensitivity":
            rows = sensitivity(scenario, manifest, args.parameter, args.grid)
            failed = [r for r in rows if r[5] != "ok"]
            for r in failed:
                print(f"{r[2]} at {r[1]:g}: {r[5]}", file=sys.stderr)
            return 1 if failed else 0
        if args.command == "validate":
            issues = check(scenario, manifest)
            for line in issues:
                print(line)
            print("feasible" if not issues else f"{len(issues)} violations")
            return 1 if issues else 0
    except (TeesError, ValueError, OSError) as exc:
        _write_error(out, exc)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
