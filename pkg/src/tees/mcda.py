"""Min-max normalization and weighted-sum scoring of transition pathways."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, LengthMismatch, TooFewPathways

LOWER, HIGHER = "lower", "higher"


@dataclass(frozen=True)
class Criterion:
    name: str
    direction: str = LOWER  # which end is better

    def __post_init__(self):
        if self.direction not in (LOWER, HIGHER):
            raise ConfigError(f"criterion {self.name}: direction must be {LOWER!r} or {HIGHER!r}")


# Preference direction of every report column; only assistance, savings and
# reductions are better when larger.
DIRECTIONS = {
    "iuf": LOWER,
    "resource_adequacy_pct": LOWER,
    "infra_cost": LOWER,
    "retail_rate": LOWER,
    "cea_level": HIGHER,
    "subsidized_rate": LOWER,
    "annual_elec_cost_per_house": LOWER,
    "annual_heat_cost_per_house": LOWER,
    "total_energy_cost_per_house": LOWER,
    "saving_pct": HIGHER,
    "co2e_power_t": LOWER,
    "co2e_heating_t": LOWER,
    "co2e_total_t": LOWER,
    "co2e_reduction_pct": HIGHER,
    "pm25_ugm3": LOWER,
    "energy_burden_pct": LOWER,
    "burdened_share_pct": LOWER,
    "epi_pct": LOWER,
}

# one column per sub-criterion of the TEES hierarchy
DEFAULT_CRITERIA = tuple(Criterion(n, DIRECTIONS[n]) for n in (
    "iuf",
    "resource_adequacy_pct",
    "infra_cost",
    "retail_rate",
    "cea_level",
    "annual_elec_cost_per_house",
    "annual_heat_cost_per_house",
    "total_energy_cost_per_house",
    "co2e_total_t",
    "pm25_ugm3",
    "energy_burden_pct",
    "epi_pct",
))


@dataclass
class CriteriaMatrix:
    pathways: tuple
    criteria: tuple
    values: np.ndarray  # (pathways, criteria)
    weights: np.ndarray | None = None
    degenerate: tuple = ()  # criteria with no spread, set when normalized

    def __post_init__(self):
        self.pathways = tuple(self.pathways)
        self.criteria = tuple(c if isinstance(c, Criterion) else Criterion(*c) for c in self.criteria)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.pathways), len(self.criteria)):
            raise LengthMismatch(
                f"values shape {self.values.shape} != ({len(self.pathways)}, {len(self.criteria)})")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("criterion values must be finite")
        if self.weights is None:
            self.weights = np.ones(len(self.criteria))
        self.weights = _check_weights(self.weights, len(self.criteria))

    @property
    def names(self) -> tuple:
        return tuple(c.name for c in self.criteria)


def _check_weights(w, n) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise LengthMismatch(f"{w.size} weights for {n} criteria")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ConfigError("weights must be finite and non-negative")
    return w


def normalize(matrix: CriteriaMatrix) -> CriteriaMatrix:
    """Min-max scale each criterion so its best pathway maps to 1 and worst to 0.

    A criterion on which every pathway ties carries no information; it is
    set to 1 everywhere and listed in ``degenerate``.
    """
    if len(matrix.pathways) < 2:
        raise TooFewPathways("normalization needs at least two pathways")
    v = matrix.values
    out = np.empty_like(v)
    degenerate = []
    for j, c in enumerate(matrix.criteria):
        col = v[:, j]
        best, worst = (col.max(), col.min()) if c.direction == HIGHER else (col.min(), col.max())
        if best == worst:
            out[:, j] = 1.0
            degenerate.append(c.name)
        else:
            out[:, j] = np.abs((col - worst) / (best - worst))
    return CriteriaMatrix(matrix.pathways, matrix.criteria, out, matrix.weights.copy(), tuple(degenerate))


def score(normalized: CriteriaMatrix, weights=None) -> np.ndarray:
    """Weighted sum divided by the number of criteria, one score per pathway."""
    w = normalized.weights if weights is None else _check_weights(weights, len(normalized.criteria))
    return normalized.values @ w / len(normalized.criteria)


def ranking(scores, pathways) -> list:
    """Pathways best first; ties keep declaration order."""
    order = sorted(range(len(pathways)), key=lambda i: (-scores[i], i))
    return [pathways[i] for i in order]


@dataclass
class StabilityReport:
    base_ranking: list
    rankings: list = field(default_factory=list)
    top_changed: list = field(default_factory=list)
    order_changed: list = field(default_factory=list)

    @property
    def stable_top(self) -> bool:
        return not any(self.top_changed)

    @property
    def stable_order(self) -> bool:
        return not any(self.order_changed)


def rank_stability(matrix: CriteriaMatrix, weight_sets) -> StabilityReport:
    """Re-score under alternative weight vectors and compare rankings."""
    norm = normalize(matrix)
    base = ranking(score(norm), matrix.pathways)
    rep = StabilityReport(base)
    for w in weight_sets:
        if isinstance(w, dict):
            w = weights_from_mapping(w, matrix.criteria)
        r = ranking(score(norm, w), matrix.pathways)
        rep.rankings.append(r)
        rep.top_changed.append(r[0] != base[0])
        rep.order_changed.append(r != base)
    return rep


def matrix_from_reports(reports, criteria=DEFAULT_CRITERIA, weights=None) -> CriteriaMatrix:
    crit = tuple(c if isinstance(c, Criterion) else Criterion(c, DIRECTIONS.get(c, LOWER)) for c in criteria)
    values = [[float(getattr(r, c.name)) for c in crit] for r in reports]
    return CriteriaMatrix(tuple(r.pathway for r in reports), crit, np.array(values).reshape(len(reports), len(crit)),
                          weights)


def weights_from_mapping(mapping: dict, criteria) -> np.ndarray:
    names = [c.name for c in criteria]
    unknown = set(mapping) - set(names)
    if unknown:
        raise ConfigError(f"weights for unknown criteria: {sorted(unknown)}")
    return _check_weights([float(mapping.get(n, 1.0)) for n in names], len(names))


def load_weights(path, criteria=DEFAULT_CRITERIA) -> np.ndarray:
    """Read criterion weights from JSON ({name: w}) or CSV (criterion,weight); missing ones are 1."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            mapping = json.loads(path.read_text())
        else:
            with path.open(newline="") as fh:
                mapping = {row["criterion"]: float(row["weight"]) for row in csv.DictReader(fh)}
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read weights {path}: {exc}") from exc
    return weights_from_mapping(mapping, criteria)


def _fmt(x: float) -> str:
    out = f"{x:.6g}"
    return "0" if out == "-0" else out


def write_scores_csv(matrix: CriteriaMatrix, scores, path) -> None:
    order = ranking(scores, matrix.pathways)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pathway", "score", "rank"])
        for i, p in enumerate(matrix.pathways):
            w.writerow([p, _fmt(scores[i]), order.index(p) + 1])


def write_normalized_csv(normalized: CriteriaMatrix, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pathway"] + list(normalized.names))
        for i, p in enumerate(normalized.pathways):
            w.writerow([p] + [_fmt(x) for x in normalized.values[i]])
        w.writerow(["#direction"] + [c.direction for c in normalized.criteria])
        w.writerow(["#degenerate"] + ["1" if n in normalized.degenerate else "0" for n in normalized.names])


def read_matrix_csv(path, criteria=None) -> CriteriaMatrix:
    """Load a criteria table (one row per pathway) as a raw matrix.

    Columns not listed in ``criteria`` are ignored; by default the standard
    criterion set is used when present, else every numeric column.
    """
    with Path(path).open(newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if not r["pathway"].startswith("#")]
    if not rows:
        raise TooFewPathways(f"{path}: no pathway rows")
    cols = [c for c in rows[0] if c != "pathway"]
    if criteria is None:
        default = [c for c in DEFAULT_CRITERIA if c.name in cols]
        criteria = default if len(default) == len(DEFAULT_CRITERIA) else [
            Criterion(c, DIRECTIONS.get(c, LOWER)) for c in cols]
    crit = tuple(c if isinstance(c, Criterion) else Criterion(c, DIRECTIONS.get(c, LOWER)) for c in criteria)
    try:
        values = [[float(r[c.name]) for c in crit] for r in rows]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{path}: bad criteria table: {exc}") from exc
    return CriteriaMatrix(tuple(r["pathway"] for r in rows), crit, np.array(values))
