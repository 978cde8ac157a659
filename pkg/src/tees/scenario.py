"""Scenario assembly: topology, pathways, demand disaggregation and the JSON config."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .criteria import EconomicParams, EmissionParams, SocialParams
from .devices import (
    ENVELOPE_RANGES,
    BatteryModel,
    CopCurve,
    GeneratorModel,
    HouseThermalParams,
    random_house_params,
)
from .errors import ConfigError, MissingCounts, ZeroSectorConnections
from .timeseries import TimeSeries, load_timeseries, parse_timestamp, resample

SECTORS = ("residential", "community", "commercial")


@dataclass(frozen=True)
class Transformer:
    id: str
    rated_kva: float
    kind: str = "LV"  # LV | MV
    phase_count: int = 1
    parent: str | None = None  # MV transformer feeding this one
    phase: str | None = None  # a | b | c on the parent bank
    connections: dict | None = None  # sector -> service connection count

    def __post_init__(self):
        if not self.rated_kva > 0:
            raise ConfigError(f"transformer {self.id}: rated_kva must be positive")
        if self.kind not in ("LV", "MV"):
            raise ConfigError(f"transformer {self.id}: kind must be LV or MV")


@dataclass(frozen=True)
class House:
    id: str
    transformer_id: str


@dataclass(frozen=True)
class Topology:
    transformers: tuple
    houses: tuple
    sector_shares: dict = field(default_factory=lambda: {"residential": 1.0, "community": 0.0, "commercial": 0.0})

    def __post_init__(self):
        ids = [t.id for t in self.transformers]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate transformer ids")
        known = set(ids)
        for h in self.houses:
            if h.transformer_id not in known:
                raise ConfigError(f"house {h.id} references unknown transformer {h.transformer_id}")
        for t in self.transformers:
            if t.parent is not None and t.parent not in known:
                raise ConfigError(f"transformer {t.id} has unknown parent {t.parent}")
        total = sum(self.sector_shares.get(s, 0.0) for s in SECTORS)
        if abs(total - 1.0) > 1e-9 or any(v < 0 for v in self.sector_shares.values()):
            raise ConfigError(f"sector shares must be non-negative and sum to 1, got {total}")

    @property
    def lv(self) -> list[Transformer]:
        return [t for t in self.transformers if t.kind == "LV"]

    @property
    def mv(self) -> list[Transformer]:
        return [t for t in self.transformers if t.kind == "MV"]

    def by_id(self, tid: str) -> Transformer:
        for t in self.transformers:
            if t.id == tid:
                return t
        raise KeyError(tid)

    def houses_on(self, tid: str) -> list[House]:
        return [h for h in self.houses if h.transformer_id == tid]


@dataclass(frozen=True)
class PathwayConfig:
    name: str
    hp_size_mbtu: float = 0.0
    hp_rated_power_kw: float = 0.0
    hp_min_power_kw: float = 0.0
    hp_cutoff_temp_c: float = -20.0
    coordination_gamma: float = 0.0  # $/kVA on transformer loading above rating
    pv_scale: float = 1.0
    comfort_min_c: float = 18.0
    comfort_max_c: float = 22.0
    battery: str | None = "default"
    generator: str = "default"
    label: str = ""

    def __post_init__(self):
        if self.pv_scale < 0:
            raise ConfigError(f"{self.name}: pv_scale must be non-negative")
        if self.coordination_gamma < 0:
            raise ConfigError(f"{self.name}: gamma must be non-negative")
        if not self.comfort_min_c < self.comfort_max_c:
            raise ConfigError(f"{self.name}: comfort band must have min < max")
        if self.hp_rated_power_kw < 0 or self.hp_min_power_kw < 0:
            raise ConfigError(f"{self.name}: heat pump power must be non-negative")
        if self.hp_min_power_kw > self.hp_rated_power_kw:
            raise ConfigError(f"{self.name}: hp_min_power_kw above rated power")

    @property
    def has_heat_pumps(self) -> bool:
        return self.hp_size_mbtu > 0 and self.hp_rated_power_kw > 0


def disaggregate_demand(total: TimeSeries, topo: Topology) -> dict[str, TimeSeries]:
    """Split a community demand series over the LV transformers.

    Each sector receives its share of the total, then each transformer gets
    that sector pool in proportion to its service connections in the sector.
    """
    shares = {s: topo.sector_shares.get(s, 0.0) for s in SECTORS}
    lv = topo.lv
    counts = {}
    for t in lv:
        if t.connections is None:
            raise MissingCounts(f"transformer {t.id} has no connection counts")
        for s in SECTORS:
            if shares[s] > 0 and s not in t.connections:
                raise MissingCounts(f"transformer {t.id} lacks a {s} connection count")
        counts[t.id] = {s: float(t.connections.get(s, 0)) for s in SECTORS}
    sector_totals = {s: sum(c[s] for c in counts.values()) for s in SECTORS}
    for s in SECTORS:
        if shares[s] > 0 and sector_totals[s] <= 0:
            raise ZeroSectorConnections(f"sector {s} has share {shares[s]} but no connections")
    out = {}
    for t in lv:
        frac = sum(
            shares[s] * counts[t.id][s] / sector_totals[s]
            for s in SECTORS if shares[s] > 0
        )
        out[t.id] = total.with_values(total.values * frac)
    return out


@dataclass
class Scenario:
    name: str
    demand: TimeSeries
    pv: TimeSeries
    t_out: TimeSeries
    topology: Topology
    generators: dict
    batteries: dict
    cop_curve: CopCurve
    house_params: dict  # house id -> HouseThermalParams
    economics: EconomicParams
    emissions: EmissionParams
    social: SocialParams
    pathways: dict  # name -> PathwayConfig
    baseline: str
    seed: int = 0
    source: str = ""

    @property
    def dt_minutes(self) -> float:
        return self.demand.dt_minutes

    @property
    def window(self) -> tuple[datetime, datetime]:
        """Largest span of whole days covered by all three series."""
        start = max(self.demand.start, self.pv.start, self.t_out.start)
        end = min(self.demand.end, self.pv.end, self.t_out.end)
        days = int((end - start) / timedelta(days=1))
        return start, start + timedelta(days=days)

    def pathway(self, name: str) -> PathwayConfig:
        try:
            return self.pathways[name]
        except KeyError:
            raise ConfigError(f"unknown pathway {name!r}; known: {sorted(self.pathways)}") from None

    def with_dt(self, dt_minutes: float) -> "Scenario":
        if dt_minutes == self.dt_minutes:
            return self
        return replace(
            self,
            demand=resample(self.demand, dt_minutes),
            pv=resample(self.pv, dt_minutes),
            t_out=resample(self.t_out, dt_minutes),
        )

    def with_pathway(self, pathway: PathwayConfig) -> "Scenario":
        pathways = dict(self.pathways)
        pathways[pathway.name] = pathway
        return replace(self, pathways=pathways)


# --- config file -----------------------------------------------------------

def _series(spec, base: Path, unit: str) -> TimeSeries:
    if isinstance(spec, str):
        spec = {"path": spec}
    return load_timeseries(base / spec["path"], unit=unit)


def _topology(cfg) -> Topology:
    txs = tuple(
        Transformer(
            id=str(t["id"]),
            rated_kva=float(t["rated_kva"]),
            kind=t.get("kind", "LV"),
            phase_count=int(t.get("phase_count", 1)),
            parent=t.get("parent"),
            phase=t.get("phase"),
            connections=t.get("connections"),
        )
        for t in cfg["transformers"]
    )
    if "houses" in cfg:
        houses = tuple(House(str(h["id"]), str(h["transformer_id"])) for h in cfg["houses"])
    else:
        # one house per residential connection
        houses = tuple(
            House(f"{t.id}-h{i + 1}", t.id)
            for t in txs if t.kind == "LV" and t.connections
            for i in range(int(t.connections.get("residential", 0)))
        )
    shares = cfg.get("sector_shares", {"residential": 1.0, "community": 0.0, "commercial": 0.0})
    return Topology(txs, houses, {s: float(shares.get(s, 0.0)) for s in SECTORS})


def _house_params(cfg, topo: Topology, seed: int) -> dict:
    explicit = {p["id"]: p for p in cfg.get("explicit", [])}
    q_oil_max = float(cfg.get("q_oil_max_kw", 12.0))
    ranges = {k: tuple(v) for k, v in cfg.get("ranges", ENVELOPE_RANGES).items()}
    rng = np.random.default_rng(seed)
    drawn = random_house_params(rng, len(topo.houses), ranges, q_oil_max)
    out = {}
    for h, params in zip(topo.houses, drawn):
        if h.id in explicit:
            e = explicit[h.id]
            params = HouseThermalParams(e["c_a"], e["c_m"], e["u_a"], e["h_m"], e.get("q_oil_max", q_oil_max))
        out[h.id] = params
    return out


def load_scenario(path, seed: int = 0) -> Scenario:
    """Read a scenario JSON file; series paths are relative to the file."""
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    base = path.parent
    try:
        ts = cfg["timeseries"]
        demand = _series(ts["demand"], base, "kW")
        pv = _series(ts["pv"], base, "kW")
        t_out = _series(ts["outdoor_temp"], base, "degC")
        topo = _topology(cfg["topology"])
        generators = {k: GeneratorModel(**v) for k, v in cfg["generators"].items()}
        batteries = {k: BatteryModel(**v) for k, v in cfg.get("batteries", {}).items()}
        cop = CopCurve.from_points(cfg["cop_curve"])
        econ = EconomicParams.from_dict(cfg["economics"])
        emis = EmissionParams.from_dict(cfg["emissions"])
        social = SocialParams.from_dict(cfg["social"])
        pathways = {p["name"]: PathwayConfig(**p) for p in cfg["pathways"]}
    except KeyError as exc:
        raise ConfigError(f"{path}: missing key {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not (demand.dt_minutes == pv.dt_minutes == t_out.dt_minutes):
        raise ConfigError("demand, PV and temperature series must share a step")
    baseline = cfg.get("baseline", next(iter(pathways)))
    if baseline not in pathways:
        raise ConfigError(f"baseline pathway {baseline!r} not defined")
    for p in pathways.values():
        if p.generator not in generators:
            raise ConfigError(f"{p.name}: unknown generator {p.generator!r}")
        if p.battery is not None and p.battery not in batteries:
            raise ConfigError(f"{p.name}: unknown battery {p.battery!r}")
    return Scenario(
        name=cfg.get("name", path.stem),
        demand=demand,
        pv=pv,
        t_out=t_out,
        topology=topo,
        generators=generators,
        batteries=batteries,
        cop_curve=cop,
        house_params=_house_params(cfg.get("house_params", {}), topo, seed),
        economics=econ,
        emissions=emis,
        social=social,
        pathways=pathways,
        baseline=baseline,
        seed=seed,
        source=str(path),
    )


def parse_window(text_from: str | None, text_to: str | None, scenario: Scenario):
    start, end = scenario.window
    if text_from:
        start = parse_timestamp(text_from)
    if text_to:
        end = parse_timestamp(text_to)
    return start, end
