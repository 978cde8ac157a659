"""Techno-economic, environmental and social criteria of a dispatch run."""

from __future__ import annotations

import calendar
import csv
import math
from dataclasses import asdict, dataclass, field, fields
from datetime import timedelta
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .devices import BTU_PER_KWH, DIESEL_NO2_BTU_PER_GAL, STOVE_OIL_BTU_PER_GAL, oil_fuel_gallons
from .errors import ConfigError, MissingBaseline, PeakExceedsCatalog, UnknownSize, ZeroSales

if TYPE_CHECKING:
    from .dispatch import DispatchSolution
    from .scenario import PathwayConfig, Scenario, Topology

HOURS_PER_YEAR = 8760.0

LV_CATALOG = ((25.0, 2500.0), (37.5, 3000.0), (50.0, 4000.0), (75.0, 6000.0), (100.0, 10000.0))
MV_CATALOG = ((112.5, 33226.0), (150.0, 36672.0), (225.0, 48259.0), (300.0, 52533.0), (500.0, 70905.0))


@dataclass(frozen=True)
class CeaParams:
    r_base: float = 0.1985
    r_max: float = 1.0
    eta: float = 0.95
    eligible_kwh_per_month: float = 750.0

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ConfigError("CEA eta must lie in (0, 1]")
        if not self.r_base < self.r_max:
            raise ConfigError("CEA r_base must be below r_max")
        if self.eligible_kwh_per_month < 0:
            raise ConfigError("eligible kWh must be non-negative")


def _catalog(rows) -> tuple:
    out = tuple((float(k), float(c)) for k, c in rows)
    if any(b[0] <= a[0] for a, b in zip(out, out[1:])):
        raise ConfigError("transformer catalog must be sorted by strictly increasing kVA")
    if any(c < 0 for _, c in out):
        raise ConfigError("transformer costs must be non-negative")
    return out


@dataclass(frozen=True)
class EconomicParams:
    fuel_price_gen: float = 10.17  # $/gal
    fuel_price_heat: float = 16.14  # $/gal
    fuel_efficiency_kwh_per_gal: float = 12.23
    o_and_m_annual: float = 0.0
    ipp_energy_kwh: float | None = None  # None: use delivered PV energy
    ipp_rate: float = 0.0
    cea: CeaParams = field(default_factory=CeaParams)
    transformer_catalog: dict = field(default_factory=lambda: {"LV": LV_CATALOG, "MV": MV_CATALOG})
    upgrade_trigger_ratio: float = 1.5
    base_system_cost: float = 0.0
    furnace_efficiency: float = 0.8
    heating_oil_btu_per_gal: float = STOVE_OIL_BTU_PER_GAL
    # fixed consumption of oil-only houses; None models them with the house dynamics
    baseline_heating_gal_per_house: float | None = 650.0

    def __post_init__(self):
        for name in ("fuel_price_gen", "fuel_price_heat", "o_and_m_annual", "ipp_rate", "base_system_cost"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.fuel_efficiency_kwh_per_gal <= 0:
            raise ConfigError("fuel efficiency must be positive")
        if self.baseline_heating_gal_per_house is not None and self.baseline_heating_gal_per_house < 0:
            raise ConfigError("baseline heating gallons must be non-negative")
        if self.upgrade_trigger_ratio < 1:
            raise ConfigError("upgrade trigger ratio must be at least 1")
        object.__setattr__(self, "transformer_catalog",
                           {k: _catalog(v) for k, v in self.transformer_catalog.items()})

    @classmethod
    def from_dict(cls, d: dict) -> "EconomicParams":
        d = dict(d)
        if "cea" in d:
            d["cea"] = CeaParams(**d["cea"])
        return cls(**d)


@dataclass(frozen=True)
class FuelEmission:
    ei_co2: float  # kg/mmBtu
    ei_ch4: float
    ei_n2o: float
    gwp_co2: float = 1.0
    gwp_ch4: float = 28.0
    gwp_n2o: float = 265.0

    @property
    def co2e_factor(self) -> float:
        """kg CO2e per mmBtu."""
        return self.ei_co2 * self.gwp_co2 + self.ei_ch4 * self.gwp_ch4 + self.ei_n2o * self.gwp_n2o


# AP-42 rows as tabulated for the case study (GWP horizons differ between rows)
NO2_DIESEL = FuelEmission(73.96, 0.003, 0.0006, 1, 28, 265)
NO1_STOVE_OIL = FuelEmission(73.25, 0.003, 0.0006, 1, 25, 298)


@dataclass(frozen=True)
class EmissionParams:
    fuels: dict = field(default_factory=lambda: {"No.2": NO2_DIESEL, "No.1": NO1_STOVE_OIL})
    generation_fuel: str = "No.2"
    heating_fuel: str = "No.1"
    pm25_ei_g_per_mmbtu: float = 5.9
    air_volume_m3: float = 43e6 * 100.0
    # generation energy counted as delivered electricity ("electric") or as
    # fuel burned ("fuel": gallons x heating value)
    generation_basis: str = "electric"
    generation_fuel_btu_per_gal: float = DIESEL_NO2_BTU_PER_GAL

    def __post_init__(self):
        if self.generation_basis not in ("electric", "fuel"):
            raise ConfigError("generation_basis must be 'electric' or 'fuel'")
        for name in (self.generation_fuel, self.heating_fuel):
            if name not in self.fuels:
                raise ConfigError(f"no emission factors for fuel {name!r}")
        for f in self.fuels.values():
            if min(asdict(f).values()) < 0:
                raise ConfigError("emission factors must be non-negative")
        if self.pm25_ei_g_per_mmbtu < 0 or not self.air_volume_m3 > 0:
            raise ConfigError("PM2.5 factor must be non-negative and air volume positive")

    @classmethod
    def from_dict(cls, d: dict) -> "EmissionParams":
        d = dict(d)
        if "fuels" in d:
            d["fuels"] = {k: FuelEmission(**v) for k, v in d["fuels"].items()}
        return cls(**d)


@dataclass(frozen=True)
class SocialParams:
    income_brackets: tuple = ((10_000.0, 1.0),)  # (mean income $, population fraction)
    survey_indicators: tuple = (0.0,)
    households: int = 1
    burden_threshold_pct: float = 10.0

    def __post_init__(self):
        brackets = tuple((float(i), float(f)) for i, f in self.income_brackets)
        if not brackets or any(i <= 0 or f < 0 for i, f in brackets):
            raise ConfigError("income brackets need positive incomes and non-negative fractions")
        if abs(sum(f for _, f in brackets) - 1.0) > 1e-6:
            raise ConfigError("income bracket fractions must sum to 1")
        ind = tuple(float(x) for x in self.survey_indicators)
        if not ind or any(not 0 <= x <= 1 for x in ind):
            raise ConfigError("survey indicators must be fractions in [0, 1]")
        object.__setattr__(self, "income_brackets", brackets)
        object.__setattr__(self, "survey_indicators", ind)

    @classmethod
    def from_dict(cls, d: dict) -> "SocialParams":
        return cls(**d)


# --- technical ---------------------------------------------------------------------

@dataclass(frozen=True)
class Upgrade:
    transformer: str
    kind: str
    rated_kva: float
    peak_kva: float
    new_kva: float

    @property
    def ratio(self) -> float:
        return self.new_kva / self.rated_kva

    @property
    def upgraded(self) -> bool:
        return self.new_kva != self.rated_kva


def size_upgrade(rated: float, peak: float, catalog, trigger_ratio: float = 1.5) -> float:
    """Capacity after upgrade: unchanged unless the peak exceeds trigger x rated."""
    if peak <= trigger_ratio * rated:
        return rated
    for kva, _ in catalog:
        if kva >= peak:
            return kva
    raise PeakExceedsCatalog(f"peak {peak:.1f} kVA exceeds the largest catalog size")


def transformer_peaks(solution: "DispatchSolution", topo: "Topology") -> dict:
    """Peak loading of every transformer in kVA.

    MV banks see the sum of their LV children per phase; a child with no
    phase tag spreads evenly over the three. The bank requirement is three
    times the heaviest phase.
    """
    load = solution.tx_load
    pos = {t: i for i, t in enumerate(solution.tx_ids)}
    peaks = {}
    phases = ("a", "b", "c")
    for t in topo.transformers:
        if t.kind == "LV":
            peaks[t.id] = float(load[pos[t.id]].max()) if t.id in pos else 0.0
            continue
        per_phase = np.zeros((3, load.shape[1]))
        for child in topo.transformers:
            if child.parent != t.id or child.id not in pos:
                continue
            if child.phase in phases:
                per_phase[phases.index(child.phase)] += load[pos[child.id]]
            else:
                per_phase += load[pos[child.id]] / 3.0
        peaks[t.id] = 3.0 * float(per_phase.max(axis=1).max())
    return peaks


def transformer_upgrades(solution, topo, catalog: dict, trigger_ratio: float = 1.5) -> list[Upgrade]:
    peaks = transformer_peaks(solution, topo)
    out = []
    for t in topo.transformers:
        cat = catalog.get(t.kind, ())
        new = size_upgrade(t.rated_kva, peaks[t.id], cat, trigger_ratio)
        out.append(Upgrade(t.id, t.kind, t.rated_kva, peaks[t.id], new))
    return out


def iuf(solution, topo, catalog: dict, trigger_ratio: float = 1.5) -> float:
    """Mean ratio of upgraded to original capacity over all transformers."""
    ups = transformer_upgrades(solution, topo, catalog, trigger_ratio)
    return iuf_from_upgrades(ups)


def iuf_from_upgrades(upgrades) -> float:
    if not upgrades:
        return 1.0
    return float(np.mean([u.new_kva / u.rated_kva for u in upgrades]))


def resource_adequacy(p_g, unit_capacity_kw: float, threshold_fraction: float = 0.8) -> float:
    """Percent of steps where generation exceeds the threshold share of one unit."""
    if not 0 < threshold_fraction <= 1:
        raise ValueError("threshold fraction must lie in (0, 1]")
    values = getattr(p_g, "values", p_g)
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    return 100.0 * float(np.mean(values > threshold_fraction * unit_capacity_kw))


def infra_cost(upgrades, catalog) -> float:
    """Full replacement cost of every transformer whose size changed.

    ``upgrades`` holds (old_kva, new_kva) pairs, ``catalog`` (kva, cost) rows.
    """
    prices = dict(catalog)
    total = 0.0
    for old, new in upgrades:
        if math.isclose(old, new):
            continue
        match = [c for k, c in prices.items() if math.isclose(k, new)]
        if not match:
            raise UnknownSize(f"no catalog price for {new} kVA")
        total += match[0]
    return total


# --- economic ------------------------------------------------------------------------

def retail_rate(annual_gen_kwh: float, econ: EconomicParams, total_kwh_sold: float,
                ipp_energy_kwh: float | None = None) -> float:
    """Average cost of supply per kWh sold."""
    if not total_kwh_sold > 0:
        raise ZeroSales("retail rate needs positive kWh sold")
    e_ipp = econ.ipp_energy_kwh if ipp_energy_kwh is None else ipp_energy_kwh
    e_ipp = e_ipp or 0.0
    fuel = econ.fuel_price_gen / econ.fuel_efficiency_kwh_per_gal * annual_gen_kwh
    return (fuel + econ.o_and_m_annual + e_ipp * econ.ipp_rate) / total_kwh_sold


def cea_level(r: float, cea: CeaParams) -> tuple[float, float]:
    """(assistance per kWh, rate the customer pays on eligible kWh)."""
    if r < 0:
        raise ValueError("rate must be non-negative")
    r_cea = max((min(r, cea.r_max) - cea.r_base) * cea.eta, 0.0)
    return r_cea, r - r_cea


def annual_household_electric_cost(monthly_kwh, r: float, cea: CeaParams) -> float:
    usage = np.asarray(monthly_kwh, dtype=float)
    if np.any(usage < 0):
        raise ValueError("monthly usage must be non-negative")
    _, r_sub = cea_level(r, cea)
    cap = cea.eligible_kwh_per_month
    return float(np.sum(np.minimum(usage, cap) * r_sub + np.maximum(usage - cap, 0.0) * r))


def annual_heating_cost(q_oil, fuel_price_heat: float, furnace_efficiency: float = 0.8,
                        energy_density_btu_per_gal: float = STOVE_OIL_BTU_PER_GAL,
                        dt_h: float | None = None) -> float:
    """Mean oil spend per house; ``q_oil`` is a list of TimeSeries or an (H, K) array with dt_h."""
    gallons = heating_gallons(q_oil, furnace_efficiency, energy_density_btu_per_gal, dt_h)
    return float(np.mean(gallons)) * fuel_price_heat if len(gallons) else 0.0


def heating_gallons(q_oil, furnace_efficiency=0.8, energy_density_btu_per_gal=STOVE_OIL_BTU_PER_GAL,
                    dt_h=None) -> np.ndarray:
    if dt_h is None:
        return np.array([oil_fuel_gallons(q, furnace_efficiency, energy_density_btu_per_gal) for q in q_oil])
    return np.array([oil_fuel_gallons(q, furnace_efficiency, energy_density_btu_per_gal, dt_h=dt_h)
                     for q in np.atleast_2d(q_oil)])


def monthly_household_kwh(solution: "DispatchSolution", residential_share: float, n_houses: int) -> np.ndarray:
    """Twelve calendar-month electricity totals of an average house.

    Each house takes its share of residential base demand plus the mean heat
    pump draw. Months only partly covered are scaled up by their daily rate;
    months not covered at all use the mean daily rate of the run.
    """
    if n_houses <= 0:
        raise ValueError("need at least one house")
    per_house = solution.demand.sum(axis=0) * residential_share / n_houses
    if solution.p_hp.size:
        per_house = per_house + solution.p_hp.mean(axis=0)
    kwh = per_house * solution.dt_hours
    step = timedelta(hours=solution.dt_hours)
    months = np.array([(solution.start + i * step).month for i in range(kwh.size)])
    year = solution.start.year
    steps_per_day = 24.0 / solution.dt_hours
    mean_daily = kwh.sum() / (kwh.size / steps_per_day)
    out = np.empty(12)
    for m in range(1, 13):
        days = calendar.monthrange(year, m)[1]
        mask = months == m
        if mask.any():
            out[m - 1] = kwh[mask].sum() / (mask.sum() / steps_per_day) * days
        else:
            out[m - 1] = mean_daily * days
    return out


# --- environmental ---------------------------------------------------------------------

def emissions_co2e(energy_mmbtu: dict, params: EmissionParams) -> float:
    """Metric tons CO2e from fuel energy per fuel type (mmBtu)."""
    total = 0.0
    for fuel, d in energy_mmbtu.items():
        if d < 0:
            raise ValueError("fuel energy must be non-negative")
        total += params.fuels[fuel].co2e_factor * d
    return total / 1000.0


def generation_mmbtu(e_gen_kwh: float, econ: EconomicParams, emis: EmissionParams) -> float:
    if emis.generation_basis == "fuel":
        return e_gen_kwh / econ.fuel_efficiency_kwh_per_gal * emis.generation_fuel_btu_per_gal / 1e6
    return e_gen_kwh * BTU_PER_KWH / 1e6


def pm25(energy_mmbtu, params: EmissionParams) -> float:
    """Concentration in ug/m3 of one year's PM2.5 mass spread over the air box."""
    d = sum(energy_mmbtu.values()) if isinstance(energy_mmbtu, dict) else float(energy_mmbtu)
    if d < 0:
        raise ValueError("fuel energy must be non-negative")
    return params.pm25_ei_g_per_mmbtu * d * 1e6 / params.air_volume_m3


# --- social --------------------------------------------------------------------------

@dataclass(frozen=True)
class Burden:
    mean_pct: float
    per_bracket_pct: tuple
    share_burdened: float  # population fraction above the threshold


def energy_burden(annual_cost: float, income_brackets, threshold_pct: float = 10.0) -> Burden:
    per = []
    fractions = []
    for income, frac in income_brackets:
        if not income > 0:
            raise ValueError("incomes must be positive")
        per.append(100.0 * annual_cost / income)
        fractions.append(frac)
    per_a = np.array(per)
    fr = np.array(fractions)
    return Burden(float(per_a @ fr), tuple(per), float(fr[per_a > threshold_pct].sum()))


def epi(social: SocialParams) -> float:
    """Mean share of respondents reporting an energy hardship."""
    return float(np.mean(social.survey_indicators))


def epi_tp(epi_base: float, savings_fraction: float) -> float:
    """Energy poverty scaled by cost savings; negative savings raise it."""
    return max(epi_base * (1.0 - savings_fraction), 0.0)


# --- report --------------------------------------------------------------------------

@dataclass(frozen=True)
class CriteriaReport:
    pathway: str
    iuf: float
    resource_adequacy_pct: float
    infra_cost: float
    retail_rate: float
    cea_level: float
    subsidized_rate: float
    annual_elec_cost_per_house: float
    annual_heat_cost_per_house: float
    total_energy_cost_per_house: float
    saving_pct: float
    co2e_power_t: float
    co2e_heating_t: float
    co2e_total_t: float
    co2e_reduction_pct: float
    pm25_ugm3: float
    energy_burden_pct: float
    burdened_share_pct: float
    epi_pct: float

    def as_row(self) -> dict:
        return asdict(self)


REPORT_COLUMNS = tuple(f.name for f in fields(CriteriaReport))


def assess(solution: "DispatchSolution", pathway: "PathwayConfig", scenario: "Scenario",
           baseline: CriteriaReport | None = None, as_baseline: bool = False) -> CriteriaReport:
    """Every criterion of one pathway; window totals are scaled to a year.

    Relative fields (cost saving, CO2e reduction, EPI) need ``baseline``
    unless ``as_baseline`` marks this run as the reference itself.
    """
    if baseline is None and not as_baseline:
        raise MissingBaseline(f"{pathway.name}: relative criteria need a baseline report")
    econ, emis, social = scenario.economics, scenario.emissions, scenario.social
    topo = scenario.topology
    gen = scenario.generators[pathway.generator]
    hours = solution.n_steps * solution.dt_hours
    annual = HOURS_PER_YEAR / hours

    ups = transformer_upgrades(solution, topo, econ.transformer_catalog, econ.upgrade_trigger_ratio)
    cost_infra = sum(
        infra_cost([(u.rated_kva, u.new_kva)], econ.transformer_catalog.get(u.kind, ()))
        for u in ups
    )
    ra = resource_adequacy(solution.p_g, gen.combined_unit_capacity_kw)

    e_gen = float(solution.p_g.sum() * solution.dt_hours) * annual
    e_sold = float(solution.total_demand.sum() * solution.dt_hours) * annual
    e_ipp = econ.ipp_energy_kwh
    if e_ipp is None:
        e_ipp = float(solution.p_pv.sum() * solution.dt_hours) * annual
    rate = retail_rate(e_gen, econ, e_sold, ipp_energy_kwh=e_ipp)
    r_cea, r_sub = cea_level(rate, econ.cea)

    n_houses = len(topo.houses) or social.households
    monthly = monthly_household_kwh(solution, topo.sector_shares.get("residential", 1.0), n_houses)
    elec = annual_household_electric_cost(monthly, rate, econ.cea)
    if solution.house_ids:
        gallons = heating_gallons(solution.q_oil, econ.furnace_efficiency, econ.heating_oil_btu_per_gal,
                                  dt_h=solution.dt_hours) * annual
        total_gallons = float(gallons.sum())
        heat = float(gallons.mean()) * econ.fuel_price_heat
    else:
        total_gallons = econ.baseline_heating_gal_per_house * n_houses
        heat = econ.baseline_heating_gal_per_house * econ.fuel_price_heat
    total = elec + heat

    gen_mmbtu = generation_mmbtu(e_gen, econ, emis)
    heat_mmbtu = total_gallons * econ.heating_oil_btu_per_gal / 1e6
    co2_power = emissions_co2e({emis.generation_fuel: gen_mmbtu}, emis)
    co2_heat = emissions_co2e({emis.heating_fuel: heat_mmbtu}, emis)
    co2_total = co2_power + co2_heat
    pm = pm25(gen_mmbtu + heat_mmbtu, emis)
    burden = energy_burden(total, social.income_brackets, social.burden_threshold_pct)

    if as_baseline:
        saving, reduction = 0.0, 0.0
    else:
        saving = 100.0 * (baseline.total_energy_cost_per_house - total) / baseline.total_energy_cost_per_house
        reduction = 100.0 * (baseline.co2e_total_t - co2_total) / baseline.co2e_total_t if baseline.co2e_total_t else 0.0
    poverty = epi_tp(epi(social), saving / 100.0)

    return CriteriaReport(
        pathway=pathway.name,
        iuf=iuf_from_upgrades(ups),
        resource_adequacy_pct=ra,
        infra_cost=cost_infra,
        retail_rate=rate,
        cea_level=r_cea,
        subsidized_rate=r_sub,
        annual_elec_cost_per_house=elec,
        annual_heat_cost_per_house=heat,
        total_energy_cost_per_house=total,
        saving_pct=saving,
        co2e_power_t=co2_power,
        co2e_heating_t=co2_heat,
        co2e_total_t=co2_total,
        co2e_reduction_pct=reduction,
        pm25_ugm3=pm,
        energy_burden_pct=burden.mean_pct,
        burdened_share_pct=100.0 * burden.share_burdened,
        epi_pct=100.0 * poverty,
    )


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    out = f"{x:.6g}"
    return "0" if out == "-0" else out


def write_reports_csv(reports, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in reports:
            w.writerow([_fmt(getattr(r, c)) for c in REPORT_COLUMNS])


def read_reports_csv(path) -> list[CriteriaReport]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        CriteriaReport(**{c: (row[c] if c == "pathway" else float(row[c])) for c in REPORT_COLUMNS})
        for row in rows
    ]
