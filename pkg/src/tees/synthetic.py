"""Synthetic weather, PV and demand profiles for fixtures and desk-scale studies.

The case-study community data is not public; these generators produce
series with the same shape (cold continental winter, weak winter sun, an
evening demand peak) so that the pipeline can be exercised end to end.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .timeseries import TimeSeries, write_timeseries

# Calibrated so that about 80 days a year dip below -20 degC
CASE_STUDY_CLIMATE = {"annual_mean": -2.5, "annual_amp": 17.0, "weather_sd": 4.0}

COP_POINTS = [(-30, 1.3), (-25, 1.5), (-20, 1.8), (-15, 2.1), (-10, 2.4),
              (-5, 2.7), (0, 3.0), (5, 3.3), (10, 3.6), (15, 3.9)]


def _hours(start: datetime, n: int, dt_minutes: float) -> np.ndarray:
    """Hours since 1 January of the start year for each step."""
    jan1 = datetime(start.year, 1, 1, tzinfo=timezone.utc)
    h0 = (start - jan1).total_seconds() / 3600.0
    return h0 + np.arange(n) * dt_minutes / 60.0


def outdoor_temperature(start, n, dt_minutes, rng, annual_mean=-6.0, annual_amp=20.0,
                        daily_amp=4.0, weather_sd=6.0, weather_hours=60.0) -> TimeSeries:
    """Seasonal cycle (coldest mid-January) plus a daily cycle and AR(1) weather."""
    h = _hours(start, n, dt_minutes)
    seasonal = annual_mean - annual_amp * np.cos(2 * np.pi * (h - 15 * 24) / 8760.0)
    daily = -daily_amp * np.cos(2 * np.pi * (h % 24 - 3) / 24.0)
    phi = np.exp(-dt_minutes / 60.0 / weather_hours)
    noise = np.empty(n)
    noise[0] = rng.normal(0.0, weather_sd)
    eps = rng.normal(0.0, weather_sd * np.sqrt(1 - phi ** 2), n)
    for k in range(1, n):
        noise[k] = phi * noise[k - 1] + eps[k]
    return TimeSeries(start, dt_minutes, seasonal + daily + noise, "degC")


def pv_profile(start, n, dt_minutes, rng, capacity_kw, latitude_deg=66.9, cloud=0.35) -> TimeSeries:
    """Clear-sky elevation model with random daily cloudiness."""
    h = _hours(start, n, dt_minutes)
    doy = h / 24.0
    decl = np.radians(23.44) * np.sin(2 * np.pi * (doy - 81) / 365.0)
    lat = np.radians(latitude_deg)
    hour_angle = np.radians(15.0 * (h % 24 - 13.5))  # solar noon at about 13:30 local
    sin_elev = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(hour_angle)
    clear = np.clip(sin_elev, 0.0, None) ** 1.2
    days = (np.floor(doy) - np.floor(doy[0])).astype(int)
    factor = 1.0 - cloud * rng.uniform(0.0, 1.0, days.max() + 1)
    return TimeSeries(start, dt_minutes, capacity_kw * clear * factor[days], "kW")


def demand_profile(start, n, dt_minutes, rng, mean_kw, t_out: TimeSeries | None = None,
                   temp_sensitivity=0.004, noise_sd=0.03) -> TimeSeries:
    """Community load with morning and evening peaks and a mild cold-weather rise."""
    h = _hours(start, n, dt_minutes)
    hod = h % 24
    shape = 0.85 + 0.12 * np.exp(-((hod - 8.0) / 2.0) ** 2) + 0.25 * np.exp(-((hod - 19.0) / 3.0) ** 2)
    if t_out is not None:
        shape = shape * (1.0 + temp_sensitivity * np.clip(5.0 - t_out.values, 0.0, None))
    shape = shape * (1.0 + rng.normal(0.0, noise_sd, n))
    return TimeSeries(start, dt_minutes, mean_kw * shape / shape.mean(), "kW")


def _write_series(outdir: Path, demand, pv, t_out):
    write_timeseries(demand, outdir / "demand.csv")
    write_timeseries(pv, outdir / "pv.csv")
    write_timeseries(t_out, outdir / "outdoor_temp.csv")
    return {"demand": "demand.csv", "pv": "pv.csv", "outdoor_temp": "outdoor_temp.csv"}


ECONOMICS = {
    "fuel_price_gen": 10.17,
    "fuel_price_heat": 16.14,
    "fuel_efficiency_kwh_per_gal": 12.23,
    "o_and_m_annual": 0.0,
    "ipp_rate": 0.0,
    "cea": {"r_base": 0.1985, "r_max": 1.0, "eta": 0.95, "eligible_kwh_per_month": 750.0},
    "transformer_catalog": {
        "LV": [[25, 2500], [37.5, 3000], [50, 4000], [75, 6000], [100, 10000]],
        "MV": [[112.5, 33226], [150, 36672], [225, 48259], [300, 52533], [500, 70905]],
    },
    "upgrade_trigger_ratio": 1.5,
    "furnace_efficiency": 0.8,
    "heating_oil_btu_per_gal": 138500.0,
    "baseline_heating_gal_per_house": 650.0,
}

# small fixtures model the oil-only houses instead of using the survey average
SMALL_ECONOMICS = {**ECONOMICS, "baseline_heating_gal_per_house": None}

EMISSIONS = {
    "fuels": {
        "No.2": {"ei_co2": 73.96, "ei_ch4": 0.003, "ei_n2o": 0.0006, "gwp_co2": 1, "gwp_ch4": 28, "gwp_n2o": 265},
        "No.1": {"ei_co2": 73.25, "ei_ch4": 0.003, "ei_n2o": 0.0006, "gwp_co2": 1, "gwp_ch4": 25, "gwp_n2o": 298},
    },
    "generation_fuel": "No.2",
    "heating_fuel": "No.1",
    "pm25_ei_g_per_mmbtu": 5.9,
    "air_volume_m3": 4.3e9,
}

# Hardship shares of the two villages: without heat, cannot afford fuel,
# cannot gather firewood, no access to firewood.
SURVEY_INDICATORS = [0.43, 0.42, 0.43, 0.30, 0.61, 0.55, 0.26, 0.20]

# Illustrative bracket means and population shares (not survey data)
INCOME_BRACKETS = [[7500, 0.08], [20000, 0.12], [37500, 0.18], [62500, 0.20],
                   [87500, 0.16], [125000, 0.12], [175000, 0.14]]


def pathways(pv_expansion: float = 2.118) -> list[dict]:
    hp18 = {"hp_size_mbtu": 18, "hp_rated_power_kw": 4.14, "hp_cutoff_temp_c": -30.0}
    hp12 = {"hp_size_mbtu": 12, "hp_rated_power_kw": 2.81, "hp_cutoff_temp_c": -20.0}
    coord = {"coordination_gamma": 80.0}
    return [
        {"name": "TP1", "label": "no heat pumps"},
        {"name": "TP2a", "label": "uncoordinated 18 MBtu/h", **hp18},
        {"name": "TP2b", "label": "uncoordinated 12 MBtu/h", **hp12},
        {"name": "TP3a", "label": "coordinated 18 MBtu/h", **hp18, **coord},
        {"name": "TP3b", "label": "coordinated 12 MBtu/h", **hp12, **coord},
        {"name": "TP4a", "label": "coordinated 18 MBtu/h, expanded PV", **hp18, **coord, "pv_scale": pv_expansion},
        {"name": "TP4b", "label": "coordinated 12 MBtu/h, expanded PV", **hp12, **coord, "pv_scale": pv_expansion},
    ]


def write_small_scenario(outdir, seed: int = 7) -> Path:
    """Two winter days, four LV transformers under one MV bank, eight houses."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    start = datetime(2023, 1, 14, tzinfo=timezone.utc)
    n = 2 * 288
    t_out = outdoor_temperature(start, n, 5.0, rng, annual_mean=-4.0, weather_sd=1.0)
    # one oil day below the 12 MBtu/h cutoff, one heat-pump day
    days = t_out.values.reshape(2, -1)
    days = days - days.min(axis=1, keepdims=True) + np.array([[-24.0], [-15.0]])
    t_out = t_out.with_values(np.minimum(days.ravel(), 15.0))
    pv = pv_profile(start, n, 5.0, rng, capacity_kw=60.0)
    demand = demand_profile(start, n, 5.0, rng, mean_kw=20.0, t_out=t_out)
    series = _write_series(outdir, demand, pv, t_out)
    cfg = {
        "name": "synthetic-small",
        "timeseries": series,
        "topology": {
            "sector_shares": {"residential": 0.40, "community": 0.25, "commercial": 0.35},
            "transformers": [
                {"id": "MV1", "rated_kva": 75, "kind": "MV", "phase_count": 3},
                {"id": "T1", "rated_kva": 10, "parent": "MV1", "phase": "a",
                 "connections": {"residential": 2, "community": 1, "commercial": 0}},
                {"id": "T2", "rated_kva": 15, "parent": "MV1", "phase": "b",
                 "connections": {"residential": 2, "community": 0, "commercial": 1}},
                {"id": "T3", "rated_kva": 5, "parent": "MV1", "phase": "c",
                 "connections": {"residential": 2, "community": 0, "commercial": 0}},
                {"id": "T4", "rated_kva": 15, "parent": "MV1", "phase": "a",
                 "connections": {"residential": 2, "community": 1, "commercial": 1}},
            ],
        },
        "generators": {"default": {"alpha": 0.99, "c0": 35.5, "p_max": 1373, "combined_unit_capacity_kw": 505}},
        "batteries": {"default": {"capacity_kwh": 60, "eta": 0.95, "p_max_kw": 30,
                                  "soc_min": 0.2, "soc_max": 0.9, "soc_init": 0.5}},
        "cop_curve": COP_POINTS,
        "economics": SMALL_ECONOMICS,
        "emissions": EMISSIONS,
        "social": {"income_brackets": INCOME_BRACKETS, "survey_indicators": SURVEY_INDICATORS, "households": 8},
        "house_params": {"q_oil_max_kw": 12.0},
        "pathways": [p for p in pathways() if p["name"] in ("TP1", "TP2b", "TP3b", "TP4b")],
        "baseline": "TP1",
    }
    path = outdir / "scenario.json"
    path.write_text(json.dumps(cfg, indent=2) + "\n")
    return path


# Residential LV transformers: (id, kVA, houses, MV feeder). Feeder groups
# hold 47, 18 and 51 houses.
CASE_STUDY_LV = [
    ("T1", 25, 10, "MV1"), ("T5", 15, 8, "MV1"), ("T6", 15, 6, "MV1"), ("T7", 15, 6, "MV1"),
    ("T8", 15, 5, "MV1"), ("T9", 15, 5, "MV1"), ("T10", 25, 7, "MV1"),
    ("T12", 25, 4, "MV2"), ("T26", 15, 14, "MV2"),
    ("T13", 25, 2, "MV3"), ("T14", 10, 1, "MV3"), ("T17", 10, 1, "MV3"), ("T18", 10, 6, "MV3"),
    ("T22", 10, 4, "MV3"), ("T23", 25, 7, "MV3"), ("T25", 15, 7, "MV3"), ("T27", 15, 8, "MV3"),
    ("T28", 15, 9, "MV3"), ("T29", 10, 6, "MV3"),
]

# Non-residential LV transformers with assumed community / commercial counts
CASE_STUDY_OTHER = [
    ("T2", 25, {"community": 2}, "MV1"), ("T3", 15, {"commercial": 2}, "MV1"),
    ("T4", 25, {"community": 1, "commercial": 1}, "MV1"), ("T11", 50, {"community": 1}, "MV3"),
    ("T15", 10, {"community": 1}, "MV3"), ("T16", 10, {"commercial": 1}, "MV3"),
    ("T19", 10, {"commercial": 1}, "MV2"), ("T20", 15, {"community": 1}, "MV2"),
    ("T21", 25, {"commercial": 2}, "MV3"), ("T24", 10, {"community": 1}, "MV3"),
]


def case_study_topology() -> dict:
    txs = [{"id": mv, "rated_kva": 75, "kind": "MV", "phase_count": 3} for mv in ("MV1", "MV2", "MV3")]
    phase_of = {}
    for tid, kva, houses, mv in CASE_STUDY_LV:
        n = sum(1 for v in phase_of.values() if v[0] == mv)
        phase_of[tid] = (mv, "abc"[n % 3])
        txs.append({"id": tid, "rated_kva": kva, "parent": mv, "phase": phase_of[tid][1],
                    "connections": {"residential": houses, "community": 0, "commercial": 0}})
    for tid, kva, conn, mv in CASE_STUDY_OTHER:
        counts = {"residential": 0, "community": 0, "commercial": 0, **conn}
        # the school transformer is a three-phase unit
        phase = None if tid == "T11" else "abc"[len(txs) % 3]
        txs.append({"id": tid, "rated_kva": kva, "parent": mv, "phase": phase,
                    "phase_count": 3 if tid == "T11" else 1, "connections": counts})
    return {"sector_shares": {"residential": 0.40, "community": 0.25, "commercial": 0.35}, "transformers": txs}


def write_case_study(outdir, seed: int = 2023, dt_minutes: float = 5.0) -> Path:
    """A synthetic year shaped like the two-village case study (data itself is not public)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    start = datetime(2023, 1, 1, tzinfo=timezone.utc)
    n = int(365 * 24 * 60 / dt_minutes)
    t_out = outdoor_temperature(start, n, dt_minutes, rng, **CASE_STUDY_CLIMATE)
    pv = pv_profile(start, n, dt_minutes, rng, capacity_kw=223.6)
    # about 200 MWh of PV and 1.5 GWh of demand a year
    pv = pv.with_values(pv.values * 200_000.0 / pv.energy())
    demand = demand_profile(start, n, dt_minutes, rng, mean_kw=1_500_000.0 / 8760.0, t_out=t_out)
    series = _write_series(outdir, demand, pv, t_out)
    econ = {**ECONOMICS, "o_and_m_annual": 400_000.0}
    cfg = {
        "name": "case-study-synthetic",
        "timeseries": series,
        "topology": case_study_topology(),
        "generators": {"default": {"alpha": 0.99, "c0": 35.5, "p_max": 1373, "combined_unit_capacity_kw": 505}},
        "batteries": {"default": {"capacity_kwh": 384, "eta": 0.95, "p_max_kw": 250,
                                  "soc_min": 0.2, "soc_max": 0.9, "soc_init": 0.5}},
        "cop_curve": COP_POINTS,
        "economics": econ,
        "emissions": EMISSIONS,
        "social": {"income_brackets": INCOME_BRACKETS, "survey_indicators": SURVEY_INDICATORS, "households": 116},
        "house_params": {"q_oil_max_kw": 12.0},
        "pathways": pathways(),
        "baseline": "TP1",
    }
    path = outdir / "scenario.json"
    path.write_text(json.dumps(cfg, indent=2) + "\n")
    return path
