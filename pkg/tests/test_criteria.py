import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tees.criteria import (
    LV_CATALOG,
    MV_CATALOG,
    NO1_STOVE_OIL,
    NO2_DIESEL,
    REPORT_COLUMNS,
    CeaParams,
    EconomicParams,
    EmissionParams,
    SocialParams,
    Upgrade,
    annual_heating_cost,
    annual_household_electric_cost,
    assess,
    cea_level,
    emissions_co2e,
    energy_burden,
    epi,
    epi_tp,
    generation_mmbtu,
    infra_cost,
    iuf_from_upgrades,
    monthly_household_kwh,
    pm25,
    read_reports_csv,
    resource_adequacy,
    retail_rate,
    size_upgrade,
    transformer_peaks,
    write_reports_csv,
)
from tees.devices import BTU_PER_KWH, STOVE_OIL_BTU_PER_GAL
from tees.dispatch import build_problem, solve
from tees.errors import ConfigError, MissingBaseline, PeakExceedsCatalog, UnknownSize, ZeroSales
from tees.scenario import Topology, Transformer

from conftest import T0

CEA = CeaParams()
rates = st.floats(0, 3, allow_nan=False)


# --- infrastructure -----------------------------------------------------------

def _up(rated, new):
    return Upgrade("t", "LV", rated, new, new)


def test_iuf_examples():
    assert iuf_from_upgrades([_up(25, 25), _up(50, 50)]) == 1.0
    assert iuf_from_upgrades([_up(10, 25), _up(15, 15)]) == pytest.approx(1.75)
    assert iuf_from_upgrades([_up(25, 50), _up(37.5, 75)]) == 2.0


def test_size_upgrade():
    assert size_upgrade(10, 15, LV_CATALOG) == 10  # at the trigger, no upgrade
    assert size_upgrade(10, 15.01, LV_CATALOG) == 25
    assert size_upgrade(25, 40, LV_CATALOG) == 50
    assert size_upgrade(10, 11, LV_CATALOG, trigger_ratio=1.0) == 25
    with pytest.raises(PeakExceedsCatalog):
        size_upgrade(50, 120, LV_CATALOG)


@given(st.floats(1, 100), st.floats(0, 150), st.floats(1, 2))
def test_iuf_at_least_one(rated, peak, trigger):
    try:
        new = size_upgrade(rated, peak, LV_CATALOG, trigger)
    except PeakExceedsCatalog:
        return
    u = _up(rated, new)
    assert iuf_from_upgrades([u]) >= 1
    assert (iuf_from_upgrades([u]) == 1) == (not u.upgraded)


def test_mv_peak_is_three_times_heaviest_phase():
    topo = Topology(
        (Transformer("MV", 75.0, kind="MV", phase_count=3),
         Transformer("A", 10.0, parent="MV", phase="a"),
         Transformer("B", 10.0, parent="MV", phase="b"),
         Transformer("X", 10.0, parent="MV")),
        ())
    load = np.array([[8.0, 2.0], [1.0, 6.0], [3.0, 3.0]])
    sol = SimpleNamespace(tx_load=load, tx_ids=("A", "B", "X"))
    peaks = transformer_peaks(sol, topo)
    assert peaks["A"] == 8.0 and peaks["X"] == 3.0
    # phase a: 8+1, b: 6+1, c: 1
    assert peaks["MV"] == pytest.approx(27.0)


def test_resource_adequacy():
    assert resource_adequacy(np.full(10, 100.0), 505.0) == 0.0
    assert resource_adequacy([0, 0, 0, 500.0], 505.0) == 25.0
    p = np.full(1000, 300.0)
    p[:25] = 404.5  # just above 0.8 x 505 = 404
    assert resource_adequacy(p, 505.0) == pytest.approx(2.5)
    assert resource_adequacy(np.full(4, 404.0), 505.0) == 0.0
    with pytest.raises(ValueError):
        resource_adequacy(p, 505.0, 0.0)


def test_infra_cost():
    assert infra_cost([(25, 25), (50, 50)], LV_CATALOG) == 0
    assert infra_cost([(25, 50), (37.5, 75)], LV_CATALOG) == 10_000
    assert infra_cost([(75, 112.5)], MV_CATALOG) == 33_226
    with pytest.raises(UnknownSize):
        infra_cost([(25, 60)], LV_CATALOG)


# --- economics ------------------------------------------------------------------

def test_retail_rate_fuel_only():
    r = retail_rate(1e6, EconomicParams(), 1e6, ipp_energy_kwh=0)
    assert r == pytest.approx(10.17 / 12.23)
    assert round(r, 4) == 0.8316


def test_retail_rate_terms():
    econ = EconomicParams(o_and_m_annual=50_000.0, ipp_rate=0.1)
    assert retail_rate(0.0, econ, 1e5, ipp_energy_kwh=0) == pytest.approx(0.5)
    assert retail_rate(0.0, econ, 1e5, ipp_energy_kwh=1e5) == pytest.approx(0.6)
    with pytest.raises(ZeroSales):
        retail_rate(1.0, econ, 0.0)


def test_cea_anchor():
    r_cea, r_sub = cea_level(1.2, CEA)
    assert (round(r_cea, 4), round(r_sub, 4)) == (0.7614, 0.4386)
    assert r_cea == pytest.approx(0.761425, abs=1e-9)
    assert cea_level(CEA.r_base, CEA)[0] == 0.0
    assert cea_level(0.99, CEA)[0] == pytest.approx(0.751925)
    assert cea_level(0.05, CEA) == (0.0, 0.05)


@given(rates, rates)
def test_cea_properties(a, b):
    ra, sa = cea_level(a, CEA)
    assert ra + sa == pytest.approx(a, abs=1e-12)
    lo, hi = sorted((a, b))
    assert cea_level(hi, CEA)[0] >= cea_level(lo, CEA)[0]
    if lo >= CEA.r_max:
        assert cea_level(hi, CEA)[0] == cea_level(lo, CEA)[0]


def test_cea_validation():
    with pytest.raises(ConfigError):
        CeaParams(r_base=1.0, r_max=0.5)
    with pytest.raises(ConfigError):
        CeaParams(eta=0)


def test_household_electric_cost():
    cea = CeaParams()
    assert annual_household_electric_cost(np.zeros(12), 0.99, cea) == 0
    r_sub = cea_level(0.99, cea)[1]
    one = annual_household_electric_cost([900] + [0] * 11, 0.99, cea)
    assert one == pytest.approx(750 * r_sub + 150 * 0.99)
    # with the rounded subsidized rate the example reads 477.45
    assert 750 * 0.4386 + 150 * 0.99 == pytest.approx(477.45)
    assert annual_household_electric_cost([500] * 12, 0.99, cea) == pytest.approx(
        12 * annual_household_electric_cost([500] + [0] * 11, 0.99, cea))


@given(st.floats(0, 3000), st.floats(0, 500), st.floats(0.2, 2))
def test_household_cost_monotone_and_continuous(u, du, r):
    f = lambda x: annual_household_electric_cost([x] + [0] * 11, r, CEA)  # noqa: E731
    assert f(u + du) >= f(u) - 1e-9
    assert abs(f(u + 1e-6) - f(u)) <= 1e-6 * r + 1e-9


def test_heating_cost_anchor():
    assert 650 * 16.14 == pytest.approx(10_491.0)
    # a year of flat oil heat worth exactly 650 gallons per house
    kw = 650 * STOVE_OIL_BTU_PER_GAL * 0.8 / BTU_PER_KWH / 8760
    q = np.full((3, 8760), kw)
    assert annual_heating_cost(q, 16.14, dt_h=1.0) == pytest.approx(10_491.0)
    assert annual_heating_cost(np.zeros((2, 24)), 16.14, dt_h=1.0) == 0.0


def test_monthly_household_kwh_fills_and_scales():
    # two January days of 1 kW per house, one house, hourly steps
    sol = SimpleNamespace(demand=np.ones((1, 48)), p_hp=np.zeros((0, 48)), dt_hours=1.0, start=T0)
    m = monthly_household_kwh(sol, 1.0, 1)
    assert m[0] == pytest.approx(24 * 31)
    assert m[1] == pytest.approx(24 * 28)
    assert m.sum() == pytest.approx(24 * 365)


# --- environment ------------------------------------------------------------------

def test_co2e_factors():
    assert NO2_DIESEL.co2e_factor == pytest.approx(74.203, abs=1e-9)
    assert NO1_STOVE_OIL.co2e_factor == pytest.approx(73.25 + 0.003 * 25 + 0.0006 * 298)
    params = EmissionParams()
    assert emissions_co2e({"No.2": 1000.0}, params) == pytest.approx(74.203)
    assert emissions_co2e({"No.2": 0.0}, params) == 0.0
    with pytest.raises(ValueError):
        emissions_co2e({"No.2": -1.0}, params)


@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0, 10))
def test_emissions_linear(d1, d2, k):
    params = EmissionParams()
    a = emissions_co2e({"No.2": d1, "No.1": d2}, params)
    assert emissions_co2e({"No.2": k * d1, "No.1": k * d2}, params) == pytest.approx(k * a, rel=1e-9, abs=1e-9)
    assert pm25(k * (d1 + d2), params) == pytest.approx(k * pm25(d1 + d2, params), rel=1e-9, abs=1e-12)


def test_pm25():
    params = EmissionParams()
    assert params.air_volume_m3 == pytest.approx(4.3e9)
    assert pm25(0.0, params) == 0.0
    # baseline-scale fuel: 372 t of generation CO2e on the delivered-energy
    # basis plus 116 oil-heated houses at 650 gal
    gen = 372_000 / NO2_DIESEL.co2e_factor
    heat = 116 * 650 * STOVE_OIL_BTU_PER_GAL / 1e6
    assert pm25({"No.2": gen, "No.1": heat}, params) == pytest.approx(21.2, abs=0.05)


def test_generation_basis():
    econ = EconomicParams()
    assert generation_mmbtu(1e6, econ, EmissionParams()) == pytest.approx(BTU_PER_KWH)
    fuel = generation_mmbtu(1e6, econ, EmissionParams(generation_basis="fuel"))
    assert fuel == pytest.approx(1e6 / 12.23 * 137_381 / 1e6)
    with pytest.raises(ConfigError):
        EmissionParams(generation_basis="heat")


# --- social -----------------------------------------------------------------------

def test_energy_burden():
    b = energy_burden(2000.0, [(10_000.0, 1.0)])
    assert b.mean_pct == pytest.approx(20.0) and b.share_burdened == 1.0
    two = [(10_000.0, 0.5), (40_000.0, 0.5)]
    full, half = energy_burden(2000.0, two), energy_burden(1000.0, two)
    assert half.mean_pct == pytest.approx(full.mean_pct / 2)
    assert full.share_burdened == 0.5  # 20 % and 5 %
    with pytest.raises(ValueError):
        energy_burden(1.0, [(0.0, 1.0)])


def test_epi():
    assert epi(SocialParams(survey_indicators=(0, 0, 0))) == 0
    assert epi_tp(0.40, 0.33) == pytest.approx(0.268)
    assert epi_tp(0.40, 0.0) == 0.40
    with pytest.raises(ConfigError):
        SocialParams(survey_indicators=(1.5,))
    with pytest.raises(ConfigError):
        SocialParams(income_brackets=((1000, 0.5),))


@given(st.floats(0, 1), st.floats(0, 1))
def test_epi_tp_never_above_base(base, saving):
    assert epi_tp(base, saving) <= base


# --- full report ------------------------------------------------------------------

@pytest.fixture(scope="module")
def reports(small_scenario):
    s = small_scenario
    sols = {n: solve(build_problem(s, s.pathway(n), s.window)) for n in ("TP1", "TP2b")}
    base = assess(sols["TP1"], s.pathway("TP1"), s, as_baseline=True)
    return s, sols, base, assess(sols["TP2b"], s.pathway("TP2b"), s, baseline=base)


def test_baseline_against_itself(reports):
    s, sols, base, _ = reports
    again = assess(sols["TP1"], s.pathway("TP1"), s, baseline=base)
    assert again.saving_pct == pytest.approx(0, abs=1e-12)
    assert again.co2e_reduction_pct == pytest.approx(0, abs=1e-12)
    assert again.epi_pct == pytest.approx(100 * epi(s.social))


def test_missing_baseline(reports):
    s, sols, _, _ = reports
    with pytest.raises(MissingBaseline):
        assess(sols["TP2b"], s.pathway("TP2b"), s)


def test_report_fields_finite_and_consistent(reports):
    s, _, base, tp = reports
    for r in (base, tp):
        for c in REPORT_COLUMNS[1:]:
            assert math.isfinite(getattr(r, c)), c
        assert r.iuf >= 1
        assert r.cea_level + r.subsidized_rate == pytest.approx(r.retail_rate)
        assert r.co2e_total_t == pytest.approx(r.co2e_power_t + r.co2e_heating_t)
        assert r.total_energy_cost_per_house == pytest.approx(
            r.annual_elec_cost_per_house + r.annual_heat_cost_per_house)
    assert base.infra_cost == 0 and base.iuf == 1
    # heat pumps trade oil for electricity
    assert tp.annual_heat_cost_per_house < base.annual_heat_cost_per_house
    assert tp.co2e_heating_t < base.co2e_heating_t


def test_reports_csv_round_trip(tmp_path, reports):
    _, _, base, tp = reports
    write_reports_csv([base, tp], tmp_path / "c.csv")
    back = read_reports_csv(tmp_path / "c.csv")
    assert [r.pathway for r in back] == ["TP1", "TP2b"]
    for c in REPORT_COLUMNS[1:]:
        assert getattr(back[1], c) == pytest.approx(getattr(tp, c), rel=1e-5, abs=1e-9)
