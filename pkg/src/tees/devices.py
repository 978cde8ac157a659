"""Device models: diesel cost curve, battery reservoir, ETP house, COP table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateFit, OutOfRange, SimultaneousChargeDischarge

BTU_PER_KWH = 3412.14
STOVE_OIL_BTU_PER_GAL = 138_500.0
DIESEL_NO2_BTU_PER_GAL = 137_381.0


@dataclass(frozen=True)
class GeneratorModel:
    alpha: float  # $/kWh
    c0: float  # $/h
    p_max: float  # kW, aggregate of all gensets
    combined_unit_capacity_kw: float  # kW, one genset
    fuel_efficiency_kwh_per_gal: float = 12.23

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("generator alpha must be positive")
        if self.c0 < 0:
            raise ConfigError("generator no-load cost must be non-negative")
        if not 0 < self.combined_unit_capacity_kw <= self.p_max:
            raise ConfigError("unit capacity must lie in (0, p_max]")


@dataclass(frozen=True)
class BatteryModel:
    capacity_kwh: float
    eta: float
    p_max_kw: float
    soc_min: float = 0.2
    soc_max: float = 0.9
    soc_init: float = 0.5

    def __post_init__(self):
        if not self.capacity_kwh > 0:
            raise ConfigError("battery capacity must be positive")
        if not 0 < self.eta <= 1:
            raise ConfigError("battery efficiency must lie in (0, 1]")
        if not 0 <= self.soc_min < self.soc_max <= 1:
            raise ConfigError("need 0 <= soc_min < soc_max <= 1")
        if not self.soc_min <= self.soc_init <= self.soc_max:
            raise ConfigError("soc_init outside [soc_min, soc_max]")
        if self.p_max_kw < 0:
            raise ConfigError("battery power limit must be non-negative")


@dataclass(frozen=True)
class HouseThermalParams:
    c_a: float  # kWh/degC, air
    c_m: float  # kWh/degC, mass
    u_a: float  # kW/degC, envelope
    h_m: float  # kW/degC, air-mass coupling
    q_oil_max: float = 12.0  # kW delivered heat

    def __post_init__(self):
        for name in ("c_a", "c_m", "u_a", "h_m"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"house parameter {name} must be positive")
        if self.q_oil_max < 0:
            raise ConfigError("q_oil_max must be non-negative")

    def transition(self, dt_h: float):
        """(A, b) of the one-step update x' = A x + b_out*t_out + b_q*Q."""
        a = np.array([
            [1 - dt_h * (self.u_a + self.h_m) / self.c_a, dt_h * self.h_m / self.c_a],
            [dt_h * self.h_m / self.c_m, 1 - dt_h * self.h_m / self.c_m],
        ])
        return a, np.array([dt_h * self.u_a / self.c_a, 0.0]), np.array([dt_h / self.c_a, 0.0])


# envelope parameter ranges for a ~1000 sq.ft. house
ENVELOPE_RANGES = {
    "c_a": (0.21, 0.25),
    "c_m": (0.81, 0.99),
    "h_m": (1.76, 2.17),
    "u_a": (0.09, 0.12),
}


def random_house_params(rng: np.random.Generator, n: int, ranges=None, q_oil_max=12.0):
    """Draw ``n`` houses uniformly inside the envelope ranges."""
    ranges = ranges or ENVELOPE_RANGES
    names = ("c_a", "c_m", "u_a", "h_m")
    draws = {k: rng.uniform(*ranges[k], size=n) for k in names}
    return [
        HouseThermalParams(**{k: float(draws[k][i]) for k in names}, q_oil_max=q_oil_max)
        for i in range(n)
    ]


@dataclass(frozen=True)
class CopCurve:
    temps: tuple
    cops: tuple

    def __post_init__(self):
        t = np.asarray(self.temps, dtype=float)
        c = np.asarray(self.cops, dtype=float)
        if t.size == 0 or t.size != c.size:
            raise ConfigError("COP table needs matching, non-empty temperature and COP lists")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("COP temperatures must be strictly increasing")
        if np.any(c <= 0):
            raise ConfigError("COP values must be positive")
        if np.any(np.diff(c) < 0):
            raise ConfigError("COP must be non-decreasing in temperature")
        object.__setattr__(self, "temps", tuple(float(x) for x in t))
        object.__setattr__(self, "cops", tuple(float(x) for x in c))

    @classmethod
    def from_points(cls, points):
        temps, cops = zip(*points)
        return cls(temps, cops)


def generator_cost(g: GeneratorModel, p_g: float) -> float:
    """Hourly fuel cost ($/h) at output ``p_g`` kW."""
    if p_g < 0 or p_g > g.p_max:
        raise OutOfRange(f"generator output {p_g} kW outside [0, {g.p_max}]")
    return g.alpha * p_g + g.c0


@dataclass(frozen=True)
class CostFit:
    alpha: float
    c0: float
    r_squared: float


def fit_cost_curve(heat_rate_points, fuel_price: float, rating_kw: float,
                   fuel_btu_per_gal: float = DIESEL_NO2_BTU_PER_GAL) -> CostFit:
    """Least-squares line through fuel cost vs output.

    ``heat_rate_points`` are (per-unit output, heat rate in btu/kWh) pairs.
    Heat input is heat rate times output; dividing by the fuel energy density
    and multiplying by price gives $/h at each point.
    """
    pts = np.asarray(heat_rate_points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise DegenerateFit("need at least two (per-unit power, heat rate) points")
    if np.any(pts <= 0) or fuel_price <= 0 or rating_kw <= 0:
        raise DegenerateFit("heat-rate points, fuel price and rating must be positive")
    p_kw = pts[:, 0] * rating_kw
    if np.ptp(p_kw) == 0:
        raise DegenerateFit("all power points identical")
    cost = p_kw * pts[:, 1] / fuel_btu_per_gal * fuel_price
    slope, intercept = np.polyfit(p_kw, cost, 1)
    resid = cost - (slope * p_kw + intercept)
    ss_tot = float(np.sum((cost - cost.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return CostFit(float(slope), float(intercept), r2)


def battery_step(b: BatteryModel, soc: float, p_c: float, p_d: float, dt_h: float) -> float:
    """Next state of charge (fraction). Bounds are the caller's concern."""
    if p_c > 0 and p_d > 0:
        raise SimultaneousChargeDischarge("battery cannot charge and discharge in the same step")
    if p_c < 0 or p_d < 0 or p_c > b.p_max_kw or p_d > b.p_max_kw:
        raise OutOfRange("battery power outside [0, p_max]")
    return soc + dt_h / b.capacity_kwh * (b.eta * p_c - p_d / b.eta)


def cop_lookup(curve: CopCurve, t_out):
    """Piecewise-linear COP, clamped at the table ends. Accepts scalars or arrays."""
    out = np.interp(t_out, curve.temps, curve.cops)
    return float(out) if np.ndim(out) == 0 else out


def etp_step(h: HouseThermalParams, t_a, t_m, t_out, p_hp, cop, q_oil, dt_h):
    """One explicit step of the two-node air/mass model (no heat into the mass)."""
    q = p_hp * cop + q_oil
    t_a_next = t_a + dt_h / h.c_a * (t_m * h.h_m - (h.u_a + h.h_m) * t_a + t_out * h.u_a + q)
    t_m_next = t_m + dt_h / h.c_m * h.h_m * (t_a - t_m)
    return t_a_next, t_m_next


def etp_simulate(h: HouseThermalParams, t_a0, t_m0, t_out, heat, dt_h):
    """Roll ``etp_step`` over sequences of outdoor temperature and delivered heat.

    Returns arrays of length n+1 for air and mass temperature.
    """
    t_out = np.asarray(t_out, dtype=float)
    heat = np.broadcast_to(np.asarray(heat, dtype=float), t_out.shape)
    ta = np.empty(t_out.size + 1)
    tm = np.empty(t_out.size + 1)
    ta[0], tm[0] = t_a0, t_m0
    for k in range(t_out.size):
        ta[k + 1], tm[k + 1] = etp_step(h, ta[k], tm[k], t_out[k], 0.0, 0.0, heat[k], dt_h)
    return ta, tm


def oil_fuel_gallons(q_oil, furnace_efficiency: float = 0.8,
                     energy_density_btu_per_gal: float = STOVE_OIL_BTU_PER_GAL,
                     dt_h: float | None = None) -> float:
    """Gallons of stove oil burned to deliver the heat series ``q_oil`` (kW).

    ``q_oil`` is a TimeSeries, or a plain array together with ``dt_h``.
    """
    if not 0 < furnace_efficiency <= 1:
        raise ValueError("furnace efficiency must lie in (0, 1]")
    if energy_density_btu_per_gal <= 0:
        raise ValueError("energy density must be positive")
    if dt_h is None:
        dt_h = q_oil.dt_hours
        q_oil = q_oil.values
    kwh = float(np.sum(q_oil)) * dt_h
    return kwh * BTU_PER_KWH / (energy_density_btu_per_gal * furnace_efficiency)
