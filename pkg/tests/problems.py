"""Hand-built dispatch instances and a brute-force reference solver."""

import itertools
from datetime import datetime, timezone

import numpy as np

from tees.devices import BatteryModel, CopCurve, GeneratorModel, HouseThermalParams, cop_lookup, random_house_params
from tees.dispatch import DispatchProblem, HouseSpec
from tees.synthetic import COP_POINTS, demand_profile, outdoor_temperature, pv_profile

START = datetime(2023, 1, 1, tzinfo=timezone.utc)
GEN = GeneratorModel(alpha=0.99, c0=35.5, p_max=1373.0, combined_unit_capacity_kw=505.0)
COP = CopCurve.from_points(COP_POINTS)
LEVELS = 5


def random_small(rng, n_houses, n_steps, gamma):
    """Tiny no-battery instance with a binding lower comfort bound."""
    dt = 1.0 / 12
    t_out = rng.uniform(-25, -5, n_steps)
    houses = tuple(HouseSpec(f"h{i}", i % 2, p) for i, p in enumerate(random_house_params(rng, n_houses)))
    t0 = rng.uniform(18.3, 19.0)
    return DispatchProblem(
        start=START, dt_hours=dt, tx_ids=("A", "B"),
        tx_capacity=np.array([rng.uniform(3, 8), rng.uniform(3, 8)]),
        demand=rng.uniform(0, 6, (2, n_steps)),
        pv=rng.uniform(0, 8, n_steps) * (rng.random(n_steps) < 0.6),
        t_out=t_out, cop=cop_lookup(COP, t_out), generator=GEN,
        houses=houses, hp_min=0.0, hp_max=rng.uniform(2.5, 4.5),
        gamma=gamma, comfort=(18.0, 60.0), t_a_init=t0, t_m_init=t0, periodic=False,
    )


def brute_force(p, levels=LEVELS):
    """Enumerate every heat-pump schedule on an evenly spaced grid.

    Returns the cheapest feasible cost. The thermal recursion and the cost are
    written out here from scratch rather than shared with the solver.
    """
    n_h, k_n = len(p.houses), p.n_steps
    grid = np.linspace(p.hp_min, p.hp_max, levels)
    combos = np.array(list(itertools.product(range(levels), repeat=n_h * k_n)))
    hp = grid[combos].reshape(-1, n_h, k_n)
    dt = p.dt_hours
    ok = np.ones(len(hp), dtype=bool)
    for h, house in enumerate(p.houses):
        q = house.params
        ta = np.full(len(hp), p.t_a_init)
        tm = np.full(len(hp), p.t_m_init)
        for k in range(k_n):
            heat = hp[:, h, k] * p.cop[k]
            ta, tm = (ta + dt / q.c_a * (q.h_m * (tm - ta) + q.u_a * (p.t_out[k] - ta) + heat),
                      tm + dt / q.c_m * q.h_m * (ta - tm))
            ok &= (ta >= p.comfort[0] - 1e-9) & (ta <= p.comfort[1] + 1e-9)
    load = np.broadcast_to(p.demand, (len(hp),) + p.demand.shape).copy()
    for h, house in enumerate(p.houses):
        load[:, house.tx] += hp[:, h]
    net = load.sum(axis=1) - p.pv
    fuel = (p.generator.alpha * np.maximum(net, 0.0) + p.generator.c0).sum(axis=1) * dt
    excess = np.maximum(load - p.tx_capacity[None, :, None], 0.0).sum(axis=(1, 2))
    cost = fuel + p.gamma * excess
    return float(cost[ok].min()) if ok.any() else np.inf


def grid_bound(p, levels=LEVELS):
    """Worst-case cost of rounding every heat-pump setting up to the next grid level."""
    step = (p.hp_max - p.hp_min) / (levels - 1)
    return len(p.houses) * p.n_steps * step * (p.generator.alpha * p.dt_hours + p.gamma)


def coincident_week(n_days=7, dt_minutes=5.0):
    """Ten houses on three transformers; midday sun and warmth pull every heat pump
    into the same hours unless transformer loading is priced."""
    k_n = int(n_days * 24 * 60 / dt_minutes)
    dt = dt_minutes / 60
    hod = (np.arange(k_n) * dt) % 24
    t_out = -12.0 + 5.0 * np.sin(2 * np.pi * (hod - 9) / 24)
    pv = np.clip(60.0 * np.sin(np.pi * (hod - 8) / 8), 0, None)
    params = [HouseThermalParams(c_a=0.23, c_m=0.9, u_a=0.105, h_m=1.965)] * 10
    tx_of = [0] * 4 + [1] * 3 + [2] * 3
    base = np.array([6.0, 5.0, 4.0])
    headroom = np.array([9.0, 7.0, 7.0])
    return DispatchProblem(
        start=START, dt_hours=dt, tx_ids=("T1", "T2", "T3"),
        tx_capacity=base + headroom,
        demand=np.repeat(base[:, None], k_n, axis=1),
        pv=pv, t_out=t_out, cop=cop_lookup(COP, t_out), generator=GEN,
        houses=tuple(HouseSpec(f"h{i}", tx_of[i], params[i]) for i in range(10)),
        hp_min=0.0, hp_max=2.81, gamma=0.0, comfort=(18.0, 22.0),
    )


def synthetic_week(pv_scale=1.0, n_houses=4, seed=11, start=datetime(2023, 3, 6, tzinfo=timezone.utc),
                   dt_minutes=5.0, battery=True, gamma=80.0):
    """One week cut from a synthetic year with an evening peak and late-winter sun."""
    rng = np.random.default_rng(seed)
    k_n = int(7 * 24 * 60 / dt_minutes)
    t_out = outdoor_temperature(start, k_n, dt_minutes, rng, annual_mean=-2.5, annual_amp=17.0, weather_sd=4.0)
    pv = pv_profile(start, k_n, dt_minutes, rng, capacity_kw=80.0)
    dem = demand_profile(start, k_n, dt_minutes, rng, mean_kw=30.0, t_out=t_out)
    n_tx = 4
    shares = np.array([0.3, 0.3, 0.2, 0.2])
    houses = tuple(HouseSpec(f"h{i}", i % n_tx, p)
                   for i, p in enumerate(random_house_params(rng, n_houses)))
    per_house = np.bincount([h.tx for h in houses], minlength=n_tx)
    cap = shares * dem.values.max() + 1.6 * per_house
    return DispatchProblem(
        start=start, dt_hours=dt_minutes / 60, tx_ids=tuple(f"T{i + 1}" for i in range(n_tx)),
        tx_capacity=cap, demand=shares[:, None] * dem.values[None, :],
        pv=pv.values * pv_scale, t_out=t_out.values, cop=cop_lookup(COP, t_out.values), generator=GEN,
        battery=BatteryModel(capacity_kwh=384.0, eta=0.95, p_max_kw=100.0) if battery else None,
        houses=houses, hp_min=0.0, hp_max=2.81, gamma=gamma, comfort=(18.0, 22.0),
        oil_cost=0.15,
    )
