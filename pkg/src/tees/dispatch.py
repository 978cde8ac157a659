"""Optimal dispatch of generator, battery, PV and heat pumps.

The weekly problem is a MILP: linear fuel cost plus a penalty on transformer
loading above rating, subject to power balance, the battery reservoir, the
two-node house model per heat pump, comfort bounds and daily switching
between heat-pump and oil heating. It is handed to HiGHS through
the ``highspy`` bindings.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import highspy
import numpy as np
from scipy import sparse

from .devices import BTU_PER_KWH, BatteryModel, GeneratorModel, HouseThermalParams, cop_lookup
from .errors import (
    ChunkError,
    Infeasible,
    PartialDay,
    SolverTimeout,
    TeesError,
    WindowMismatch,
)
from .scenario import PathwayConfig, Scenario, disaggregate_demand
from .timeseries import TimeSeries, format_timestamp, parse_timestamp

log = logging.getLogger(__name__)

FEAS_TOL = 1e-4  # kW and degC
MIP_GAP = 0.005
# LP values below this are solver noise
_ZERO = 1e-7
# accepted row/bound violation of a returned solver point
_CERTIFY = 1e-6

HP, OIL = "HP", "OIL"


def heating_mode_schedule(t_out: TimeSeries, cutoff_c: float) -> tuple:
    """Per-day heating mode: OIL when the day's minimum is strictly below the cutoff."""
    per_day = 24 * 60 / t_out.dt_minutes
    if abs(per_day - round(per_day)) > 1e-9 or len(t_out) % round(per_day):
        raise PartialDay(f"series of {len(t_out)} steps does not cover whole days")
    days = t_out.values.reshape(-1, round(per_day))
    return tuple(OIL if d.min() < cutoff_c else HP for d in days)


def _expand_days(modes, steps_per_day: int) -> np.ndarray:
    return np.repeat(np.array([m == HP for m in modes]), steps_per_day)


@dataclass(frozen=True)
class HouseSpec:
    id: str
    tx: int  # index into DispatchProblem.tx_ids
    params: HouseThermalParams


@dataclass
class DispatchProblem:
    start: datetime
    dt_hours: float
    tx_ids: tuple
    tx_capacity: np.ndarray  # kVA, taken as kW at unity power factor
    demand: np.ndarray  # (n_tx, K) base demand
    pv: np.ndarray  # (K,) available PV
    t_out: np.ndarray  # (K,)
    cop: np.ndarray  # (K,)
    generator: GeneratorModel
    battery: BatteryModel | None = None
    houses: tuple = ()
    hp_min: float = 0.0
    hp_max: float = 0.0
    hp_mode: np.ndarray | None = None  # (K,) True where heat pumps run, False on oil steps
    gamma: float = 0.0
    comfort: tuple = (18.0, 22.0)
    t_a_init: float | None = None  # defaults to the comfort midpoint
    t_m_init: float | None = None
    periodic: bool = True
    allow_curtailment: bool = True
    oil_cost: float = 0.0  # $ per kWh of delivered oil heat

    def __post_init__(self):
        self.demand = np.atleast_2d(np.asarray(self.demand, dtype=float))
        self.tx_capacity = np.asarray(self.tx_capacity, dtype=float)
        self.pv = np.asarray(self.pv, dtype=float)
        self.t_out = np.asarray(self.t_out, dtype=float)
        self.cop = np.asarray(self.cop, dtype=float)
        k = self.demand.shape[1]
        if self.hp_mode is None:
            self.hp_mode = np.ones(k, dtype=bool)
        self.hp_mode = np.asarray(self.hp_mode, dtype=bool)
        for name in ("pv", "t_out", "cop", "hp_mode"):
            if getattr(self, name).shape != (k,):
                raise WindowMismatch(f"{name} has shape {getattr(self, name).shape}, expected ({k},)")
        if self.demand.shape[0] != len(self.tx_ids) or self.tx_capacity.shape != (len(self.tx_ids),):
            raise WindowMismatch("transformer ids, capacities and demand rows disagree")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if not self.comfort[0] < self.comfort[1]:
            raise ValueError("comfort band must have min < max")
        mid = 0.5 * (self.comfort[0] + self.comfort[1])
        if self.t_a_init is None:
            self.t_a_init = mid
        if self.t_m_init is None:
            self.t_m_init = self.t_a_init

    @property
    def n_steps(self) -> int:
        return self.demand.shape[1]

    @property
    def timestamps(self) -> list[datetime]:
        step = timedelta(hours=self.dt_hours)
        return [self.start + i * step for i in range(self.n_steps)]


@dataclass
class DispatchSolution:
    start: datetime
    dt_hours: float
    tx_ids: tuple
    house_ids: tuple
    house_tx: np.ndarray
    p_g: np.ndarray
    p_pv_avail: np.ndarray
    p_curt: np.ndarray
    p_b_c: np.ndarray
    p_b_d: np.ndarray
    soc: np.ndarray  # K+1 states
    p_hp: np.ndarray  # (H, K)
    q_oil: np.ndarray  # (H, K)
    t_a: np.ndarray  # (H, K+1)
    t_m: np.ndarray  # (H, K+1)
    demand: np.ndarray  # (n_tx, K) base
    tx_capacity: np.ndarray
    hp_mode: np.ndarray
    objective: float
    status: str = "optimal"
    gap: float = 0.0
    solve_seconds: float = 0.0
    chunk_starts: tuple = (0,)
    chunk_log: list = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return self.p_g.size

    @property
    def p_pv(self) -> np.ndarray:
        """PV actually delivered to the network."""
        return self.p_pv_avail - self.p_curt

    @property
    def tx_load(self) -> np.ndarray:
        load = self.demand.copy()
        for h, tx in enumerate(self.house_tx):
            load[tx] += self.p_hp[h]
        return load

    @property
    def tx_excess(self) -> np.ndarray:
        return np.maximum(self.tx_load - self.tx_capacity[:, None], 0.0)

    @property
    def total_demand(self) -> np.ndarray:
        return self.tx_load.sum(axis=0)

    @property
    def timestamps(self) -> list[datetime]:
        step = timedelta(hours=self.dt_hours)
        return [self.start + i * step for i in range(self.n_steps)]

    def fuel_cost(self, g: GeneratorModel) -> float:
        return float(np.sum(g.alpha * self.p_g + g.c0) * self.dt_hours)


# --- assembly -------------------------------------------------------------------

class _Vars:
    def __init__(self):
        self.n = 0
        self.lb: list = []
        self.ub: list = []
        self.integer: list = []

    def add(self, shape, lb, ub, integer=False):
        size = int(np.prod(shape))
        idx = np.arange(self.n, self.n + size).reshape(shape)
        self.n += size
        self.lb.append(np.broadcast_to(np.asarray(lb, dtype=float), shape).ravel())
        self.ub.append(np.broadcast_to(np.asarray(ub, dtype=float), shape).ravel())
        self.integer.append(np.full(size, 1 if integer else 0, dtype=np.uint8))
        return idx


class _Rows:
    def __init__(self):
        self.n = 0
        self.r, self.c, self.v, self.lb, self.ub = [], [], [], [], []

    def add(self, terms, lb, ub):
        """Append len(lb) rows; ``terms`` is a list of (column indices, coefficients)."""
        lb = np.atleast_1d(np.asarray(lb, dtype=float))
        m = lb.size
        rows = np.arange(self.n, self.n + m)
        for cols, coef in terms:
            cols = np.asarray(cols).ravel()
            self.r.append(rows)
            self.c.append(cols)
            self.v.append(np.broadcast_to(np.asarray(coef, dtype=float), (m,)).ravel())
        self.lb.append(lb)
        self.ub.append(np.broadcast_to(np.asarray(ub, dtype=float), (m,)).ravel())
        self.n += m

    def matrix(self, ncols):
        a = sparse.coo_matrix(
            (np.concatenate(self.v), (np.concatenate(self.r), np.concatenate(self.c))),
            shape=(self.n, ncols),
        ).tocsr()
        return a, np.concatenate(self.lb), np.concatenate(self.ub)


@dataclass
class _Model:
    c: np.ndarray
    const: float
    a: sparse.csr_matrix
    row_lb: np.ndarray
    row_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
    idx: dict


def _assemble(p: DispatchProblem, with_binaries: bool) -> _Model:
    k_n = p.n_steps
    dt = p.dt_hours
    v = _Vars()
    idx = {}
    idx["p_g"] = v.add(k_n, 0.0, p.generator.p_max)
    b = p.battery if p.battery is not None and p.battery.p_max_kw > 0 else None
    if b is not None:
        idx["p_c"] = v.add(k_n, 0.0, b.p_max_kw)
        idx["p_d"] = v.add(k_n, 0.0, b.p_max_kw)
        soc_lb = np.full(k_n + 1, b.soc_min)
        soc_ub = np.full(k_n + 1, b.soc_max)
        soc_lb[0] = soc_ub[0] = b.soc_init
        idx["soc"] = v.add(k_n + 1, soc_lb, soc_ub)
        if with_binaries:
            idx["z"] = v.add(k_n, 0.0, 1.0, integer=True)
    if p.allow_curtailment and np.any(p.pv > 0):
        idx["curt"] = v.add(k_n, 0.0, p.pv)
    n_h = len(p.houses)
    if n_h:
        mode = p.hp_mode
        hp_lb = np.where(mode, p.hp_min, 0.0)
        hp_ub = np.where(mode, p.hp_max, 0.0)
        idx["p_hp"] = v.add((n_h, k_n), np.tile(hp_lb, (n_h, 1)), np.tile(hp_ub, (n_h, 1)))
        qmax = np.array([h.params.q_oil_max for h in p.houses])[:, None]
        idx["q_oil"] = v.add((n_h, k_n), 0.0, np.where(mode[None, :], 0.0, qmax))
        ta_lb = np.full((n_h, k_n + 1), p.comfort[0])
        ta_ub = np.full((n_h, k_n + 1), p.comfort[1])
        ta_lb[:, 0] = ta_ub[:, 0] = p.t_a_init
        idx["t_a"] = v.add((n_h, k_n + 1), ta_lb, ta_ub)
        # Heat enters only the air node, so each mass step is a convex
        # combination of the previous air and mass temperatures and stays in
        # the band spanned by the comfort limits and the initial state.
        mass_ok = all(dt * h.params.h_m / h.params.c_m <= 1 for h in p.houses)
        lo = min(p.comfort[0], p.t_a_init, p.t_m_init) if mass_ok else -np.inf
        hi = max(p.comfort[1], p.t_a_init, p.t_m_init) if mass_ok else np.inf
        tm_lb = np.full((n_h, k_n + 1), lo)
        tm_ub = np.full((n_h, k_n + 1), hi)
        tm_lb[:, 0] = tm_ub[:, 0] = p.t_m_init
        idx["t_m"] = v.add((n_h, k_n + 1), tm_lb, tm_ub)
    if p.gamma > 0 and n_h:
        idx["p_ex"] = v.add((len(p.tx_ids), k_n), 0.0, np.inf)

    rows = _Rows()
    # power balance: sum(HP) + p_c - p_g - p_d + curt = PV - base demand
    terms = [(idx["p_g"], -1.0)]
    if b is not None:
        terms += [(idx["p_c"], 1.0), (idx["p_d"], -1.0)]
    if "curt" in idx:
        terms.append((idx["curt"], 1.0))
    for h in range(n_h):
        terms.append((idx["p_hp"][h], 1.0))
    rhs = p.pv - p.demand.sum(axis=0)
    rows.add(terms, rhs, rhs)

    if b is not None:
        soc = idx["soc"]
        rows.add(
            [(soc[1:], 1.0), (soc[:-1], -1.0),
             (idx["p_c"], -dt * b.eta / b.capacity_kwh),
             (idx["p_d"], dt / (b.eta * b.capacity_kwh))],
            np.zeros(k_n), np.zeros(k_n),
        )
        if p.periodic:
            rows.add([([soc[k_n]], 1.0), ([soc[0]], -1.0)], [0.0], [0.0])
        # charge only from PV or generator
        terms = [(idx["p_c"], 1.0), (idx["p_g"], -1.0)]
        if "curt" in idx:
            terms.append((idx["curt"], 1.0))
        rows.add(terms, np.full(k_n, -np.inf), p.pv)
        if with_binaries:
            rows.add([(idx["p_c"], 1.0), (idx["z"], -b.p_max_kw)], np.full(k_n, -np.inf), 0.0)
            rows.add([(idx["p_d"], 1.0), (idx["z"], b.p_max_kw)], np.full(k_n, -np.inf), b.p_max_kw)

    for h, house in enumerate(p.houses):
        hp_ = house.params
        ta, tm = idx["t_a"][h], idx["t_m"][h]
        rows.add(
            [(ta[1:], 1.0),
             (ta[:-1], -(1 - dt * (hp_.u_a + hp_.h_m) / hp_.c_a)),
             (tm[:-1], -dt * hp_.h_m / hp_.c_a),
             (idx["p_hp"][h], -dt / hp_.c_a * p.cop),
             (idx["q_oil"][h], -dt / hp_.c_a)],
            dt * hp_.u_a / hp_.c_a * p.t_out, dt * hp_.u_a / hp_.c_a * p.t_out,
        )
        rows.add(
            [(tm[1:], 1.0),
             (tm[:-1], -(1 - dt * hp_.h_m / hp_.c_m)),
             (ta[:-1], -dt * hp_.h_m / hp_.c_m)],
            np.zeros(k_n), np.zeros(k_n),
        )
        if p.periodic:
            rows.add([([ta[k_n]], 1.0), ([ta[0]], -1.0)], [0.0], [0.0])

    if "p_ex" in idx:
        for t in range(len(p.tx_ids)):
            members = [h for h, house in enumerate(p.houses) if house.tx == t]
            terms = [(idx["p_hp"][h], 1.0) for h in members] + [(idx["p_ex"][t], -1.0)]
            rows.add(terms, np.full(k_n, -np.inf), p.tx_capacity[t] - p.demand[t])

    c = np.zeros(v.n)
    c[idx["p_g"]] = p.generator.alpha * dt
    if "p_ex" in idx:
        c[idx["p_ex"].ravel()] = p.gamma
    if n_h and p.oil_cost:
        c[idx["q_oil"].ravel()] = p.oil_cost * dt
    const = p.generator.c0 * dt * k_n
    a, rlb, rub = rows.matrix(v.n)
    return _Model(c, const, a, rlb, rub, np.concatenate(v.lb), np.concatenate(v.ub),
                  np.concatenate(v.integer), idx)


@dataclass
class _Result:
    status: int  # 0 optimal, 1 limit reached, 2 infeasible, 4 other
    x: np.ndarray | None
    fun: float
    mip_gap: float
    message: str


_STATUS = {
    highspy.HighsModelStatus.kOptimal: 0,
    highspy.HighsModelStatus.kTimeLimit: 1,
    highspy.HighsModelStatus.kIterationLimit: 1,
    highspy.HighsModelStatus.kInfeasible: 2,
    # costs are bounded below, so this can only mean infeasible
    highspy.HighsModelStatus.kUnboundedOrInfeasible: 2,
}


def _highs(model: _Model, mip_gap: float, time_limit: float | None, **options) -> _Result:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("mip_rel_gap", float(mip_gap))
    if time_limit is not None:
        h.setOptionValue("time_limit", float(time_limit))
    for k, v in options.items():
        h.setOptionValue(k, v)
    a = model.a.tocsc()
    lp = highspy.HighsLp()
    lp.num_col_, lp.num_row_ = a.shape[1], a.shape[0]
    lp.col_cost_ = model.c
    lp.col_lower_, lp.col_upper_ = model.lb, model.ub
    lp.row_lower_, lp.row_upper_ = model.row_lb, model.row_ub
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = a.indptr
    lp.a_matrix_.index_ = a.indices
    lp.a_matrix_.value_ = a.data
    if model.integrality.any():
        lp.integrality_ = [highspy.HighsVarType.kInteger if i else highspy.HighsVarType.kContinuous
                           for i in model.integrality]
    h.passModel(lp)
    h.run()
    ms = h.getModelStatus()
    status = _STATUS.get(ms, 4)
    info = h.getInfo()
    x = None
    if info.primal_solution_status == 2:  # feasible point available
        x = np.array(h.getSolution().col_value)
    gap = info.mip_gap if model.integrality.any() else 0.0
    return _Result(status, x, float(info.objective_function_value), float(gap), h.modelStatusToString(ms))


def _residual(model: _Model, x) -> float:
    """Largest row or bound violation of ``x``."""
    ax = model.a @ x
    return float(max(np.max(model.row_lb - ax), np.max(ax - model.row_ub),
                     np.max(model.lb - x), np.max(x - model.ub), 0.0))


def _run_highs(model: _Model, mip_gap: float, time_limit: float | None) -> _Result:
    """Solve with HiGHS and check the returned point against the model.

    On strongly degenerate instances (many houses pinned to the comfort bound
    behind a saturated transformer) simplex and crossover can stall or, after
    postsolve, report optimal for a point that breaks equality rows. LPs are
    therefore solved by interior point without crossover first, with simplex
    as fallback; MILPs are retried without presolve. Any point that violates
    the model is rejected.
    """
    if model.integrality.any():
        attempts = [{}, {"presolve": "off"}]
    else:
        attempts = [{"solver": "ipm", "run_crossover": "off"}, {}, {"presolve": "off"}]
    res = None
    for opts in attempts:
        res = _highs(model, mip_gap, time_limit, **opts)
        if res.status == 2 or (res.status == 1 and res.x is None):
            return res
        if res.x is not None and res.status in (0, 1):
            bad = _residual(model, res.x)
            if bad <= _CERTIFY:
                return res
            log.debug("HiGHS %s point violates the model by %.3g; retrying", res.message, bad)
            res = _Result(4, None, res.fun, res.mip_gap, f"{res.message}, point violates model by {bad:.3g}")
        else:
            log.debug("HiGHS returned %s; retrying", res.message)
    return res


def _clean(x):
    x = np.asarray(x, dtype=float).copy()
    x[np.abs(x) < _ZERO] = 0.0
    return x


def _extract(p: DispatchProblem, model: _Model, x, objective, status, gap, seconds) -> DispatchSolution:
    idx = model.idx
    k_n, n_h = p.n_steps, len(p.houses)
    zeros = np.zeros(k_n)
    get = lambda name, default: _clean(x[idx[name]]) if name in idx else default  # noqa: E731
    if "soc" in idx:
        soc = np.clip(x[idx["soc"]], p.battery.soc_min, p.battery.soc_max)
    elif p.battery is not None:
        soc = np.full(k_n + 1, p.battery.soc_init)
    else:
        soc = np.zeros(k_n + 1)
    return DispatchSolution(
        start=p.start,
        dt_hours=p.dt_hours,
        tx_ids=tuple(p.tx_ids),
        house_ids=tuple(h.id for h in p.houses),
        house_tx=np.array([h.tx for h in p.houses], dtype=int),
        p_g=get("p_g", zeros),
        p_pv_avail=p.pv.copy(),
        p_curt=get("curt", zeros.copy()),
        p_b_c=get("p_c", zeros.copy()),
        p_b_d=get("p_d", zeros.copy()),
        soc=soc,
        p_hp=get("p_hp", np.zeros((n_h, k_n))),
        q_oil=get("q_oil", np.zeros((n_h, k_n))),
        t_a=x[idx["t_a"]] if "t_a" in idx else np.zeros((0, k_n + 1)),
        t_m=x[idx["t_m"]] if "t_m" in idx else np.zeros((0, k_n + 1)),
        demand=p.demand.copy(),
        tx_capacity=p.tx_capacity.copy(),
        hp_mode=p.hp_mode.copy(),
        objective=float(objective),
        status=status,
        gap=float(gap),
        solve_seconds=seconds,
    )


def _exclusive(x, model: _Model) -> bool:
    if "p_c" not in model.idx:
        return True
    pc = _clean(x[model.idx["p_c"]])
    pd = _clean(x[model.idx["p_d"]])
    return not np.any((pc > 0) & (pd > 0))


def solve(problem: DispatchProblem, mip_gap: float = MIP_GAP, time_limit: float | None = None,
          strategy: str = "auto") -> DispatchSolution:
    """Solve a dispatch problem.

    With ``strategy="auto"`` the LP without battery binaries is solved first;
    when its solution already keeps charging and discharging apart it is
    optimal for the MILP too (the LP is a relaxation) and is returned with a
    zero gap. Otherwise the full MILP is solved. ``strategy="milp"`` skips the
    LP pass.
    """
    t0 = time.perf_counter()
    has_battery = problem.battery is not None and problem.battery.p_max_kw > 0
    if strategy not in ("auto", "milp"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "auto" or not has_battery:
        model = _assemble(problem, with_binaries=False)
        res = _run_highs(model, mip_gap, time_limit)
        _check_status(res, problem, model, t0)
        if _exclusive(res.x, model):
            return _extract(problem, model, res.x, res.fun + model.const, "optimal", 0.0,
                            time.perf_counter() - t0)
        log.debug("LP relaxation charges and discharges together; solving the MILP")
    model = _assemble(problem, with_binaries=True)
    res = _run_highs(model, mip_gap, time_limit)
    _check_status(res, problem, model, t0)
    return _extract(problem, model, res.x, res.fun + model.const, "optimal", res.mip_gap,
                    time.perf_counter() - t0)


def _check_status(res, problem, model, t0):
    if res.status == 0:
        return
    if res.status == 2:
        raise Infeasible(f"dispatch infeasible: {res.message}")
    if res.status == 1:
        incumbent = None
        if res.x is not None:
            incumbent = _extract(problem, model, res.x, res.fun + model.const, "time_limit", res.mip_gap,
                                 time.perf_counter() - t0)
        raise SolverTimeout(f"solver stopped on its limit: {res.message}", incumbent)
    raise TeesError(f"solver failed (status {res.status}): {res.message}")


# --- scenario glue ----------------------------------------------------------------

def build_problem(scenario: Scenario, pathway: PathwayConfig, window,
                  allow_curtailment: bool = True) -> DispatchProblem:
    """Assemble the dispatch problem of one pathway over ``window`` = (start, end)."""
    start, end = window
    span = end - start
    if span <= timedelta(0) or span % timedelta(days=1):
        raise WindowMismatch(f"window {start}..{end} is not a whole number of days")
    try:
        demand = scenario.demand.slice(start, end)
        pv = scenario.pv.slice(start, end)
        t_out = scenario.t_out.slice(start, end)
    except TeesError as exc:
        raise WindowMismatch(str(exc)) from exc
    topo = scenario.topology
    per_tx = disaggregate_demand(demand, topo)
    tx_ids = tuple(per_tx)
    tx_pos = {t: i for i, t in enumerate(tx_ids)}
    econ = scenario.economics
    # Houses are modeled whenever their heating enters the criteria: always
    # with heat pumps, and for oil-only pathways unless a fixed baseline
    # consumption is configured.
    houses = ()
    if pathway.has_heat_pumps or econ.baseline_heating_gal_per_house is None:
        houses = tuple(HouseSpec(h.id, tx_pos[h.transformer_id], scenario.house_params[h.id])
                       for h in topo.houses)
    steps_per_day = round(24 * 60 / t_out.dt_minutes)
    if pathway.has_heat_pumps:
        hp_mode = _expand_days(heating_mode_schedule(t_out, pathway.hp_cutoff_temp_c), steps_per_day)
    else:
        hp_mode = np.zeros(len(t_out), dtype=bool)
    battery = scenario.batteries[pathway.battery] if pathway.battery is not None else None
    return DispatchProblem(
        start=start,
        dt_hours=demand.dt_hours,
        tx_ids=tx_ids,
        tx_capacity=np.array([topo.by_id(t).rated_kva for t in tx_ids]),
        demand=np.vstack([per_tx[t].values for t in tx_ids]),
        pv=pv.values * pathway.pv_scale,
        t_out=t_out.values,
        cop=cop_lookup(scenario.cop_curve, t_out.values),
        generator=scenario.generators[pathway.generator],
        battery=battery,
        houses=houses,
        hp_min=pathway.hp_min_power_kw,
        hp_max=pathway.hp_rated_power_kw,
        hp_mode=hp_mode,
        gamma=pathway.coordination_gamma,
        comfort=(pathway.comfort_min_c, pathway.comfort_max_c),
        allow_curtailment=allow_curtailment,
        oil_cost=econ.fuel_price_heat * BTU_PER_KWH / (econ.heating_oil_btu_per_gal * econ.furnace_efficiency),
    )


@dataclass(frozen=True)
class ChunkRecord:
    index: int
    start: datetime
    steps: int
    objective: float
    gap: float
    seconds: float


def chunk_windows(window, chunk_days: int):
    start, end = window
    if (end - start) % timedelta(days=1) or end <= start:
        raise WindowMismatch("window must span whole days")
    out = []
    cur = start
    while cur < end:
        nxt = min(cur + timedelta(days=chunk_days), end)
        out.append((cur, nxt))
        cur = nxt
    return out


def _solve_chunk(args):
    i, problem, mip_gap, time_limit = args
    try:
        return i, solve(problem, mip_gap=mip_gap, time_limit=time_limit), None
    except TeesError as exc:
        return i, None, exc


def rolling_solve(scenario: Scenario, pathway: PathwayConfig, window=None, chunk_days: int = 7,
                  workers: int = 1, mip_gap: float = MIP_GAP, time_limit: float | None = None,
                  return_chunks: bool = False):
    """Solve ``window`` in independent chunks of whole days and concatenate.

    Every chunk starts from the same boundary state (configured SoC, comfort
    midpoint) and returns to it, so chunks can be solved in any order.
    """
    window = window or scenario.window
    windows = chunk_windows(window, chunk_days)
    problems = [build_problem(scenario, pathway, w) for w in windows]
    jobs = [(i, p, mip_gap, time_limit) for i, p in enumerate(problems)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_chunk, jobs))
    else:
        results = [_solve_chunk(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    solutions = []
    for i, sol, err in results:
        if err is not None:
            raise ChunkError(i, err) from err
        log.info("%s chunk %d: objective %.2f gap %.4f in %.2fs",
                 pathway.name, i, sol.objective, sol.gap, sol.solve_seconds)
        solutions.append(sol)
    merged = concatenate(solutions)
    if return_chunks:
        return merged, list(zip(problems, solutions))
    return merged


def concatenate(solutions: list[DispatchSolution]) -> DispatchSolution:
    """Join chunk solutions in order. State arrays keep one final state."""
    if len(solutions) == 1:
        s = solutions[0]
        s.chunk_log = [ChunkRecord(0, s.start, s.n_steps, s.objective, s.gap, s.solve_seconds)]
        return s
    first = solutions[0]
    cat = lambda name, axis=-1: np.concatenate([getattr(s, name) for s in solutions], axis=axis)  # noqa: E731
    states = lambda name: np.concatenate(  # noqa: E731
        [getattr(s, name)[..., :-1] for s in solutions] + [solutions[-1].__dict__[name][..., -1:]], axis=-1)
    starts, log_ = [], []
    pos = 0
    for i, s in enumerate(solutions):
        starts.append(pos)
        log_.append(ChunkRecord(i, s.start, s.n_steps, s.objective, s.gap, s.solve_seconds))
        pos += s.n_steps
    return DispatchSolution(
        start=first.start,
        dt_hours=first.dt_hours,
        tx_ids=first.tx_ids,
        house_ids=first.house_ids,
        house_tx=first.house_tx,
        p_g=cat("p_g"),
        p_pv_avail=cat("p_pv_avail"),
        p_curt=cat("p_curt"),
        p_b_c=cat("p_b_c"),
        p_b_d=cat("p_b_d"),
        soc=states("soc"),
        p_hp=cat("p_hp"),
        q_oil=cat("q_oil"),
        t_a=states("t_a"),
        t_m=states("t_m"),
        demand=cat("demand"),
        tx_capacity=first.tx_capacity,
        hp_mode=cat("hp_mode"),
        objective=float(sum(s.objective for s in solutions)),
        status="optimal" if all(s.status == "optimal" for s in solutions) else "mixed",
        gap=float(max(s.gap for s in solutions)),
        solve_seconds=float(sum(s.solve_seconds for s in solutions)),
        chunk_starts=tuple(starts),
        chunk_log=log_,
    )


# --- checking ---------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    index: tuple
    amount: float

    def __str__(self):
        return f"{self.kind} at {self.index}: {self.amount:.3g}"


def _flag(out, kind, excess, tol):
    excess = np.asarray(excess, dtype=float)
    bad = np.argwhere(excess > tol)
    for pos in bad[:20]:
        out.append(Violation(kind, tuple(int(i) for i in pos), float(excess[tuple(pos)])))


def validate(solution: DispatchSolution, problem: DispatchProblem, tol: float = FEAS_TOL) -> list[Violation]:
    """Re-check every dispatch constraint; an empty list means feasible."""
    out: list[Violation] = []
    s, p = solution, problem
    k_n = p.n_steps
    dt = p.dt_hours
    if s.n_steps != k_n or s.p_hp.shape != (len(p.houses), k_n):
        return [Violation("shape", (), float(abs(s.n_steps - k_n)))]
    g = p.generator
    _flag(out, "generator_min", -s.p_g, tol)
    _flag(out, "generator_max", s.p_g - g.p_max, tol)
    load = p.demand.copy()
    for h, house in enumerate(p.houses):
        load[house.tx] += s.p_hp[h]
    residual = load.sum(axis=0) + s.p_b_c - s.p_g - (p.pv - s.p_curt) - s.p_b_d
    _flag(out, "power_balance", np.abs(residual), tol)
    _flag(out, "curtailment", np.maximum(-s.p_curt, s.p_curt - p.pv), tol)
    if not p.allow_curtailment:
        _flag(out, "curtailment", s.p_curt, tol)

    b = p.battery
    if b is None or b.p_max_kw == 0:
        _flag(out, "battery_idle", np.abs(s.p_b_c) + np.abs(s.p_b_d), tol)
    else:
        _flag(out, "battery_charge_bounds", np.maximum(-s.p_b_c, s.p_b_c - b.p_max_kw), tol)
        _flag(out, "battery_discharge_bounds", np.maximum(-s.p_b_d, s.p_b_d - b.p_max_kw), tol)
        _flag(out, "charge_discharge_exclusive", np.minimum(s.p_b_c, s.p_b_d), tol)
        _flag(out, "soc_bounds", np.maximum(b.soc_min - s.soc, s.soc - b.soc_max), 1e-6)
        step = s.soc[:-1] + dt / b.capacity_kwh * (b.eta * s.p_b_c - s.p_b_d / b.eta)
        _flag(out, "soc_dynamics", np.abs(s.soc[1:] - step), 1e-6)
        _flag(out, "soc_initial", [abs(s.soc[0] - b.soc_init)], 1e-6)
        if p.periodic:
            _flag(out, "soc_periodic", [abs(s.soc[-1] - s.soc[0])], 1e-6)
        _flag(out, "charge_source", s.p_b_c - s.p_g - (p.pv - s.p_curt), tol)

    if p.houses:
        mode = p.hp_mode[None, :]
        _flag(out, "hp_bounds", np.maximum(np.where(mode, p.hp_min, 0.0) - s.p_hp,
                                           s.p_hp - np.where(mode, p.hp_max, 0.0)), tol)
        _flag(out, "hp_on_oil_day", np.where(mode, 0.0, s.p_hp), tol)
        _flag(out, "oil_on_hp_day", np.where(mode, s.q_oil, 0.0), tol)
        qmax = np.array([h.params.q_oil_max for h in p.houses])[:, None]
        _flag(out, "oil_bounds", np.maximum(-s.q_oil, s.q_oil - qmax), tol)
        _flag(out, "comfort", np.maximum(p.comfort[0] - s.t_a[:, 1:], s.t_a[:, 1:] - p.comfort[1]), tol)
        _flag(out, "temperature_initial", np.abs(s.t_a[:, 0] - p.t_a_init), tol)
        if p.periodic:
            _flag(out, "temperature_periodic", np.abs(s.t_a[:, -1] - s.t_a[:, 0]), tol)
        for h, house in enumerate(p.houses):
            q = house.params
            heat = s.p_hp[h] * p.cop + s.q_oil[h]
            ta_next = s.t_a[h, :-1] + dt / q.c_a * (
                s.t_m[h, :-1] * q.h_m - (q.u_a + q.h_m) * s.t_a[h, :-1] + p.t_out * q.u_a + heat)
            tm_next = s.t_m[h, :-1] + dt / q.c_m * q.h_m * (s.t_a[h, :-1] - s.t_m[h, :-1])
            _flag(out, f"etp_air[{house.id}]", np.abs(s.t_a[h, 1:] - ta_next), tol)
            _flag(out, f"etp_mass[{house.id}]", np.abs(s.t_m[h, 1:] - tm_next), tol)
    _flag(out, "transformer_load", np.abs(s.tx_load - load), tol)
    return out


# --- export -----------------------------------------------------------------------

DISPATCH_COLUMNS = ("timestamp", "p_g", "p_pv", "p_b_c", "p_b_d", "soc", "total_demand")


def _fmt(x: float) -> str:
    out = f"{x:.6g}"
    return "0" if out == "-0" else out


def write_dispatch_csv(solution: DispatchSolution, path) -> None:
    s = solution
    cols = [s.p_g, s.p_pv, s.p_b_c, s.p_b_d, s.soc[:-1], s.total_demand]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DISPATCH_COLUMNS)
        for k, ts in enumerate(s.timestamps):
            w.writerow([format_timestamp(ts)] + [_fmt(c[k]) for c in cols])


def write_transformer_csv(solution: DispatchSolution, path) -> None:
    load = solution.tx_load
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp"] + list(solution.tx_ids))
        for k, ts in enumerate(solution.timestamps):
            w.writerow([format_timestamp(ts)] + [_fmt(v) for v in load[:, k]])


def write_house_csv(solution: DispatchSolution, path) -> None:
    s = solution
    header = ["timestamp"]
    for hid in s.house_ids:
        header += [f"p_hp:{hid}", f"q_oil:{hid}", f"t_a:{hid}"]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, ts in enumerate(s.timestamps):
            row = [format_timestamp(ts)]
            for h in range(len(s.house_ids)):
                row += [_fmt(s.p_hp[h, k]), _fmt(s.q_oil[h, k]), _fmt(s.t_a[h, k])]
            w.writerow(row)


def read_dispatch_csv(path) -> dict:
    """Load a dispatch export back into column arrays (timestamps as datetimes)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    out = {"timestamp": [parse_timestamp(r[0]) for r in rows]}
    for j, name in enumerate(header[1:], start=1):
        out[name] = np.array([float(r[j]) for r in rows])
    return out
