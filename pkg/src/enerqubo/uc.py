"""Single-period unit commitment: quadratic fuel costs, discretization, QUBO.

A unit i burns ``a + b*p + c*p**2`` when committed with output p in
[p_min, p_max] and nothing when offline; total output must meet the load.
The continuous problem is solved exactly per commitment by equal-marginal-
cost dispatch; the discretized problem puts each committed unit on a uniform
grid of N+1 points and is encoded as a QUBO with an offline bit v(i) and
one-hot grid bits z(i,k) per unit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import InfeasibleError, OracleSizeError
from .qubo import Qubo, _add_squared
from .varmap import PenaltyWeights, VarMap

_ORACLE_UNITS = 12
_GRID_TABLE_LIMIT = 4_000_000


def _tol(scale: float) -> float:
    return 1e-9 * max(1.0, abs(scale))


@dataclass(frozen=True)
class UcUnit:
    """One generating unit: fuel cost a + b*p + c*p^2 on [p_min, p_max]."""

    a: float
    b: float
    c: float
    p_min: float
    p_max: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "p_min", "p_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"unit field {name} must be finite")
        if self.c < 0:
            raise ValueError("quadratic cost coefficient must be nonnegative")
        if not 0 <= self.p_min <= self.p_max:
            raise ValueError("need 0 <= p_min <= p_max")

    def cost(self, p: float) -> float:
        return self.a + self.b * p + self.c * p * p


@dataclass(frozen=True)
class UcInstance:
    units: tuple[UcUnit, ...]
    load: float

    def __post_init__(self) -> None:
        units = tuple(
            u if isinstance(u, UcUnit) else UcUnit(**u) for u in self.units
        )
        if not units:
            raise ValueError("instance needs at least one unit")
        if not (math.isfinite(self.load) and self.load >= 0):
            raise ValueError("load must be finite and nonnegative")
        if sum(u.p_max for u in units) < self.load - _tol(self.load):
            raise ValueError("total capacity below the load; instance cannot be feasible")
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "load", float(self.load))

    @property
    def n(self) -> int:
        return len(self.units)


@dataclass(frozen=True)
class DiscretizedUc:
    """Uniform grids over each unit's feasible range.

    ``points[i]`` holds N+1 values from p_min to p_max inclusive with step
    ``steps[i]``; a degenerate unit (p_min == p_max) keeps a single point so
    the encoding carries no duplicated states.
    """

    base: UcInstance
    n_grid: int
    steps: tuple[float, ...]
    points: tuple[tuple[float, ...], ...]


def uc_discretize(inst: UcInstance, n_grid: int) -> DiscretizedUc:
    if n_grid < 1:
        raise ValueError("grid count must be >= 1")
    steps = []
    points = []
    for u in inst.units:
        if u.p_max == u.p_min:
            steps.append(0.0)
            points.append((u.p_min,))
            continue
        h = (u.p_max - u.p_min) / n_grid
        pts = [u.p_min + k * h for k in range(n_grid + 1)]
        pts[-1] = u.p_max  # force the exact endpoint
        steps.append(h)
        points.append(tuple(pts))
    return DiscretizedUc(inst, n_grid, tuple(steps), tuple(points))


@dataclass(frozen=True)
class UcSolution:
    on: tuple[bool, ...]
    power: tuple[float, ...]
    unit_costs: tuple[float, ...]
    total: float
    violations: tuple[str, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations


def uc_objective(inst: UcInstance, on_flags, powers) -> UcSolution:
    """Evaluate a commitment + dispatch, recording constraint violations."""
    n = inst.n
    if len(on_flags) != n or len(powers) != n:
        raise ValueError("on_flags and powers must have one entry per unit")
    on = tuple(bool(y) for y in on_flags)
    power = tuple(float(p) for p in powers)
    costs = []
    violations = []
    for i, u in enumerate(inst.units):
        y = 1 if on[i] else 0
        p = power[i]
        costs.append(u.a * y + u.b * p + u.c * p * p)
        lo, hi = u.p_min * y, u.p_max * y
        if p < lo - _tol(hi) or p > hi + _tol(hi):
            violations.append(f"unit {i + 1}: power {p:.6g} outside [{lo:.6g}, {hi:.6g}]")
    residual = sum(power) - inst.load
    if abs(residual) > _tol(inst.load):
        violations.append(f"load residual {residual:.6g}")
    return UcSolution(on, power, tuple(costs), sum(costs), tuple(violations))


def uc_default_penalties(disc: DiscretizedUc) -> PenaltyWeights:
    """Weights scaled to the instance: one-hot weight 10x the largest unit
    cost, balance weight sized so a one-step load error outweighs any cost
    gain (b * h_min^2 exceeds the cost scale)."""
    inst = disc.base
    cost_scale = max(u.cost(u.p_max) for u in inst.units)
    cost_scale = max(1.0, cost_scale)
    a = 10.0 * cost_scale
    steps = [h for h in disc.steps if h > 0]
    if steps:
        b = 10.0 * cost_scale / min(steps) ** 2
    else:
        b = 10.0 * cost_scale
    return PenaltyWeights(a, b)


def uc_to_qubo(
    disc: DiscretizedUc, weights: PenaltyWeights | None = None
) -> tuple[Qubo, VarMap]:
    """QUBO over v(i) and z(i,k) bits.

    Each z(i,k) carries the full fuel cost of running unit i at grid point k;
    cross terms 2*c*P_k*P_m keep the expansion of c*p^2 exact under the
    one-hot constraint.  Penalties: weight a on each per-unit one-hot
    residual, weight b on the squared load residual.
    """
    if weights is None:
        weights = uc_default_penalties(disc)
    if weights.a <= 0 or weights.b <= 0:
        raise ValueError("unit commitment penalties must be positive")
    inst = disc.base
    vm = VarMap()
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    offset = 0.0
    load_terms: dict[int, float] = {}

    for i, u in enumerate(inst.units):
        v_idx = vm.add(f"v({i + 1})")
        z_idx = [vm.add(f"z({i + 1},{k + 1})") for k in range(len(disc.points[i]))]
        one_hot = {v_idx: 1.0}
        for k, zi in enumerate(z_idx):
            p = disc.points[i][k]
            linear[zi] = linear.get(zi, 0.0) + u.a + u.b * p + u.c * p * p
            for m in range(k + 1, len(z_idx)):
                pm = disc.points[i][m]
                zj = z_idx[m]
                key = (zi, zj)
                quadratic[key] = quadratic.get(key, 0.0) + 2.0 * u.c * p * pm
            one_hot[zi] = 1.0
            load_terms[zi] = -p
        offset += _add_squared(linear, quadratic, one_hot, -1.0, weights.a)

    offset += _add_squared(linear, quadratic, load_terms, inst.load, weights.b)
    model = Qubo(len(vm), linear, quadratic, offset, vm.names())
    return model, vm


def uc_decode(bits, varmap: VarMap, disc: DiscretizedUc) -> UcSolution:
    """Read commitment and grid powers off the bits.

    Powers follow the literal encoding p_i = sum_k P_ik z_ik, so violated
    one-hot groups still decode to something evaluable; each breach is
    reported.
    """
    inst = disc.base
    on = []
    power = []
    costs = []
    violations = []
    for i, u in enumerate(inst.units):
        v = int(bits[varmap.index(f"v({i + 1})")])
        selected = [
            k
            for k in range(len(disc.points[i]))
            if int(bits[varmap.index(f"z({i + 1},{k + 1})")])
        ]
        count = v + len(selected)
        if count != 1:
            violations.append(f"unit {i + 1}: one-hot violated ({count} selections)")
        p = sum(disc.points[i][k] for k in selected)
        y = 1 - v
        on.append(bool(y))
        power.append(p)
        costs.append(u.a * y + u.b * p + u.c * p * p)
    residual = sum(power) - inst.load
    if abs(residual) > _tol(inst.load):
        violations.append(f"load residual {residual:.6g}")
    return UcSolution(
        tuple(on), tuple(power), tuple(costs), sum(costs), tuple(violations)
    )


def uc_dispatch_oracle(inst: UcInstance, on_flags) -> tuple[np.ndarray, float]:
    """Exact economic dispatch for a fixed commitment.

    Bisects the shared marginal price, with ``p(price) = clip((price - b) /
    (2c), p_min, p_max)`` for strictly convex units.  Zero-curvature units
    saturate at their bounds away from the price and absorb the residual in
    (b, index) order when marginal.  Returns (powers, total cost including
    commitment costs).
    """
    n = inst.n
    if len(on_flags) != n:
        raise ValueError("need one on flag per unit")
    on = [i for i in range(n) if on_flags[i]]
    load = inst.load
    powers = np.zeros(n)
    if not on:
        if load > _tol(load):
            raise InfeasibleError("no units committed but load is positive")
        return powers, 0.0
    p_min = np.array([inst.units[i].p_min for i in on])
    p_max = np.array([inst.units[i].p_max for i in on])
    b = np.array([inst.units[i].b for i in on])
    c = np.array([inst.units[i].c for i in on])
    if load < p_min.sum() - _tol(load) or load > p_max.sum() + _tol(load):
        raise InfeasibleError(
            f"committed capacity [{p_min.sum():.6g}, {p_max.sum():.6g}] cannot meet load {load:.6g}"
        )

    convex = c > 0

    def output_at(price: float) -> np.ndarray:
        p = np.where(
            convex,
            np.clip((price - b) / np.where(convex, 2 * c, 1.0), p_min, p_max),
            np.where(b <= price, p_max, p_min),
        )
        return p

    lo = float(np.min(b + 2 * c * p_min)) - 1.0
    hi = float(np.max(b + 2 * c * p_max)) + 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if output_at(mid).sum() < load:
            lo = mid
        else:
            hi = mid
    price = hi
    p = output_at(price)
    # let zero-curvature units at the marginal price absorb the residual
    eps = 1e-7 * max(1.0, abs(price))
    marginal = [
        k for k in range(len(on)) if not convex[k] and abs(b[k] - price) <= eps
    ]
    for k in marginal:
        p[k] = p_min[k]
    residual = load - p.sum()
    for k in sorted(marginal, key=lambda k: (b[k], on[k])):
        add = min(max(residual, 0.0), p_max[k] - p_min[k])
        p[k] += add
        residual -= add
    if abs(p.sum() - load) > _tol(load):
        raise InfeasibleError(
            f"dispatch residual {p.sum() - load:.3e} exceeds tolerance"
        )
    total = 0.0
    for pos, i in enumerate(on):
        powers[i] = p[pos]
        total += inst.units[i].cost(p[pos])
    return powers, total


def uc_oracle(inst: UcInstance) -> UcSolution:
    """Exact continuous optimum over all 2^n commitments (n <= 12)."""
    n = inst.n
    if n > _ORACLE_UNITS:
        raise OracleSizeError(f"UC oracle limited to {_ORACLE_UNITS} units")
    best: UcSolution | None = None
    for flags in product((0, 1), repeat=n):
        try:
            powers, total = uc_dispatch_oracle(inst, flags)
        except InfeasibleError:
            continue
        if best is None or total < best.total - _tol(best.total):
            costs = tuple(
                inst.units[i].cost(powers[i]) if flags[i] else 0.0 for i in range(n)
            )
            best = UcSolution(
                tuple(bool(f) for f in flags),
                tuple(float(p) for p in powers),
                costs,
                total,
            )
    if best is None:
        raise InfeasibleError("no feasible commitment for this instance")
    return best


def _grid_cost_arrays(disc: DiscretizedUc, i: int):
    u = disc.base.units[i]
    pts = np.array(disc.points[i])
    return pts, u.a + u.b * pts + u.c * pts * pts


def _min_cost_pick(
    points: list[np.ndarray], costs: list[np.ndarray], target: float, tol: float
):
    """Cheapest selection of one point per list with sum within tol of target.

    Returns (cost, per-list indices) or None.  Uses a sorted half/half sum
    table, so it handles up to ~4 lists at fine grids.
    """
    k = len(points)
    if k == 0:
        return (0.0, []) if abs(target) <= tol else None
    if k == 1:
        ok = np.nonzero(np.abs(points[0] - target) <= tol)[0]
        if ok.size == 0:
            return None
        best = ok[np.argmin(costs[0][ok])]
        return float(costs[0][best]), [int(best)]
    half = k // 2
    left_pts, left_cost, left_shape = _sum_table(points[:half], costs[:half])
    right_pts, right_cost, right_shape = _sum_table(points[half:], costs[half:])
    order = np.argsort(right_pts, kind="stable")
    right_sorted = right_pts[order]
    lo_all = np.searchsorted(right_sorted, target - left_pts - tol, side="left")
    hi_all = np.searchsorted(right_sorted, target - left_pts + tol, side="right")
    best = None
    for li in np.nonzero(hi_all > lo_all)[0]:
        window = order[lo_all[li] : hi_all[li]]
        pos = window[np.argmin(right_cost[window])]
        total = float(left_cost[li] + right_cost[pos])
        if best is None or total < best[0]:
            best = (total, int(li), int(pos))
    if best is None:
        return None
    total, li, ri = best
    left_idx = list(np.unravel_index(li, left_shape))
    right_idx = list(np.unravel_index(ri, right_shape))
    return total, [int(v) for v in left_idx + right_idx]


def _sum_table(points: list[np.ndarray], costs: list[np.ndarray]):
    size = int(np.prod([p.size for p in points]))
    if size > _GRID_TABLE_LIMIT:
        raise OracleSizeError(
            f"grid dispatch table of {size} entries exceeds the supported size"
        )
    total_pts = points[0]
    total_cost = costs[0]
    for p, c in zip(points[1:], costs[1:]):
        total_pts = (total_pts[:, None] + p[None, :]).ravel()
        total_cost = (total_cost[:, None] + c[None, :]).ravel()
    return total_pts, total_cost, tuple(p.size for p in points)


def uc_grid_oracle(disc: DiscretizedUc, load_tol: float | None = None) -> UcSolution:
    """Exact optimum of the discretized problem.

    Minimizes total cost over all commitments and grid selections whose
    output meets the load within ``load_tol`` (default: round-off only, i.e.
    the load must be grid-representable).  Commitments are scanned in
    lexicographic order so cost ties break deterministically.
    """
    inst = disc.base
    n = inst.n
    if load_tol is None:
        load_tol = _tol(inst.load)
    best = None
    for flags in product((0, 1), repeat=n):
        on = [i for i in range(n) if flags[i]]
        pts = []
        costs = []
        for i in on:
            p, c = _grid_cost_arrays(disc, i)
            pts.append(p)
            costs.append(c)
        picked = _min_cost_pick(pts, costs, inst.load, load_tol)
        if picked is None:
            continue
        total, indices = picked
        if best is None or total < best[0] - _tol(best[0]):
            best = (total, flags, dict(zip(on, indices)))
    if best is None:
        raise InfeasibleError(
            "no grid selection meets the load at this resolution"
        )
    total, flags, chosen = best
    power = tuple(
        float(disc.points[i][chosen[i]]) if flags[i] else 0.0 for i in range(n)
    )
    costs = tuple(
        inst.units[i].cost(power[i]) if flags[i] else 0.0 for i in range(n)
    )
    return UcSolution(tuple(bool(f) for f in flags), power, costs, sum(costs))


def uc_choose_grids(
    inst: UcInstance, tol: float = 1e-4, max_grid: int = 1024
) -> int:
    """Smallest N in {1, 2, 4, ..., max_grid} whose discretized optimum is
    within ``tol`` relative gap of the continuous optimum.

    Returns max_grid with a warning when the doubling search never closes
    the gap (e.g. the load is not representable on any tested grid).
    """
    continuous = uc_oracle(inst)
    denom = max(abs(continuous.total), 1e-12)
    n_grid = 1
    while True:
        try:
            grid = uc_grid_oracle(uc_discretize(inst, n_grid))
            gap = abs(grid.total - continuous.total) / denom
            if gap <= tol:
                return n_grid
        except InfeasibleError:
            pass
        if n_grid >= max_grid:
            warnings.warn(
                f"doubling search reached N={max_grid} without closing the "
                f"{tol:.2g} relative gap",
                stacklevel=2,
            )
            return max_grid
        n_grid *= 2


def uc_instance_to_dict(inst: UcInstance) -> dict:
    return {
        "units": [
            {"a": u.a, "b": u.b, "c": u.c, "p_min": u.p_min, "p_max": u.p_max}
            for u in inst.units
        ],
        "load": inst.load,
    }


def uc_instance_from_dict(data: dict) -> UcInstance:
    return UcInstance(
        units=tuple(UcUnit(**u) for u in data["units"]), load=float(data["load"])
    )
