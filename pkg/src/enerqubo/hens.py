"""Minimum-cost heat matches between sources and sinks (one temperature interval).

Each source i offers supply[i] units of heat and each sink j demands
demand[j]; opening a match (i, j) costs cost[i, j] and lets heat flow up to
``min(supply[i], demand[j])``.  Supplies and demands must balance.  The
discretized form replaces each continuous flow q_ij by N grid levels
``U_ij * k / N`` selected through one-hot bits z(i,j,k) tied to the match
bit w(i,j).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import networkx as nx
import numpy as np

from .errors import InfeasibleError, OracleSizeError
from .qubo import Qubo, _add_squared
from .varmap import PenaltyWeights, VarMap

_ORACLE_PAIRS = 16

# weights from the heat-match calibration: both far above typical match costs
DEFAULT_WEIGHTS = PenaltyWeights(20.0, 5.0)


def _tol(scale: float) -> float:
    return 1e-9 * max(1.0, abs(scale))


@dataclass(frozen=True)
class HensInstance:
    supply: np.ndarray
    demand: np.ndarray
    cost: np.ndarray

    def __post_init__(self) -> None:
        supply = np.asarray(self.supply, dtype=float)
        demand = np.asarray(self.demand, dtype=float)
        cost = np.asarray(self.cost, dtype=float)
        if supply.ndim != 1 or demand.ndim != 1:
            raise ValueError("supply and demand must be vectors")
        if cost.shape != (supply.size, demand.size):
            raise ValueError("cost matrix must be sources x sinks")
        for name, arr in (("supply", supply), ("demand", demand), ("cost", cost)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} entries must be finite")
            if (arr < 0).any():
                raise ValueError(f"{name} entries must be nonnegative")
        total = supply.sum()
        if abs(total - demand.sum()) > _tol(total):
            raise ValueError("total supply must equal total demand")
        for arr in (supply, demand, cost):
            arr.setflags(write=False)
        object.__setattr__(self, "supply", supply)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "cost", cost)

    @property
    def m(self) -> int:
        return self.supply.size

    @property
    def n(self) -> int:
        return self.demand.size

    def capacity(self) -> np.ndarray:
        """Per-pair flow bound ``U_ij = min(supply_i, demand_j)``."""
        return np.minimum(self.supply[:, None], self.demand[None, :])


@dataclass(frozen=True)
class DiscretizedHens:
    base: HensInstance
    n_grid: int
    capacity: np.ndarray
    flows: tuple[tuple[tuple[float, ...], ...], ...]  # [i][j] -> grid values

    @property
    def zero_capacity_pairs(self) -> int:
        return int((self.capacity <= 0.0).sum())


def hens_discretize(inst: HensInstance, n_grid: int) -> DiscretizedHens:
    """Uniform flow grids ``U_ij * k / N`` for k = 1..N; empty where U_ij = 0."""
    if n_grid < 1:
        raise ValueError("grid count must be >= 1")
    capacity = inst.capacity()
    flows = []
    for i in range(inst.m):
        row = []
        for j in range(inst.n):
            u = capacity[i, j]
            if u <= 0.0:
                row.append(())
            else:
                row.append(tuple(u * k / n_grid for k in range(1, n_grid + 1)))
        flows.append(tuple(row))
    capacity.setflags(write=False)
    return DiscretizedHens(inst, n_grid, capacity, tuple(flows))


@dataclass(frozen=True)
class HensSolution:
    matches: np.ndarray  # m x n of {0, 1}
    flows: np.ndarray  # m x n heat transfers
    total_cost: float
    violations: tuple[str, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations


def hens_objective(inst: HensInstance, matches, flows) -> HensSolution:
    """Evaluate matches and flows, recording every constraint violation."""
    w = np.asarray(matches, dtype=int)
    q = np.asarray(flows, dtype=float)
    shape = (inst.m, inst.n)
    if w.shape != shape or q.shape != shape:
        raise ValueError(f"matches and flows must both be {shape}")
    violations = []
    capacity = inst.capacity()
    for i in range(inst.m):
        r = q[i].sum() - inst.supply[i]
        if abs(r) > _tol(inst.supply[i]):
            violations.append(f"source {i + 1}: balance residual {r:.6g}")
    for j in range(inst.n):
        r = q[:, j].sum() - inst.demand[j]
        if abs(r) > _tol(inst.demand[j]):
            violations.append(f"sink {j + 1}: balance residual {r:.6g}")
    for i in range(inst.m):
        for j in range(inst.n):
            limit = capacity[i, j] * w[i, j]
            if q[i, j] < -_tol(capacity[i, j]):
                violations.append(f"pair ({i + 1},{j + 1}): negative flow")
            elif q[i, j] > limit + _tol(capacity[i, j]):
                violations.append(
                    f"pair ({i + 1},{j + 1}): flow {q[i, j]:.6g} above {limit:.6g}"
                )
    total = float((inst.cost * w).sum())
    return HensSolution(w, q, total, tuple(violations))


def hens_to_qubo(
    disc: DiscretizedHens, weights: PenaltyWeights | None = None
) -> tuple[Qubo, VarMap]:
    """QUBO over match bits w(i,j) and flow-level bits z(i,j,k).

    Linear cost on each match bit; penalties: weight a on every per-pair
    residual ``(w_ij - sum_k z_ijk)^2`` (summed over all pairs), weight b on
    each squared supply and demand balance residual.  Pairs with zero
    capacity keep their match bit but carry no flow bits.
    """
    if weights is None:
        weights = DEFAULT_WEIGHTS
    if weights.a <= 0 or weights.b <= 0:
        raise ValueError("heat-match penalties must be positive")
    inst = disc.base
    vm = VarMap()
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    offset = 0.0
    w_idx = {}
    z_idx = {}
    for i in range(inst.m):
        for j in range(inst.n):
            w_idx[i, j] = vm.add(f"w({i + 1},{j + 1})")
            z_idx[i, j] = [
                vm.add(f"z({i + 1},{j + 1},{k + 1})")
                for k in range(len(disc.flows[i][j]))
            ]

    for (i, j), wi in w_idx.items():
        c = float(inst.cost[i, j])
        if c != 0.0:
            linear[wi] = linear.get(wi, 0.0) + c
        link = {wi: 1.0}
        for zi in z_idx[i, j]:
            link[zi] = -1.0
        offset += _add_squared(linear, quadratic, link, 0.0, weights.a)

    for i in range(inst.m):
        terms = {}
        for j in range(inst.n):
            for k, zi in enumerate(z_idx[i, j]):
                terms[zi] = -disc.flows[i][j][k]
        offset += _add_squared(linear, quadratic, terms, inst.supply[i], weights.b)
    for j in range(inst.n):
        terms = {}
        for i in range(inst.m):
            for k, zi in enumerate(z_idx[i, j]):
                terms[zi] = -disc.flows[i][j][k]
        offset += _add_squared(linear, quadratic, terms, inst.demand[j], weights.b)

    return Qubo(len(vm), linear, quadratic, offset, vm.names()), vm


def hens_decode(bits, varmap: VarMap, disc: DiscretizedHens) -> HensSolution:
    """Read matches and grid flows off the bits.

    Flows follow the literal encoding q_ij = sum_k flow_ijk * z_ijk; multiple
    selected levels are summed and reported as a violation, as is any
    mismatch with the match bit.
    """
    inst = disc.base
    w = np.zeros((inst.m, inst.n), dtype=int)
    q = np.zeros((inst.m, inst.n))
    extra = []
    for i in range(inst.m):
        for j in range(inst.n):
            w[i, j] = int(bits[varmap.index(f"w({i + 1},{j + 1})")])
            selected = [
                k
                for k in range(len(disc.flows[i][j]))
                if int(bits[varmap.index(f"z({i + 1},{j + 1},{k + 1})")])
            ]
            if len(selected) > 1:
                extra.append(
                    f"pair ({i + 1},{j + 1}): {len(selected)} flow levels selected"
                )
            if len(selected) != w[i, j]:
                extra.append(
                    f"pair ({i + 1},{j + 1}): match bit {w[i, j]} but "
                    f"{len(selected)} levels"
                )
            q[i, j] = sum(disc.flows[i][j][k] for k in selected)
    base = hens_objective(inst, w, q)
    return HensSolution(
        base.matches, base.flows, base.total_cost, base.violations + tuple(extra)
    )


def _transport_flow(inst: HensInstance, mask: np.ndarray):
    """Max flow through the matches in ``mask``; returns (value, flows)."""
    g = nx.DiGraph()
    capacity = inst.capacity()
    for i in range(inst.m):
        if inst.supply[i] > 0:
            g.add_edge("s", ("u", i), capacity=float(inst.supply[i]))
    for j in range(inst.n):
        if inst.demand[j] > 0:
            g.add_edge(("v", j), "t", capacity=float(inst.demand[j]))
    for i in range(inst.m):
        for j in range(inst.n):
            if mask[i, j] and capacity[i, j] > 0:
                g.add_edge(("u", i), ("v", j), capacity=float(capacity[i, j]))
    if "s" not in g or "t" not in g:
        return 0.0, np.zeros((inst.m, inst.n))
    value, flow_dict = nx.maximum_flow(g, "s", "t")
    q = np.zeros((inst.m, inst.n))
    for i in range(inst.m):
        for (kind, j), f in flow_dict.get(("u", i), {}).items():
            if kind == "v":
                q[i, j] = f
    return float(value), q


def hens_oracle(inst: HensInstance) -> HensSolution:
    """Exact minimum-cost match set by subset enumeration (m*n <= 16).

    Candidate match sets are scanned in ascending (cost, lexicographic w)
    order; the first whose transportation subproblem carries the full supply
    is optimal.  The max-flow certificate becomes the returned flow plan.
    """
    pairs = inst.m * inst.n
    if pairs > _ORACLE_PAIRS:
        raise OracleSizeError(
            f"match oracle limited to {_ORACLE_PAIRS} source-sink pairs, got {pairs}"
        )
    total = inst.supply.sum()
    if total <= _tol(total):  # nothing to move
        return HensSolution(
            np.zeros((inst.m, inst.n), dtype=int),
            np.zeros((inst.m, inst.n)),
            0.0,
            (),
        )
    masks = np.arange(1 << pairs, dtype=np.int64)
    shifts = pairs - 1 - np.arange(pairs)
    bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(bool)
    costs = bits @ inst.cost.ravel()
    # a candidate must cover every positive source row and demand column
    cover = np.ones(masks.size, dtype=bool)
    grid = bits.reshape(-1, inst.m, inst.n)
    for i in range(inst.m):
        if inst.supply[i] > _tol(inst.supply[i]):
            cover &= grid[:, i, :].any(axis=1)
    for j in range(inst.n):
        if inst.demand[j] > _tol(inst.demand[j]):
            cover &= grid[:, :, j].any(axis=1)
    order = np.lexsort((masks, costs))
    for idx in order:
        if not cover[idx]:
            continue
        mask = grid[idx]
        value, q = _transport_flow(inst, mask)
        if value >= total - _tol(total):
            sol = hens_objective(inst, mask.astype(int), q)
            if sol.violations:
                raise InfeasibleError(
                    f"max-flow certificate failed validation: {sol.violations}"
                )
            return sol
    raise InfeasibleError("no match subset carries the full supply")


def hens_instance_to_dict(inst: HensInstance) -> dict:
    return {
        "supply": inst.supply.tolist(),
        "demand": inst.demand.tolist(),
        "cost": inst.cost.tolist(),
    }


def hens_instance_from_dict(data: dict) -> HensInstance:
    return HensInstance(
        supply=np.array(data["supply"], dtype=float),
        demand=np.array(data["demand"], dtype=float),
        cost=np.array(data["cost"], dtype=float),
    )
