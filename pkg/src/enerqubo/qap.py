"""Facility location-allocation as a quadratic assignment problem.

Koopmans-Beckmann form: assign each of n plants to one of n locations,
minimizing ``sum_{p,q} flow[p,q] * cost[perm[p], perm[q]]`` where ``flow`` is
the plant-to-plant energy flow and ``cost`` the location-to-location unit
transport cost.  Provides the exact objective, the penalty QUBO over the n^2
assignment bits, a decoder, an exact branch-and-bound solver for small
instances, and a QAPLIB-format parser.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import OracleSizeError
from .qubo import Qubo, _add_squared
from .varmap import PenaltyWeights, VarMap


@dataclass(frozen=True)
class QapInstance:
    """Problem data: location cost matrix and plant flow matrix, both n x n."""

    cost: np.ndarray
    flow: np.ndarray

    def __post_init__(self) -> None:
        cost = np.asarray(self.cost, dtype=float)
        flow = np.asarray(self.flow, dtype=float)
        if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
            raise ValueError("cost matrix must be square")
        if flow.shape != cost.shape:
            raise ValueError("flow matrix must match the cost matrix shape")
        if not (np.isfinite(cost).all() and np.isfinite(flow).all()):
            raise ValueError("matrix entries must be finite")
        if (cost < 0).any() or (flow < 0).any():
            raise ValueError("matrix entries must be nonnegative")
        cost.setflags(write=False)
        flow.setflags(write=False)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "flow", flow)

    @property
    def n(self) -> int:
        return self.cost.shape[0]


@dataclass(frozen=True)
class QapSolution:
    """Feasible assignment: ``perm[p]`` is the location of plant p."""

    perm: tuple[int, ...]
    objective: float


@dataclass(frozen=True)
class QapInfeasibility:
    """Rows/columns of the assignment matrix whose sums differ from one."""

    bad_rows: tuple[int, ...]
    bad_cols: tuple[int, ...]


def _check_perm(perm, n: int) -> np.ndarray:
    p = np.asarray(perm, dtype=int)
    if p.shape != (n,) or sorted(p.tolist()) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {perm!r}")
    return p


def qap_objective(inst: QapInstance, perm) -> float:
    """Transport cost of an assignment: ``sum flow[p,q] * cost[perm[p],perm[q]]``."""
    p = _check_perm(perm, inst.n)
    return float((inst.flow * inst.cost[np.ix_(p, p)]).sum())


def qap_default_penalty(inst: QapInstance) -> float:
    """Constraint weight ``1 + n * max(cost_ij * flow_pq)``.

    Large enough that every unconstrained minimizer of the penalty QUBO is a
    permutation matrix (brute-force validated for small n in the test suite).
    """
    if inst.n == 0:
        return 1.0
    return 1.0 + inst.n * float(inst.cost.max() * inst.flow.max())


def qap_to_qubo(
    inst: QapInstance, weights: PenaltyWeights | None = None
) -> tuple[Qubo, VarMap]:
    """Penalty QUBO over n^2 bits x(p,i) = "plant p sits at location i".

    Objective terms ``cost[i,j]*flow[p,q]`` couple x(p,i) with x(q,j); the
    two assignment constraints enter as squared penalties with weight
    ``weights.a``, which expands to -2a on every bit, +2a on same-location and
    same-plant pairs, and a constant offset of ``2*n*a``.
    """
    if weights is None:
        weights = PenaltyWeights(qap_default_penalty(inst))
    if weights.a <= 0:
        raise ValueError("QAP penalty weight must be positive")
    n = inst.n
    vm = VarMap()
    for p in range(n):
        for i in range(n):
            vm.add(f"x({p + 1},{i + 1})")

    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    flow, cost = inst.flow, inst.cost
    for p in range(n):
        for q in range(n):
            t = flow[p, q]
            if t == 0.0:
                continue
            for i in range(n):
                for j in range(n):
                    coeff = float(cost[i, j] * t)
                    if coeff == 0.0:
                        continue
                    v1 = p * n + i
                    v2 = q * n + j
                    if v1 == v2:
                        linear[v1] = linear.get(v1, 0.0) + coeff
                    else:
                        key = (v1, v2) if v1 < v2 else (v2, v1)
                        quadratic[key] = quadratic.get(key, 0.0) + coeff

    offset = 0.0
    for i in range(n):  # exactly one plant per location
        terms = {p * n + i: 1.0 for p in range(n)}
        offset += _add_squared(linear, quadratic, terms, -1.0, weights.a)
    for p in range(n):  # exactly one location per plant
        terms = {p * n + i: 1.0 for i in range(n)}
        offset += _add_squared(linear, quadratic, terms, -1.0, weights.a)

    return Qubo(n * n, linear, quadratic, offset, vm.names()), vm


def qap_decode(bits, varmap: VarMap, inst: QapInstance):
    """Read an assignment matrix off the bits.

    Returns a :class:`QapSolution` when the bits form a permutation matrix,
    otherwise a :class:`QapInfeasibility` listing the violated rows/columns.
    """
    n = inst.n
    x = np.zeros((n, n), dtype=int)
    for p in range(n):
        for i in range(n):
            x[p, i] = int(bits[varmap.index(f"x({p + 1},{i + 1})")])
    bad_rows = tuple(int(p) for p in range(n) if x[p].sum() != 1)
    bad_cols = tuple(int(i) for i in range(n) if x[:, i].sum() != 1)
    if bad_rows or bad_cols:
        return QapInfeasibility(bad_rows, bad_cols)
    perm = tuple(int(np.argmax(x[p])) for p in range(n))
    return QapSolution(perm, qap_objective(inst, perm))


def parse_qaplib(text: str) -> QapInstance:
    """Parse QAPLIB plain text: n, then the n x n flow matrix, then cost.

    Note QAPLIB files list two matrices without naming them; this parser
    assigns the first to ``flow`` and the second to ``cost``.  The optimal
    value is unaffected by the order for any instance because the objective
    is invariant under swapping the matrices and inverting the permutation.
    """
    tokens = text.split()
    if not tokens:
        raise ValueError("empty QAPLIB input")
    try:
        n = int(tokens[0])
    except ValueError as exc:
        raise ValueError(f"bad size token {tokens[0]!r}") from exc
    if n < 1:
        raise ValueError(f"instance size must be positive, got {n}")
    expected = 1 + 2 * n * n
    if len(tokens) < expected:
        raise ValueError(
            f"truncated input: expected {expected} tokens for n={n}, got {len(tokens)}"
        )
    if len(tokens) > expected:
        raise ValueError(
            f"size mismatch: expected {expected} tokens for n={n}, got {len(tokens)}"
        )
    try:
        values = [float(t) for t in tokens[1:]]
    except ValueError as exc:
        raise ValueError(f"non-numeric token in matrix data: {exc}") from exc
    flow = np.array(values[: n * n]).reshape(n, n)
    cost = np.array(values[n * n :]).reshape(n, n)
    return QapInstance(cost=cost, flow=flow)


# ---------------------------------------------------------------------------
# Exact solver: depth-first search over partial assignments with an
# admissible lower bound (assignment relaxation of the placed/unplaced
# interactions plus a rearrangement bound on the unplaced block).


def _pair_increment(flow, cost, placed, locs, plant, loc) -> float:
    inc = float(flow[plant, plant] * cost[loc, loc])
    if placed:
        pl = np.asarray(placed)
        lc = np.asarray(locs)
        inc += float(flow[pl, plant] @ cost[lc, loc])
        inc += float(flow[plant, pl] @ cost[loc, lc])
    return inc


def _node_bound(flow, cost, placed, locs, rest, free, cutoff) -> float:
    """Lower bound on the completion cost; may return early once >= cutoff."""
    u = len(rest)
    if u == 0:
        return 0.0
    restA = np.asarray(rest)
    freeA = np.asarray(free)
    inter = np.outer(flow.diagonal()[restA], cost.diagonal()[freeA])
    if placed:
        pl = np.asarray(placed)
        lc = np.asarray(locs)
        inter = inter + flow[np.ix_(pl, restA)].T @ cost[np.ix_(lc, freeA)]
        inter = inter + flow[np.ix_(restA, pl)] @ cost[np.ix_(freeA, lc)].T
    mask = ~np.eye(u, dtype=bool)
    off_flow = np.sort(flow[np.ix_(restA, restA)][mask])[::-1]
    off_cost = np.sort(cost[np.ix_(freeA, freeA)][mask])
    within = float(off_flow @ off_cost)
    quick = within + float(inter.min(axis=1).sum())
    if quick >= cutoff:
        return quick
    ri, ci = linear_sum_assignment(inter)
    return within + float(inter[ri, ci].sum())


def _local_search(flow, cost, restarts=6, seed=0) -> tuple[np.ndarray, float]:
    n = flow.shape[0]
    rng = np.random.default_rng(seed)
    best_perm = np.arange(n)
    best_val = float((flow * cost[np.ix_(best_perm, best_perm)]).sum())
    for restart in range(restarts):
        perm = np.arange(n) if restart == 0 else rng.permutation(n)
        val = float((flow * cost[np.ix_(perm, perm)]).sum())
        improved = True
        while improved:
            improved = False
            for p in range(n):
                for q in range(p + 1, n):
                    perm[p], perm[q] = perm[q], perm[p]
                    v = float((flow * cost[np.ix_(perm, perm)]).sum())
                    if v < val - 1e-12:
                        val = v
                        improved = True
                    else:
                        perm[p], perm[q] = perm[q], perm[p]
        if val < best_val:
            best_val = val
            best_perm = perm.copy()
    return best_perm, best_val


def _optimal_value(flow, cost, upper) -> float:
    n = flow.shape[0]
    weight = flow.sum(axis=0) + flow.sum(axis=1)
    order = sorted(range(n), key=lambda p: (-weight[p], p))
    best = upper
    used = np.zeros(n, dtype=bool)
    placed: list[int] = []
    locs: list[int] = []

    def dfs(depth: int, partial: float) -> None:
        nonlocal best
        if depth == n:
            if partial < best:
                best = partial
            return
        plant = order[depth]
        rest = order[depth + 1 :]
        options = []
        for loc in range(n):
            if used[loc]:
                continue
            newp = partial + _pair_increment(flow, cost, placed, locs, plant, loc)
            if newp < best:  # matrices are nonnegative, completions only add
                options.append((newp, loc))
        options.sort()
        for newp, loc in options:
            if newp >= best:
                continue
            free = [l for l in range(n) if not used[l] and l != loc]
            used[loc] = True
            placed.append(plant)
            locs.append(loc)
            lb = newp + _node_bound(flow, cost, placed, locs, rest, free, best - newp)
            if lb < best:
                dfs(depth + 1, newp)
            placed.pop()
            locs.pop()
            used[loc] = False

    dfs(0, 0.0)
    return best


def _lex_smallest_at(flow, cost, target) -> list[int]:
    """First permutation in lexicographic order whose cost equals target."""
    n = flow.shape[0]
    eps = 1e-9 * max(1.0, abs(target))
    used = np.zeros(n, dtype=bool)
    locs: list[int] = []
    perm = [-1] * n

    def dfs(depth: int, partial: float) -> bool:
        if depth == n:
            return partial <= target + eps
        placed = list(range(depth))
        rest = list(range(depth + 1, n))
        for loc in range(n):
            if used[loc]:
                continue
            newp = partial + _pair_increment(flow, cost, placed, locs, depth, loc)
            if newp > target + eps:
                continue
            free = [l for l in range(n) if not used[l] and l != loc]
            used[loc] = True
            locs.append(loc)
            bound = _node_bound(
                flow, cost, placed + [depth], locs, rest, free, target + eps - newp
            )
            if newp + bound <= target + eps and dfs(depth + 1, newp):
                perm[depth] = loc
                used[loc] = False
                locs.pop()
                return True
            locs.pop()
            used[loc] = False
        return False

    if not dfs(0, 0.0):
        raise AssertionError("no permutation attains the computed optimum")
    return perm


def qap_oracle(inst: QapInstance, max_size: int = 12) -> QapSolution:
    """Exact optimum by pruned search; deterministic lexicographic tie-break."""
    n = inst.n
    if n > max_size:
        raise OracleSizeError(
            f"QAP oracle limited to n <= {max_size}, instance has n = {n}"
        )
    flow, cost = inst.flow, inst.cost
    if n == 1:
        return QapSolution((0,), qap_objective(inst, [0]))
    _, heuristic = _local_search(flow, cost)
    value = _optimal_value(flow, cost, heuristic)
    perm = _lex_smallest_at(flow, cost, value)
    return QapSolution(tuple(perm), qap_objective(inst, perm))
