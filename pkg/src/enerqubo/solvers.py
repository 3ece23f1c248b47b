"""QUBO solvers: exact enumeration, simulated annealing, tabu search, and a
decompose-and-stitch hybrid for models larger than the sub-solver capacity.

All stochastic solvers are deterministic given (model, params, seed): reads
and restarts draw from RNG streams derived from the seed, and results are
aggregated by a canonical (energy, bits) sort.  Every reported energy is
recomputed with ``Qubo.energy`` before it enters a sample set.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import InternalCheckError
from .qubo import Qubo

_BRUTE_FORCE_LIMIT = 24
_ENUM_CHUNK = 1 << 20

# meta entries excluded from canonical serialization (vary run to run)
_VOLATILE_META = ("elapsed_s",)


@dataclass(frozen=True)
class SampleRecord:
    bits: tuple[int, ...]
    energy: float
    occurrences: int = 1


@dataclass
class SampleSet:
    """Energy-sorted solver output with assignment multiplicities."""

    records: list[SampleRecord]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.records = sorted(self.records, key=lambda r: (r.energy, r.bits))

    def best(self) -> SampleRecord:
        if not self.records:
            raise ValueError("empty sample set")
        return self.records[0]

    def merge(self, other: "SampleSet") -> "SampleSet":
        """Combine two sample sets, summing occurrences of identical bits."""
        counts: dict[tuple[int, ...], SampleRecord] = {}
        for rec in self.records + other.records:
            prev = counts.get(rec.bits)
            if prev is None:
                counts[rec.bits] = rec
            else:
                counts[rec.bits] = SampleRecord(
                    rec.bits, prev.energy, prev.occurrences + rec.occurrences
                )
        return SampleSet(list(counts.values()), dict(self.meta))

    def to_dict(self) -> dict:
        """Canonical JSON form; volatile meta entries (timings) are dropped."""
        meta = {k: v for k, v in self.meta.items() if k not in _VOLATILE_META}
        return {
            "meta": meta,
            "records": [
                {
                    "bits": "".join(str(b) for b in rec.bits),
                    "energy": rec.energy,
                    "occurrences": rec.occurrences,
                }
                for rec in self.records
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSet":
        records = [
            SampleRecord(
                tuple(int(c) for c in rec["bits"]),
                float(rec["energy"]),
                int(rec["occurrences"]),
            )
            for rec in data.get("records", [])
        ]
        return cls(records, dict(data.get("meta", {})))


@dataclass(frozen=True)
class SaParams:
    reads: int = 100
    sweeps: int = 1000
    beta_hot: float | None = None  # derived from the model when None
    beta_cold: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reads < 1 or self.sweeps < 1:
            raise ValueError("reads and sweeps must be >= 1")
        if self.beta_hot is not None and self.beta_cold is not None:
            if not 0 < self.beta_hot <= self.beta_cold:
                raise ValueError("need 0 < beta_hot <= beta_cold")


@dataclass(frozen=True)
class TabuParams:
    tenure: int | None = None  # default min(20, max(1, n // 4))
    max_stall: int | None = None  # default 10 * n non-improving iterations
    restarts: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tenure is not None and self.tenure < 1:
            raise ValueError("tenure must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class DecompParams:
    subproblem_size: int = 40
    patience: int = 2  # non-improving passes before stopping
    brute_limit: int = 22  # sub-QUBOs at or below this size are solved exactly
    seed: int = 0

    def __post_init__(self) -> None:
        if self.subproblem_size < 2:
            raise ValueError("subproblem size must be >= 2")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


def _adjacency(model: Qubo):
    """Per-variable neighbor index/weight arrays and the linear vector."""
    n = model.num_vars
    lin = np.zeros(n)
    for i, v in model.linear.items():
        lin[i] = v
    nbr: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (i, j), v in model.quadratic.items():
        nbr[i].append((j, v))
        nbr[j].append((i, v))
    idx = [np.array([p for p, _ in lst], dtype=np.intp) for lst in nbr]
    wts = [np.array([w for _, w in lst]) for lst in nbr]
    return lin, idx, wts


def _fields_for(bits: np.ndarray, lin, idx, wts) -> np.ndarray:
    """Local field f_i = linear_i + sum_j quad_ij x_j for the current bits."""
    f = lin.copy()
    for i in np.nonzero(bits)[0]:
        f[idx[i]] += wts[i]
    return f


def _finalize(model: Qubo, pool: dict[tuple[int, ...], int], meta: dict) -> SampleSet:
    records = [
        SampleRecord(bits, model.energy(bits), count) for bits, count in pool.items()
    ]
    return SampleSet(records, meta)


def brute_force(model: Qubo, limit: int = _BRUTE_FORCE_LIMIT) -> SampleSet:
    """Exact global minimum by full enumeration; lexicographic tie-break.

    Enumerates energies in vectorized chunks.  Candidates within a small
    absolute window of the chunk minimum are re-evaluated with the canonical
    ``Qubo.energy`` so the reported optimum is exact even where the
    vectorized sum differs by round-off.
    """
    n = model.num_vars
    if n > limit:
        raise ValueError(f"brute force limited to {limit} variables, model has {n}")
    t0 = time.perf_counter()
    meta = {"solver": "brute", "num_vars": n}
    if n == 0:
        meta["elapsed_s"] = time.perf_counter() - t0
        return SampleSet([SampleRecord((), model.offset, 1)], meta)

    lin = np.zeros(n)
    for i, v in model.linear.items():
        lin[i] = v
    quad_items = [(i, j, v) for (i, j), v in model.quadratic.items()]
    window = 1e-9 * max(1.0, model.coefficient_scale())

    best_bits: tuple[int, ...] | None = None
    best_energy = math.inf
    total = 1 << n
    for start in range(0, total, _ENUM_CHUNK):
        stop = min(start + _ENUM_CHUNK, total)
        idx = np.arange(start, stop, dtype=np.int64)
        bits = ((idx[:, None] >> (n - 1 - np.arange(n))) & 1).astype(np.float64)
        energies = model.offset + bits @ lin
        for i, j, v in quad_items:
            energies += v * (bits[:, i] * bits[:, j])
        chunk_min = energies.min()
        if chunk_min > best_energy + window:
            continue
        cand = np.nonzero(energies <= chunk_min + window)[0][:4096]
        for c in cand:
            b = tuple(int(v) for v in bits[c])
            e = model.energy(b)
            if e < best_energy or (e == best_energy and b < best_bits):
                best_energy = e
                best_bits = b
    meta["elapsed_s"] = time.perf_counter() - t0
    return SampleSet([SampleRecord(best_bits, best_energy, 1)], meta)


def _default_betas(model: Qubo) -> tuple[float, float]:
    """Schedule endpoints derived from coefficient magnitudes.

    Hot end accepts the worst single-flip uphill move with probability 1/2;
    cold end freezes moves at the smallest coefficient scale.
    """
    mags = [abs(v) for v in model.linear.values()]
    mags += [abs(v) for v in model.quadratic.values()]
    if not mags:
        return 1.0, 1.0
    per_var: dict[int, float] = {}
    for i, v in model.linear.items():
        per_var[i] = per_var.get(i, 0.0) + abs(v)
    for (i, j), v in model.quadratic.items():
        per_var[i] = per_var.get(i, 0.0) + abs(v)
        per_var[j] = per_var.get(j, 0.0) + abs(v)
    de_max = max(per_var.values())
    de_min = min(m for m in mags if m > 0)
    hot = math.log(2.0) / de_max
    cold = math.log(100.0) / de_min
    if cold < hot:
        cold = hot
    return hot, cold


def simulated_anneal(model: Qubo, params: SaParams | None = None) -> SampleSet:
    """Single-flip Metropolis annealing over a geometric beta ladder.

    Each read starts from a seeded random assignment and keeps its own RNG
    stream (``seed ^ read``), so results are independent of execution order.
    The best state seen within a read is that read's sample.
    """
    params = params or SaParams()
    n = model.num_vars
    if n < 1:
        raise ValueError("model must have at least one variable")
    t0 = time.perf_counter()
    hot, cold = params.beta_hot, params.beta_cold
    if hot is None or cold is None:
        d_hot, d_cold = _default_betas(model)
        hot = d_hot if hot is None else hot
        cold = max(d_cold if cold is None else cold, hot)
    if params.sweeps == 1:
        betas = np.array([hot])
    else:
        betas = hot * (cold / hot) ** (np.arange(params.sweeps) / (params.sweeps - 1))

    lin, idx, wts = _adjacency(model)
    pool: dict[tuple[int, ...], int] = {}
    for read in range(params.reads):
        rng = np.random.default_rng(params.seed ^ read)
        bits = rng.integers(0, 2, n, dtype=np.int8)
        f = _fields_for(bits, lin, idx, wts)
        energy = model.offset + float(lin @ bits)
        for (i, j), v in model.quadratic.items():
            if bits[i] and bits[j]:
                energy += v
        best_bits = bits.copy()
        best_energy = energy
        for beta in betas:
            unif = rng.random(n)
            for i in range(n):
                de = (1 - 2 * bits[i]) * f[i]
                if de <= 0.0 or unif[i] < math.exp(-beta * de):
                    sign = 1 - 2 * bits[i]  # +1 when turning on
                    bits[i] += sign
                    f[idx[i]] += sign * wts[i]
                    energy += de
                    if energy < best_energy:
                        best_energy = energy
                        best_bits = bits.copy()
        key = tuple(int(b) for b in best_bits)
        pool[key] = pool.get(key, 0) + 1
    meta = {
        "solver": "sa",
        "seed": params.seed,
        "reads": params.reads,
        "sweeps": params.sweeps,
        "beta_hot": hot,
        "beta_cold": cold,
        "elapsed_s": time.perf_counter() - t0,
    }
    return _finalize(model, pool, meta)


def tabu_search(model: Qubo, params: TabuParams | None = None) -> SampleSet:
    """Steepest-descent single-flip search with a recency tabu list.

    A move is admissible when its variable is not tabu or when it beats the
    incumbent (aspiration).  After ``max_stall`` non-improving iterations the
    search restarts from a perturbed copy of the incumbent.
    """
    params = params or TabuParams()
    n = model.num_vars
    if n < 1:
        raise ValueError("model must have at least one variable")
    t0 = time.perf_counter()
    tenure = params.tenure if params.tenure is not None else min(20, max(1, n // 4))
    max_stall = params.max_stall if params.max_stall is not None else 10 * n
    lin, idx, wts = _adjacency(model)
    rng = np.random.default_rng(params.seed)

    incumbent_bits: np.ndarray | None = None
    incumbent_energy = math.inf
    pool: dict[tuple[int, ...], int] = {}
    for restart in range(params.restarts):
        if restart == 0 or incumbent_bits is None:
            bits = rng.integers(0, 2, n, dtype=np.int8)
        else:
            bits = incumbent_bits.copy()
            flips = rng.choice(n, size=max(1, n // 4), replace=False)
            bits[flips] ^= 1
        f = _fields_for(bits, lin, idx, wts)
        energy = model.offset + float(lin @ bits)
        for (i, j), v in model.quadratic.items():
            if bits[i] and bits[j]:
                energy += v
        if energy < incumbent_energy - 1e-12:
            incumbent_energy = energy
            incumbent_bits = bits.copy()
        tabu_until = np.zeros(n, dtype=np.int64)
        it = 0
        stall = 0
        local_best = energy
        while stall < max_stall:
            it += 1
            gains = (1 - 2 * bits) * f
            admissible = (tabu_until < it) | (energy + gains < incumbent_energy - 1e-12)
            if admissible.any():
                masked = np.where(admissible, gains, math.inf)
                i = int(np.argmin(masked))
            else:
                i = int(np.argmin(gains))
            sign = 1 - 2 * bits[i]
            bits[i] += sign
            f[idx[i]] += sign * wts[i]
            energy += gains[i]
            tabu_until[i] = it + tenure
            if energy < incumbent_energy - 1e-12:
                incumbent_energy = energy
                incumbent_bits = bits.copy()
            if energy < local_best - 1e-12:
                local_best = energy
                stall = 0
            else:
                stall += 1
        key = tuple(int(b) for b in incumbent_bits)
        pool[key] = pool.get(key, 0) + 1
    meta = {
        "solver": "tabu",
        "seed": params.seed,
        "restarts": params.restarts,
        "tenure": tenure,
        "elapsed_s": time.perf_counter() - t0,
    }
    return _finalize(model, pool, meta)


def _greedy_descent(bits, f, lin, idx, wts, energy):
    while True:
        gains = (1 - 2 * bits) * f
        i = int(np.argmin(gains))
        if gains[i] >= -1e-12:
            return energy
        sign = 1 - 2 * bits[i]
        bits[i] += sign
        f[idx[i]] += sign * wts[i]
        energy += gains[i]


def decompose_solve(model: Qubo, params: DecompParams | None = None) -> SampleSet:
    """qbsolv-style hybrid: clamp most variables, solve small sub-QUBOs.

    Keeps a full incumbent assignment.  Each pass ranks the variables by
    single-flip gain magnitude and sweeps over consecutive blocks of that
    ranking; every block plus a random fill up to the subproblem size is
    freed, the clamped sub-QUBO is solved exactly (small) or with tabu
    search, and the stitched result is polished by a 1-flip descent and
    accepted when it improves the incumbent.  Stops after ``patience``
    consecutive passes without improvement.  Incumbent energy never
    increases.
    """
    params = params or DecompParams()
    n = model.num_vars
    if n < 1:
        raise ValueError("model must have at least one variable")
    t0 = time.perf_counter()

    def sub_solve(sub: Qubo, seed: int) -> SampleSet:
        if sub.num_vars <= params.brute_limit:
            return brute_force(sub)
        return tabu_search(sub, TabuParams(seed=seed))

    meta = {
        "solver": "decomp",
        "seed": params.seed,
        "subproblem_size": params.subproblem_size,
        "pass_energies": [],
    }
    if n <= params.subproblem_size:
        result = sub_solve(model, params.seed)
        best = result.best()
        meta["pass_energies"] = [best.energy]
        meta["elapsed_s"] = time.perf_counter() - t0
        return SampleSet([SampleRecord(best.bits, best.energy, 1)], meta)

    rng = np.random.default_rng(params.seed)
    lin, idx, wts = _adjacency(model)
    bits = rng.integers(0, 2, n, dtype=np.int8)
    f = _fields_for(bits, lin, idx, wts)
    energy = model.offset + float(lin @ bits)
    for (i, j), v in model.quadratic.items():
        if bits[i] and bits[j]:
            energy += v
    energy = _greedy_descent(bits, f, lin, idx, wts, energy)
    incumbent = tuple(int(b) for b in bits)
    incumbent_energy = model.energy(incumbent)

    block = max(1, params.subproblem_size // 2)
    stall = 0
    pass_idx = 0
    while stall < params.patience:
        pass_idx += 1
        improved = False
        f = _fields_for(bits, lin, idx, wts)
        gains = (1 - 2 * bits) * f
        ranked = np.argsort(-np.abs(gains), kind="stable")
        for b in range(math.ceil(n / block)):
            chosen = set(int(i) for i in ranked[b * block : (b + 1) * block])
            if not chosen:
                continue
            pool = np.array([i for i in range(n) if i not in chosen])
            fill = rng.permutation(pool.size)[: params.subproblem_size - len(chosen)]
            free = sorted(chosen | set(int(i) for i in pool[fill]))
            fixed = {i: int(bits[i]) for i in range(n) if i not in set(free)}
            sub, free_order = model.clamp(fixed)
            result = sub_solve(sub, params.seed ^ (1009 * pass_idx + b))
            sub_best = result.best()
            stitched = bits.copy()
            for pos, orig in enumerate(free_order):
                stitched[orig] = sub_best.bits[pos]
            stitched_energy = model.energy(tuple(int(v) for v in stitched))
            if abs(stitched_energy - sub_best.energy) > 1e-6 * max(
                1.0, abs(stitched_energy)
            ):
                raise InternalCheckError(
                    "clamp arithmetic mismatch: "
                    f"sub energy {sub_best.energy} vs full {stitched_energy}"
                )
            # polish the stitched candidate with a cheap full-model descent
            sf = _fields_for(stitched, lin, idx, wts)
            _greedy_descent(stitched, sf, lin, idx, wts, stitched_energy)
            stitched_key = tuple(int(v) for v in stitched)
            stitched_energy = model.energy(stitched_key)
            if stitched_energy < incumbent_energy - 1e-12:
                incumbent = stitched_key
                incumbent_energy = stitched_energy
                bits = stitched
                improved = True
        stall = 0 if improved else stall + 1
        meta["pass_energies"].append(incumbent_energy)
    meta["passes"] = pass_idx
    meta["elapsed_s"] = time.perf_counter() - t0
    return SampleSet([SampleRecord(incumbent, incumbent_energy, 1)], meta)


def solve(model: Qubo, strategy: str, **options) -> SampleSet:
    """Dispatch to a solver by name: brute, sa, tabu, decomp, or vqe."""
    strategy = strategy.lower()
    if strategy == "brute":
        return brute_force(model)
    if strategy == "sa":
        return simulated_anneal(model, _build_params(SaParams, options))
    if strategy == "tabu":
        return tabu_search(model, _build_params(TabuParams, options))
    if strategy == "decomp":
        return decompose_solve(model, _build_params(DecompParams, options))
    if strategy == "vqe":
        from .gate import vqe_sample  # deferred: statevector path is optional

        return vqe_sample(model, **options)
    raise ValueError(f"unknown solver strategy {strategy!r}")


def _build_params(cls, options: dict):
    defaults = cls()
    known = {k: v for k, v in options.items() if hasattr(defaults, k)}
    unknown = set(options) - set(known)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} options: {sorted(unknown)}")
    return replace(defaults, **known)
