"""Benchmark harness: instance generation, formulate-solve-decode pipelines,
reference comparison, and CSV reporting.

References come from the exact oracles whenever the instance size permits;
externally supplied best-known values are used otherwise and flagged in the
report.  Deviations are ``100 * (objective - reference) / reference`` for
feasible rows with a positive reference.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import OracleSizeError, UsageError
from .hens import (
    HensInstance,
    HensSolution,
    hens_decode,
    hens_discretize,
    hens_instance_from_dict,
    hens_oracle,
    hens_to_qubo,
)
from .qap import (
    QapSolution,
    parse_qaplib,
    qap_decode,
    qap_oracle,
    qap_to_qubo,
)
from .solvers import solve
from .uc import (
    UcInstance,
    UcUnit,
    uc_decode,
    uc_discretize,
    uc_grid_oracle,
    uc_instance_from_dict,
    uc_to_qubo,
)
from .varmap import PenaltyWeights


@dataclass(frozen=True)
class GenSpec:
    """Sizes, coefficient ranges and grid for random instance generation."""

    family: str  # "uc" or "hens"
    units: int = 3
    sources: int = 4
    sinks: int = 3
    grids: int | None = None
    a_range: tuple[float, float] = (0.0, 10.0)
    b_range: tuple[float, float] = (0.5, 3.0)
    c_range: tuple[float, float] = (0.05, 1.0)
    p_min_range: tuple[float, float] = (0.5, 2.0)
    p_span_range: tuple[float, float] = (1.0, 8.0)
    cost_range: tuple[int, int] = (1, 6)
    flow_levels: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.family not in ("uc", "hens"):
            raise ValueError("generator family must be 'uc' or 'hens'")
        if self.units < 1 or self.sources < 1 or self.sinks < 1:
            raise ValueError("sizes must be positive")
        for name in ("a_range", "b_range", "c_range", "p_min_range", "p_span_range"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"invalid {name}: ({lo}, {hi})")
        if self.cost_range[0] < 0 or self.cost_range[1] < self.cost_range[0]:
            raise ValueError("invalid cost range")
        if self.flow_levels < 1:
            raise ValueError("flow_levels must be >= 1")
        if self.grids is not None and self.grids < 1:
            raise ValueError("grids must be >= 1")


def gen_uc(spec: GenSpec) -> UcInstance:
    """Random convex unit commitment instance; deterministic per seed.

    Without ``spec.grids`` the load is uniform over
    ``[max p_min, 0.8 * sum p_max]`` (re-drawn until some commitment covers
    it).  With ``spec.grids`` set, the load is instead the output of a hidden
    commitment dispatched on that grid, so the discretized problem admits an
    exactly balanced solution.
    """
    if spec.family != "uc":
        raise ValueError("spec.family must be 'uc'")
    rng = np.random.default_rng(spec.seed)
    units = []
    for _ in range(spec.units):
        p_min = float(rng.uniform(*spec.p_min_range))
        units.append(
            UcUnit(
                a=float(rng.uniform(*spec.a_range)),
                b=float(rng.uniform(*spec.b_range)),
                c=float(rng.uniform(*spec.c_range)),
                p_min=p_min,
                p_max=p_min + float(rng.uniform(*spec.p_span_range)),
            )
        )
    units = tuple(units)
    high = 0.8 * sum(u.p_max for u in units)
    low = max(u.p_min for u in units)

    if spec.grids is not None:
        disc = uc_discretize(UcInstance(units, load=0.0), spec.grids)
        for _ in range(100):
            on = rng.random(spec.units) < 0.7
            if not on.any():
                continue
            load = 0.0
            for i in range(spec.units):
                if on[i]:
                    pts = disc.points[i]
                    load += pts[int(rng.integers(0, len(pts)))]
            if load > 0:
                return UcInstance(units, load=float(load))
        raise AssertionError("hidden-dispatch load construction failed")

    for _ in range(100):
        load = float(rng.uniform(low, min(high, max(low, high))))
        load = max(load, low)
        if _has_feasible_commitment(units, load):
            return UcInstance(units, load=load)
    raise AssertionError("load construction failed to find a coverable value")


def _has_feasible_commitment(units, load) -> bool:
    n = len(units)
    if n <= 16:
        p_min = np.array([u.p_min for u in units])
        p_max = np.array([u.p_max for u in units])
        masks = np.arange(1 << n)
        bits = (masks[:, None] >> np.arange(n)[None, :]) & 1
        lows = bits @ p_min
        highs = bits @ p_max
        return bool(((lows <= load + 1e-9) & (load <= highs + 1e-9)).any())
    order = sorted(range(n), key=lambda i: units[i].p_min)
    lo = hi = 0.0
    for i in order:
        lo += units[i].p_min
        hi += units[i].p_max
        if lo <= load <= hi:
            return True
    return False


def gen_hens(spec: GenSpec) -> HensInstance:
    """Random balanced heat-match instance with a grid-feasible hidden flow.

    Draws an integer-valued flow over a random match pattern and sets the
    supplies/demands to its row and column sums, so balance holds exactly.
    Patterns are re-drawn until every positive flow sits on the ``N``-point
    grid of its pair capacity; a one-match-per-source pattern (always
    representable) is the fallback.
    """
    if spec.family != "hens":
        raise ValueError("spec.family must be 'hens'")
    rng = np.random.default_rng(spec.seed)
    m, n = spec.sources, spec.sinks
    n_grid = spec.grids if spec.grids is not None else 4
    cost = rng.integers(spec.cost_range[0], spec.cost_range[1] + 1, (m, n)).astype(float)

    def representable(q: np.ndarray) -> bool:
        supply = q.sum(axis=1)
        demand = q.sum(axis=0)
        cap = np.minimum(supply[:, None], demand[None, :])
        for i in range(m):
            for j in range(n):
                if q[i, j] > 0:
                    # level index q * N / U must be a whole number in 1..N
                    scaled = q[i, j] * n_grid
                    if cap[i, j] <= 0 or scaled % cap[i, j] != 0:
                        return False
        return True

    for _ in range(200):
        pattern = rng.random((m, n)) < 0.6
        q = np.where(pattern, rng.integers(1, spec.flow_levels + 1, (m, n)), 0).astype(
            float
        )
        if q.sum() == 0 or not representable(q):
            continue
        return HensInstance(supply=q.sum(axis=1), demand=q.sum(axis=0), cost=cost)

    # fallback: each source feeds exactly one sink, so q equals its capacity
    q = np.zeros((m, n))
    for i in range(m):
        q[i, int(rng.integers(0, n))] = float(rng.integers(1, spec.flow_levels + 1))
    return HensInstance(supply=q.sum(axis=1), demand=q.sum(axis=0), cost=cost)


@dataclass(frozen=True)
class BenchRow:
    instance: str
    family: str
    solver: str
    seed: int
    qubo_energy: float
    objective: float | None
    feasible: bool
    reference: float | None
    deviation_pct: float | None
    elapsed_s: float


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    COLUMNS = (
        "instance",
        "family",
        "solver",
        "seed",
        "qubo_energy",
        "objective",
        "feasible",
        "reference",
        "deviation_pct",
        "elapsed_s",
    )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for row in self.rows:
                writer.writerow(
                    [
                        row.instance,
                        row.family,
                        row.solver,
                        row.seed,
                        repr(row.qubo_energy),
                        "" if row.objective is None else repr(row.objective),
                        "true" if row.feasible else "false",
                        "" if row.reference is None else repr(row.reference),
                        "" if row.deviation_pct is None else repr(row.deviation_pct),
                        repr(row.elapsed_s),
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "BenchReport":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != cls.COLUMNS:
                raise UsageError(f"unexpected report columns: {reader.fieldnames}")
            for rec in reader:
                rows.append(
                    BenchRow(
                        instance=rec["instance"],
                        family=rec["family"],
                        solver=rec["solver"],
                        seed=int(rec["seed"]),
                        qubo_energy=float(rec["qubo_energy"]),
                        objective=float(rec["objective"]) if rec["objective"] else None,
                        feasible=rec["feasible"] == "true",
                        reference=float(rec["reference"]) if rec["reference"] else None,
                        deviation_pct=(
                            float(rec["deviation_pct"]) if rec["deviation_pct"] else None
                        ),
                        elapsed_s=float(rec["elapsed_s"]),
                    )
                )
        return cls(rows)


def _load_instance(item: dict, base_dir: Path):
    family = item.get("family")
    if family not in ("qap", "uc", "hens"):
        raise UsageError(f"unknown problem family {family!r}")
    if "path" in item:
        path = base_dir / item["path"]
        try:
            text = path.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read instance file {path}: {exc}") from exc
        if family == "qap":
            return parse_qaplib(text)
        data = json.loads(text)
        return (
            uc_instance_from_dict(data) if family == "uc" else hens_instance_from_dict(data)
        )
    if "generate" in item:
        params = dict(item["generate"])
        params.setdefault("family", family)
        spec = GenSpec(**params)
        if family == "uc":
            return gen_uc(spec)
        if family == "hens":
            return gen_hens(spec)
        raise UsageError("only uc and hens instances can be generated")
    raise UsageError(f"instance {item.get('id')!r} has neither 'path' nor 'generate'")


def _formulate(instance, family: str, grids: int | None, weights: PenaltyWeights | None):
    if family == "qap":
        model, vm = qap_to_qubo(instance, weights)
        return model, vm, None
    if grids is None:
        raise UsageError(f"family {family!r} requires a grid count")
    if family == "uc":
        disc = uc_discretize(instance, grids)
        model, vm = uc_to_qubo(disc, weights)
        return model, vm, disc
    disc = hens_discretize(instance, grids)
    model, vm = hens_to_qubo(disc, weights)
    return model, vm, disc


def _decode(family: str, bits, vm, instance, disc):
    if family == "qap":
        decoded = qap_decode(bits, vm, instance)
        if isinstance(decoded, QapSolution):
            return True, decoded.objective
        return False, None
    if family == "uc":
        sol = uc_decode(bits, vm, disc)
        return sol.feasible, (sol.total if sol.feasible else None)
    sol = hens_decode(bits, vm, disc)
    return sol.feasible, (sol.total_cost if sol.feasible else None)


def _oracle_reference(family: str, instance, disc):
    if family == "qap":
        return qap_oracle(instance).objective
    if family == "uc":
        return uc_grid_oracle(disc).total
    sol: HensSolution = hens_oracle(instance)
    return sol.total_cost


def run_bench(suite: dict, base_dir: str | Path = ".") -> BenchReport:
    """Run every (instance, solver) cell of a suite specification.

    Suite schema::

        {
          "instances": [{"id", "family", "path" | "generate",
                         "grids"?, "penalty_a"?, "penalty_b"?, "reference"?}],
          "solvers":   [{"name", "seed"?, ...solver options}]
        }

    A missing reference is computed by the exact family oracle; an error is
    raised when the instance exceeds the oracle bound instead.
    """
    base_dir = Path(base_dir)
    instances = suite.get("instances", [])
    solvers = suite.get("solvers", [])
    if not isinstance(instances, list) or not isinstance(solvers, list):
        raise UsageError("suite must contain 'instances' and 'solvers' lists")
    rows = []
    for item in instances:
        inst_id = str(item.get("id", "unnamed"))
        family = item.get("family")
        instance = _load_instance(item, base_dir)
        weights = None
        if "penalty_a" in item and item["penalty_a"] is not None:
            weights = PenaltyWeights(
                float(item["penalty_a"]), float(item.get("penalty_b", 0.0))
            )
        grids = item.get("grids")
        model, vm, disc = _formulate(instance, family, grids, weights)
        if item.get("reference") is not None:
            reference = float(item["reference"])
        else:
            try:
                reference = _oracle_reference(family, instance, disc)
            except OracleSizeError as exc:
                raise OracleSizeError(
                    f"instance {inst_id!r} needs an explicit reference: {exc}"
                ) from exc
        for solver_spec in solvers:
            options = dict(solver_spec)
            name = options.pop("name", None)
            if not name:
                raise UsageError("every solver entry needs a 'name'")
            seed = int(options.pop("seed", 0))
            t0 = time.perf_counter()
            result = solve(model, name, seed=seed, **options)
            elapsed = time.perf_counter() - t0
            best = result.best()
            feasible, objective = _decode(family, best.bits, vm, instance, disc)
            deviation = None
            if feasible and objective is not None and reference and reference > 0:
                deviation = 100.0 * (objective - reference) / reference
            rows.append(
                BenchRow(
                    instance=inst_id,
                    family=family,
                    solver=str(name),
                    seed=seed,
                    qubo_energy=best.energy,
                    objective=objective,
                    feasible=feasible,
                    reference=reference,
                    deviation_pct=deviation,
                    elapsed_s=elapsed,
                )
            )
    rows.sort(key=lambda r: (r.instance, r.solver, r.seed))
    return BenchReport(rows)


def deviation_stats(report: BenchReport) -> dict[str, dict]:
    """Per-family deviation summary; infeasible rows are counted, not dropped."""
    stats: dict[str, dict] = {}
    for family in sorted({row.family for row in report.rows}):
        rows = [r for r in report.rows if r.family == family]
        feasible = [r for r in rows if r.feasible]
        deviations = [r.deviation_pct for r in feasible if r.deviation_pct is not None]
        entry = {
            "rows": len(rows),
            "feasible": len(feasible),
            "infeasible": len(rows) - len(feasible),
            "feasibility_rate": len(feasible) / len(rows) if rows else 0.0,
        }
        if deviations:
            entry.update(
                min_deviation_pct=min(deviations),
                max_deviation_pct=max(deviations),
                mean_deviation_pct=sum(deviations) / len(deviations),
            )
        stats[family] = entry
    return stats


def histogram_rows(report: BenchReport, bins: int = 10):
    """Binned deviation counts per family for external plotting."""
    out = []
    for family in sorted({row.family for row in report.rows}):
        values = [
            r.deviation_pct
            for r in report.rows
            if r.family == family and r.feasible and r.deviation_pct is not None
        ]
        if not values:
            continue
        counts, edges = np.histogram(values, bins=bins)
        for k in range(len(counts)):
            out.append(
                {
                    "family": family,
                    "bin_left": float(edges[k]),
                    "bin_right": float(edges[k + 1]),
                    "count": int(counts[k]),
                }
            )
    return out
