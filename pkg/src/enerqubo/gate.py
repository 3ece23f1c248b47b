"""Desk-scale gate-model path: diagonal Hamiltonians over a statevector.

The Hamiltonians used here are diagonal in the computational basis (fields
and couplings of an Ising model), so expectations reduce to probability-
weighted sums of basis energies.  The variational ansatz is a layer of Y
rotations followed by repeated {controlled-Z entanglers, Y-rotation layer}
blocks, optimized by parameter-shift gradient descent with step halving.

Bit convention: qubit 0 is the most significant index bit, and bit b maps to
spin ``s = 1 - 2b`` (bit 0 <-> spin +1), matching the QUBO/Ising conversion.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .qubo import IsingModel, Qubo, qubo_to_ising

_MAX_QUBITS = 20  # 2^20 amplitudes; larger statevectors fail fast


@dataclass(frozen=True)
class DiagonalHamiltonian:
    """Ising energies tabulated over all basis states."""

    source: IsingModel
    energies: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        n = self.source.num_vars
        if n > _MAX_QUBITS:
            raise ValueError(f"statevector path limited to {_MAX_QUBITS} qubits, got {n}")
        if self.energies is None:
            idx = np.arange(1 << n, dtype=np.int64)
            e = np.full(idx.size, self.source.offset)
            for i, h in self.source.h.items():
                s = 1.0 - 2.0 * ((idx >> (n - 1 - i)) & 1)
                e = e + h * s
            for (i, j), jij in self.source.J.items():
                si = 1.0 - 2.0 * ((idx >> (n - 1 - i)) & 1)
                sj = 1.0 - 2.0 * ((idx >> (n - 1 - j)) & 1)
                e = e + jij * si * sj
            e.setflags(write=False)
            object.__setattr__(self, "energies", e)

    @property
    def num_qubits(self) -> int:
        return self.source.num_vars

    def energy_of(self, bits) -> float:
        return float(self.energies[_index_of(bits, self.num_qubits)])


def _index_of(bits, n: int) -> int:
    if len(bits) != n:
        raise ValueError(f"bitstring has {len(bits)} bits, expected {n}")
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _bits_of(index: int, n: int) -> tuple[int, ...]:
    return tuple((index >> (n - 1 - i)) & 1 for i in range(n))


def hamiltonian_from_ising(model: IsingModel) -> DiagonalHamiltonian:
    return DiagonalHamiltonian(model)


def exact_ground(hml: DiagonalHamiltonian) -> tuple[tuple[int, ...], float]:
    """Exhaustive minimum; first (lexicographically smallest) bitstring wins ties."""
    idx = int(np.argmin(hml.energies))
    return _bits_of(idx, hml.num_qubits), float(hml.energies[idx])


@dataclass(frozen=True)
class AnsatzConfig:
    num_qubits: int
    layers: int = 2
    entangler_map: tuple[tuple[int, int], ...] | None = None  # default: linear chain

    def __post_init__(self) -> None:
        if self.num_qubits < 1 or self.num_qubits > _MAX_QUBITS:
            raise ValueError(f"need 1..{_MAX_QUBITS} qubits")
        if self.layers < 0:
            raise ValueError("layer count must be nonnegative")
        pairs = self.entangler_map
        if pairs is None:
            pairs = tuple((q, q + 1) for q in range(self.num_qubits - 1))
        else:
            pairs = tuple((int(a), int(b)) for a, b in pairs)
            seen = set()
            for a, b in pairs:
                if not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits) or a == b:
                    raise ValueError(f"invalid entangler pair ({a}, {b})")
                key = (min(a, b), max(a, b))
                if key in seen:
                    raise ValueError(f"duplicate entangler pair ({a}, {b})")
                seen.add(key)
        object.__setattr__(self, "entangler_map", pairs)

    @property
    def num_params(self) -> int:
        return self.num_qubits * (self.layers + 1)


def _apply_ry(state: np.ndarray, qubit: int, theta: float, n: int) -> np.ndarray:
    cos = math.cos(theta / 2.0)
    sin = math.sin(theta / 2.0)
    view = state.reshape(1 << qubit, 2, -1)
    top = cos * view[:, 0, :] - sin * view[:, 1, :]
    bottom = sin * view[:, 0, :] + cos * view[:, 1, :]
    out = np.empty_like(view)
    out[:, 0, :] = top
    out[:, 1, :] = bottom
    return out.reshape(state.shape)


def _apply_cz(state: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    idx = np.arange(state.size)
    mask = (((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)).astype(bool)
    out = state.copy()
    out[mask] *= -1.0
    return out


def ansatz_state(config: AnsatzConfig, params) -> np.ndarray:
    """Prepare the trial state for the given rotation angles.

    Starts from |0...0>, applies one Y rotation per qubit, then ``layers``
    repetitions of {entanglers, Y-rotation layer}.  Needs
    ``num_qubits * (layers + 1)`` parameters.
    """
    params = np.asarray(params, dtype=float)
    n = config.num_qubits
    if params.shape != (config.num_params,):
        raise ValueError(
            f"expected {config.num_params} parameters, got {params.shape}"
        )
    state = np.zeros(1 << n, dtype=np.complex128)
    state[0] = 1.0
    pos = 0
    for q in range(n):
        state = _apply_ry(state, q, params[pos], n)
        pos += 1
    for _ in range(config.layers):
        for a, b in config.entangler_map:
            state = _apply_cz(state, a, b, n)
        for q in range(n):
            state = _apply_ry(state, q, params[pos], n)
            pos += 1
    return state


def expectation(state: np.ndarray, hml: DiagonalHamiltonian) -> float:
    """Probability-weighted basis energy ``sum_b |amp_b|^2 E(b)``."""
    if state.size != hml.energies.size:
        raise ValueError(
            f"state has {state.size} amplitudes, Hamiltonian expects {hml.energies.size}"
        )
    probs = np.abs(state) ** 2
    return float(probs @ hml.energies)


def _batched_states(config: AnsatzConfig, params_matrix: np.ndarray) -> np.ndarray:
    """Prepare one ansatz state per row of angles; rows evolve in lockstep.

    The circuit is real (Y rotations and controlled-Z), so the batch stays
    in float64 throughout.
    """
    n = config.num_qubits
    rows = params_matrix.shape[0]
    states = np.zeros((rows, 1 << n))
    states[:, 0] = 1.0
    pos = 0
    scratch = np.empty_like(states)

    def ry(qubit: int, thetas: np.ndarray) -> None:
        cos = np.cos(thetas / 2.0)[:, None, None]
        sin = np.sin(thetas / 2.0)[:, None, None]
        view = states.reshape(rows, 1 << qubit, 2, -1)
        tmp = scratch.reshape(rows, 1 << qubit, 2, -1)
        np.multiply(cos, view[:, :, 0, :], out=tmp[:, :, 0, :])
        tmp[:, :, 0, :] -= sin * view[:, :, 1, :]
        np.multiply(sin, view[:, :, 0, :], out=tmp[:, :, 1, :])
        tmp[:, :, 1, :] += cos * view[:, :, 1, :]
        view[:, :, 0, :] = tmp[:, :, 0, :]
        view[:, :, 1, :] = tmp[:, :, 1, :]

    masks = {(a, b): _cz_mask(a, b, n) for a, b in config.entangler_map}
    for q in range(n):
        ry(q, params_matrix[:, pos])
        pos += 1
    for _ in range(config.layers):
        for pair in config.entangler_map:
            states[:, masks[pair]] *= -1.0
        for q in range(n):
            ry(q, params_matrix[:, pos])
            pos += 1
    return states


def _cz_mask(a: int, b: int, n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return (((idx >> (n - 1 - a)) & 1) & ((idx >> (n - 1 - b)) & 1)).astype(bool)


def parameter_shift_gradient(
    config: AnsatzConfig, hml: DiagonalHamiltonian, params
) -> np.ndarray:
    """Exact gradient of the expectation via +-pi/2 parameter shifts.

    All shifted circuits are simulated in one batched pass.
    """
    params = np.asarray(params, dtype=float)
    p = params.size
    batch = np.tile(params, (2 * p, 1))
    batch[np.arange(p), np.arange(p)] += math.pi / 2.0
    batch[p + np.arange(p), np.arange(p)] -= math.pi / 2.0
    states = _batched_states(config, batch)
    values = (np.abs(states) ** 2) @ hml.energies
    return 0.5 * (values[:p] - values[p:])


@dataclass(frozen=True)
class VqeConfig:
    ansatz: AnsatzConfig
    max_iterations: int = 200
    restarts: int = 8
    step: float = 0.1
    min_step: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iterations < 1 or self.restarts < 1:
            raise ValueError("iteration and restart budgets must be positive")
        if not 0 < self.min_step <= self.step:
            raise ValueError("need 0 < min_step <= step")


@dataclass(frozen=True)
class VqeResult:
    params: np.ndarray
    bits: tuple[int, ...]
    energy: float  # basis energy of the most probable bitstring
    expectation: float
    histogram: dict[str, float]


def vqe_minimize(hml: DiagonalHamiltonian, config: VqeConfig | None = None) -> VqeResult:
    """Variational minimization with seeded restarts.

    Every restart performs parameter-shift gradient steps; a step that does
    not improve the expectation is rejected and that restart's step size
    halves until it undercuts ``min_step``.  Restart trajectories are
    independent, so they are advanced in one batched statevector pass.  The
    best run's most probable bitstring and exact distribution are returned.
    The reported energy is a basis energy, so it can never undercut
    :func:`exact_ground`.
    """
    if config is None:
        config = VqeConfig(AnsatzConfig(hml.num_qubits))
    cfg = config.ansatz
    if cfg.num_qubits != hml.num_qubits:
        raise ValueError("ansatz and Hamiltonian disagree on qubit count")
    n_restarts = config.restarts
    p = cfg.num_params
    params = np.stack(
        [
            np.random.default_rng(config.seed ^ r).uniform(-math.pi, math.pi, p)
            for r in range(n_restarts)
        ]
    )
    values = _batched_states(cfg, params) ** 2 @ hml.energies
    steps = np.full(n_restarts, config.step)
    active = np.ones(n_restarts, dtype=bool)
    shift_rows = np.concatenate([np.eye(p), -np.eye(p)]) * (math.pi / 2.0)
    for _ in range(config.max_iterations):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            break
        batch = (params[rows][:, None, :] + shift_rows[None, :, :]).reshape(-1, p)
        shifted = _batched_states(cfg, batch) ** 2 @ hml.energies
        shifted = shifted.reshape(rows.size, 2 * p)
        grads = 0.5 * (shifted[:, :p] - shifted[:, p:])
        trials = params[rows] - steps[rows, None] * grads
        trial_values = _batched_states(cfg, trials) ** 2 @ hml.energies
        improved = trial_values < values[rows] - 1e-12
        took = rows[improved]
        params[took] = trials[improved]
        values[took] = trial_values[improved]
        stalled = rows[~improved]
        steps[stalled] *= 0.5
        active[stalled] &= steps[stalled] >= config.min_step
    best_run = int(np.argmin(values))
    best_params = params[best_run]
    state = ansatz_state(cfg, best_params)
    probs = np.abs(state) ** 2
    top = int(np.argmax(probs))
    bits = _bits_of(top, cfg.num_qubits)
    histogram = sample_distribution(state)
    return VqeResult(
        best_params, bits, float(hml.energies[top]), float(values[best_run]), histogram
    )


def sample_distribution(
    state: np.ndarray, shots: int | None = None, seed: int = 0
) -> dict[str, float]:
    """Histogram of bitstring probabilities (exact) or sampled shot counts."""
    probs = np.abs(state) ** 2
    n = int(round(math.log2(state.size)))
    if shots is None:
        return {
            format(i, f"0{n}b"): float(p)
            for i, p in enumerate(probs)
            if p > 1e-12
        }
    if shots < 1:
        raise ValueError("shot count must be >= 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs / probs.sum())
    return {
        format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c > 0
    }


def vqe_sample(model: Qubo, seed: int = 0, reads: int = 100, **config_options):
    """Solve a QUBO along the gate-model path and return a sample set.

    Bridges ``solve(model, "vqe")``: converts to Ising form, runs the
    variational minimization, then draws ``reads`` shots from the final
    state.  Energies are re-evaluated on the original QUBO.
    """
    from .solvers import SampleRecord, SampleSet  # local import, avoids a cycle

    t0 = time.perf_counter()
    known = {"layers", "restarts", "max_iterations", "step"}
    unknown = set(config_options) - known
    if unknown:
        raise ValueError(f"unknown vqe options: {sorted(unknown)}")
    ising = qubo_to_ising(model)
    hml = hamiltonian_from_ising(ising)
    ansatz = AnsatzConfig(model.num_vars, layers=config_options.get("layers", 2))
    cfg = VqeConfig(
        ansatz,
        max_iterations=config_options.get("max_iterations", 200),
        restarts=config_options.get("restarts", 8),
        step=config_options.get("step", 0.1),
        seed=seed,
    )
    result = vqe_minimize(hml, cfg)
    state = ansatz_state(ansatz, result.params)
    counts = sample_distribution(state, shots=reads, seed=seed)
    pool = {}
    for bit_string, count in counts.items():
        bits = tuple(int(c) for c in bit_string)
        pool[bits] = pool.get(bits, 0) + int(count)
    records = [
        SampleRecord(bits, model.energy(bits), count) for bits, count in pool.items()
    ]
    meta = {
        "solver": "vqe",
        "seed": seed,
        "reads": reads,
        "expectation": result.expectation,
        "elapsed_s": time.perf_counter() - t0,
    }
    return SampleSet(records, meta)
