"""Sparse binary-quadratic (QUBO) and Ising model containers.

A QUBO is ``offset + sum_i linear[i]*x_i + sum_{i<j} quadratic[i,j]*x_i*x_j``
over bits x in {0,1}; the Ising form uses spins s in {-1,+1} with fields ``h``
and couplings ``J``.  The two are linked by the substitution ``x = (1 - s)/2``
(bit 0 corresponds to spin +1), which is applied consistently everywhere in
this package.

Models are canonical after construction: quadratic keys satisfy i < j,
diagonal entries are folded into the linear part (x*x == x for binary x),
duplicate keys are merged and exact zeros dropped.  Instances are treated as
immutable; operations that modify a model return a new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


def _require_finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{what} must be finite, got {value!r}")
    return value


def _require_index(i: int, num_vars: int) -> int:
    i = int(i)
    if not 0 <= i < num_vars:
        raise ValueError(f"variable index {i} out of range for {num_vars} variables")
    return i


@dataclass(frozen=True)
class LinearExpr:
    """Affine expression ``sum_i terms[i]*x_i + constant`` over binary variables.

    Used as the argument of squared-penalty construction.
    """

    terms: dict[int, float] = field(default_factory=dict)
    constant: float = 0.0

    def value(self, bits: Sequence[int]) -> float:
        return self.constant + sum(c * bits[i] for i, c in self.terms.items())


def _add_squared(
    linear: dict[int, float],
    quadratic: dict[tuple[int, int], float],
    terms: Mapping[int, float],
    constant: float,
    weight: float,
) -> float:
    """Accumulate ``weight * (sum_i c_i x_i + k)^2`` into coefficient dicts.

    Expands with x^2 = x: each variable gains ``weight*(c_i^2 + 2*c_i*k)``,
    each pair gains ``2*weight*c_i*c_j``.  Returns the offset increment
    ``weight*k^2``.
    """
    items = sorted(terms.items())
    for pos, (i, ci) in enumerate(items):
        linear[i] = linear.get(i, 0.0) + weight * (ci * ci + 2.0 * ci * constant)
        for j, cj in items[pos + 1 :]:
            key = (i, j)
            quadratic[key] = quadratic.get(key, 0.0) + 2.0 * weight * ci * cj
    return weight * constant * constant


@dataclass(frozen=True)
class Qubo:
    """Quadratic unconstrained binary optimization model with constant offset."""

    num_vars: int
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0
    var_names: dict[int, str] | None = None

    def __post_init__(self) -> None:
        n = int(self.num_vars)
        if n < 0:
            raise ValueError("num_vars must be nonnegative")
        lin: dict[int, float] = {}
        for i, v in self.linear.items():
            i = _require_index(i, n)
            v = _require_finite(v, f"linear[{i}]")
            lin[i] = lin.get(i, 0.0) + v
        quad: dict[tuple[int, int], float] = {}
        for (i, j), v in self.quadratic.items():
            i = _require_index(i, n)
            j = _require_index(j, n)
            v = _require_finite(v, f"quadratic[{i},{j}]")
            if i == j:
                # diagonal: x*x == x for binary variables
                lin[i] = lin.get(i, 0.0) + v
                continue
            key = (i, j) if i < j else (j, i)
            quad[key] = quad.get(key, 0.0) + v
        lin = {i: v for i, v in sorted(lin.items()) if v != 0.0}
        quad = {k: v for k, v in sorted(quad.items()) if v != 0.0}
        names = None
        if self.var_names is not None:
            names = {}
            for i, name in self.var_names.items():
                names[_require_index(i, n)] = str(name)
        object.__setattr__(self, "num_vars", n)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "offset", _require_finite(self.offset, "offset"))
        object.__setattr__(self, "var_names", names)

    def energy(self, bits: Sequence[int]) -> float:
        """Evaluate ``offset + sum linear_i x_i + sum quadratic_ij x_i x_j``."""
        if len(bits) != self.num_vars:
            raise ValueError(
                f"assignment has {len(bits)} bits, model has {self.num_vars} variables"
            )
        e = self.offset
        for i, v in self.linear.items():
            if bits[i]:
                e += v
        for (i, j), v in self.quadratic.items():
            if bits[i] and bits[j]:
                e += v
        return e

    def add_squared_penalty(self, expr: LinearExpr, weight: float) -> "Qubo":
        """Return a new model with ``weight * expr(x)^2`` added."""
        if weight < 0:
            raise ValueError("penalty weight must be nonnegative")
        for i in expr.terms:
            _require_index(i, self.num_vars)
        lin = dict(self.linear)
        quad = dict(self.quadratic)
        extra = _add_squared(lin, quad, expr.terms, expr.constant, weight)
        return Qubo(self.num_vars, lin, quad, self.offset + extra, self.var_names)

    def clamp(self, fixed: Mapping[int, int]) -> tuple["Qubo", tuple[int, ...]]:
        """Fix a subset of variables, folding their contributions away.

        Returns the reduced model over the free variables plus the tuple of
        original indices of the free variables (position = new index).  For
        every assignment of the free variables the reduced energy equals the
        full-model energy of the combined assignment.
        """
        fixed_bits: dict[int, int] = {}
        for i, b in fixed.items():
            i = _require_index(i, self.num_vars)
            if b not in (0, 1):
                raise ValueError(f"fixed value for variable {i} must be 0 or 1")
            fixed_bits[i] = int(b)
        free = tuple(i for i in range(self.num_vars) if i not in fixed_bits)
        remap = {old: new for new, old in enumerate(free)}
        offset = self.offset
        lin: dict[int, float] = {}
        for i, v in self.linear.items():
            if i in fixed_bits:
                offset += v * fixed_bits[i]
            else:
                lin[remap[i]] = v
        quad: dict[tuple[int, int], float] = {}
        for (i, j), v in self.quadratic.items():
            fi, fj = i in fixed_bits, j in fixed_bits
            if fi and fj:
                offset += v * fixed_bits[i] * fixed_bits[j]
            elif fi:
                if fixed_bits[i]:
                    lin[remap[j]] = lin.get(remap[j], 0.0) + v
            elif fj:
                if fixed_bits[j]:
                    lin[remap[i]] = lin.get(remap[i], 0.0) + v
            else:
                quad[(remap[i], remap[j])] = v
        names = None
        if self.var_names is not None:
            names = {remap[i]: s for i, s in self.var_names.items() if i in remap}
        return Qubo(len(free), lin, quad, offset, names), free

    def __add__(self, other: "Qubo") -> "Qubo":
        """Coefficient-wise model addition (energies add pointwise)."""
        if not isinstance(other, Qubo):
            return NotImplemented
        lin = dict(self.linear)
        for i, v in other.linear.items():
            lin[i] = lin.get(i, 0.0) + v
        quad = dict(self.quadratic)
        for k, v in other.quadratic.items():
            quad[k] = quad.get(k, 0.0) + v
        names = dict(other.var_names or {})
        names.update(self.var_names or {})
        return Qubo(
            max(self.num_vars, other.num_vars),
            lin,
            quad,
            self.offset + other.offset,
            names or None,
        )

    def coefficient_scale(self) -> float:
        """Sum of absolute coefficient magnitudes, a crude energy scale."""
        return (
            abs(self.offset)
            + sum(abs(v) for v in self.linear.values())
            + sum(abs(v) for v in self.quadratic.values())
        )

    def to_dict(self) -> dict:
        """JSON-ready representation; round-trips doubles bit-exactly."""
        out: dict = {
            "num_vars": self.num_vars,
            "linear": [[i, v] for i, v in self.linear.items()],
            "quadratic": [[i, j, v] for (i, j), v in self.quadratic.items()],
            "offset": self.offset,
        }
        if self.var_names is not None:
            out["var_names"] = {str(i): s for i, s in self.var_names.items()}
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "Qubo":
        names = data.get("var_names")
        if names is not None:
            names = {int(i): str(s) for i, s in names.items()}
        return cls(
            num_vars=int(data["num_vars"]),
            linear={int(i): float(v) for i, v in data.get("linear", [])},
            quadratic={(int(i), int(j)): float(v) for i, j, v in data.get("quadratic", [])},
            offset=float(data.get("offset", 0.0)),
            var_names=names,
        )


@dataclass(frozen=True)
class IsingModel:
    """Ising model ``offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j`` over spins +-1."""

    num_vars: int
    h: dict[int, float] = field(default_factory=dict)
    J: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        n = int(self.num_vars)
        if n < 0:
            raise ValueError("num_vars must be nonnegative")
        offset = _require_finite(self.offset, "offset")
        h: dict[int, float] = {}
        for i, v in self.h.items():
            i = _require_index(i, n)
            h[i] = h.get(i, 0.0) + _require_finite(v, f"h[{i}]")
        J: dict[tuple[int, int], float] = {}
        for (i, j), v in self.J.items():
            i = _require_index(i, n)
            j = _require_index(j, n)
            v = _require_finite(v, f"J[{i},{j}]")
            if i == j:
                offset += v  # s_i * s_i == 1
                continue
            key = (i, j) if i < j else (j, i)
            J[key] = J.get(key, 0.0) + v
        object.__setattr__(self, "num_vars", n)
        object.__setattr__(self, "h", {i: v for i, v in sorted(h.items()) if v != 0.0})
        object.__setattr__(self, "J", {k: v for k, v in sorted(J.items()) if v != 0.0})
        object.__setattr__(self, "offset", offset)

    def energy(self, spins: Sequence[int]) -> float:
        if len(spins) != self.num_vars:
            raise ValueError(
                f"spin vector has {len(spins)} entries, model has {self.num_vars}"
            )
        for s in spins:
            if s not in (-1, 1):
                raise ValueError(f"invalid spin value {s!r}; spins must be -1 or +1")
        e = self.offset
        for i, v in self.h.items():
            e += v * spins[i]
        for (i, j), v in self.J.items():
            e += v * spins[i] * spins[j]
        return e


def qubo_to_ising(model: Qubo) -> IsingModel:
    """Convert a QUBO to the equivalent Ising model via ``x = (1 - s)/2``.

    Energies match exactly for every assignment: ``ising.energy(1 - 2*x) ==
    qubo.energy(x)`` up to floating-point round-off.
    """
    h: dict[int, float] = {}
    J: dict[tuple[int, int], float] = {}
    offset = model.offset
    for i, a in model.linear.items():
        # a*x = a/2 - (a/2) s
        h[i] = h.get(i, 0.0) - a / 2.0
        offset += a / 2.0
    for (i, j), b in model.quadratic.items():
        # b*x_i*x_j = b/4 (1 - s_i - s_j + s_i s_j)
        q = b / 4.0
        J[(i, j)] = J.get((i, j), 0.0) + q
        h[i] = h.get(i, 0.0) - q
        h[j] = h.get(j, 0.0) - q
        offset += q
    return IsingModel(model.num_vars, h, J, offset)


def ising_to_qubo(model: IsingModel) -> Qubo:
    """Convert an Ising model to the equivalent QUBO via ``s = 1 - 2x``."""
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    offset = model.offset
    for i, a in model.h.items():
        # a*s = a - 2a*x
        linear[i] = linear.get(i, 0.0) - 2.0 * a
        offset += a
    for (i, j), b in model.J.items():
        # b*s_i*s_j = b (1 - 2x_i - 2x_j + 4 x_i x_j)
        quadratic[(i, j)] = quadratic.get((i, j), 0.0) + 4.0 * b
        linear[i] = linear.get(i, 0.0) - 2.0 * b
        linear[j] = linear.get(j, 0.0) - 2.0 * b
        offset += b
    return Qubo(model.num_vars, linear, quadratic, offset)


def spins_from_bits(bits: Iterable[int]) -> tuple[int, ...]:
    """Spin view of a bit vector: bit 0 -> spin +1, bit 1 -> spin -1."""
    return tuple(1 - 2 * int(b) for b in bits)


def bits_from_spins(spins: Iterable[int]) -> tuple[int, ...]:
    return tuple((1 - int(s)) // 2 for s in spins)


def quantize_coefficients(model: Qubo, significant_bits: int) -> Qubo:
    """Round all coefficients to the given number of significant binary digits.

    Emulates the limited coefficient precision of analog annealing hardware.
    Off by default everywhere; intended for experiments only.
    """
    if significant_bits < 1:
        raise ValueError("significant_bits must be >= 1")

    def q(v: float) -> float:
        if v == 0.0:
            return 0.0
        m, e = math.frexp(v)
        scale = 1 << significant_bits
        return math.ldexp(round(m * scale) / scale, e)

    return Qubo(
        model.num_vars,
        {i: q(v) for i, v in model.linear.items()},
        {k: q(v) for k, v in model.quadratic.items()},
        q(model.offset),
        model.var_names,
    )
