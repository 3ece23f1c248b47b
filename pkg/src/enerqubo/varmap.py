"""Label <-> index bookkeeping for QUBO variables, plus penalty weights."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class PenaltyWeights:
    """Weights of the squared constraint penalties folded into a QUBO.

    ``a`` multiplies the assignment/one-hot/match-logic penalties, ``b`` the
    balance penalties (unused for the assignment problem).
    """

    a: float
    b: float = 0.0

    def __post_init__(self) -> None:
        if not (self.a >= 0 and self.b >= 0):
            raise ValueError("penalty weights must be nonnegative")


@dataclass
class VarMap:
    """Bijection between human-readable variable labels and QUBO indices.

    Labels use 1-based domain indices, e.g. ``x(2,1)``, ``v(3)``, ``z(1,4)``,
    ``w(2,2)``, ``z(1,2,3)``.
    """

    backward: list[str] = field(default_factory=list)
    forward: dict[str, int] = field(default_factory=dict)

    def add(self, label: str) -> int:
        if label in self.forward:
            raise ValueError(f"duplicate variable label {label!r}")
        idx = len(self.backward)
        self.backward.append(label)
        self.forward[label] = idx
        return idx

    def index(self, label: str) -> int:
        return self.forward[label]

    def label(self, index: int) -> str:
        return self.backward[index]

    def __len__(self) -> int:
        return len(self.backward)

    def names(self) -> dict[int, str]:
        """Index -> label map, suitable for ``Qubo.var_names``."""
        return dict(enumerate(self.backward))
