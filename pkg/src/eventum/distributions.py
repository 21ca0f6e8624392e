from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping


@dataclass(frozen=True)
class Distribution:
    """Finite distribution over outcome sequences (tuples of ints).

    ``pruned_mass`` is the mass dropped by enumeration below the
    zero-probability threshold; it is not attributed to any sequence.
    """

    masses: Mapping[tuple[int, ...], float]
    pruned_mass: float = 0.0
    _sorted: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        items = tuple(sorted((tuple(int(y) for y in k), float(v)) for k, v in self.masses.items()))
        object.__setattr__(self, "masses", dict(items))
        object.__setattr__(self, "_sorted", items)

    def __getitem__(self, seq) -> float:
        return self.masses.get(tuple(seq), 0.0)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return (k for k, _ in self._sorted)

    def __len__(self) -> int:
        return len(self._sorted)

    def items(self):
        return self._sorted

    def total(self) -> float:
        return sum(v for _, v in self._sorted)

    def restricted(self, keep) -> "Distribution":
        return Distribution({k: v for k, v in self._sorted if keep(k)}, self.pruned_mass)

    def tv_distance(self, other: "Distribution") -> float:
        keys = set(self.masses) | set(other.masses)
        return 0.5 * sum(abs(self[k] - other[k]) for k in keys)

    def to_records(self) -> list[dict]:
        return [{"sequence": list(k), "probability": v} for k, v in self._sorted]
