from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def high_res_count(M: int, eta: float) -> int:
    """``round(eta * M)`` with ties away from zero (eta=0.2, M=64 -> 13)."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    # 9 decimals absorbs binary noise such as 0.3 * 64 = 19.200000000000003
    return int(math.floor(round(eta * M, 9) + 0.5))


@dataclass(frozen=True, eq=False)
class AntennaPartition:
    """Split of antennas ``0..M-1`` into high-resolution ``set_a`` and low-resolution ``set_b``.

    ``position[m]`` is the index of antenna ``m`` inside its own set, so
    ``set_a[position[m]] == m`` for m in A and likewise for B.
    """

    set_a: np.ndarray
    set_b: np.ndarray
    M: int

    def __post_init__(self):
        a = np.asarray(self.set_a, dtype=np.intp).reshape(-1)
        b = np.asarray(self.set_b, dtype=np.intp).reshape(-1)
        if np.any(np.diff(a) <= 0) or np.any(np.diff(b) <= 0):
            raise ValueError("partition index sets must be strictly increasing")
        both = np.concatenate([a, b])
        if both.size != self.M or not np.array_equal(np.sort(both), np.arange(self.M)):
            raise ValueError("set_a and set_b must be disjoint and cover 0..M-1")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "set_a", a)
        object.__setattr__(self, "set_b", b)

    @classmethod
    def from_high_res(cls, M: int, set_a) -> "AntennaPartition":
        set_a = np.sort(np.asarray(set_a, dtype=np.intp))
        set_b = np.setdiff1d(np.arange(M), set_a)
        return cls(set_a, set_b, M)

    @property
    def eta(self) -> float:
        return len(self.set_a) / self.M

    @property
    def in_a(self) -> np.ndarray:
        mask = np.zeros(self.M, dtype=bool)
        mask[self.set_a] = True
        return mask

    @property
    def position(self) -> np.ndarray:
        pos = np.empty(self.M, dtype=np.intp)
        pos[self.set_a] = np.arange(len(self.set_a))
        pos[self.set_b] = np.arange(len(self.set_b))
        return pos

    def u(self, m: int) -> int:
        """Index of antenna ``m`` within ``set_a``."""
        if not self.in_a[m]:
            raise KeyError(f"antenna {m} is not in the high-resolution set")
        return int(self.position[m])

    def v(self, m: int) -> int:
        """Index of antenna ``m`` within ``set_b``."""
        if self.in_a[m]:
            raise KeyError(f"antenna {m} is not in the low-resolution set")
        return int(self.position[m])

    def combine(self, part_a, part_b) -> np.ndarray:
        """Scatter per-set vectors (last axis) back into full antenna order."""
        part_a = np.asarray(part_a)
        part_b = np.asarray(part_b)
        shape = np.broadcast_shapes(part_a.shape[:-1], part_b.shape[:-1]) + (self.M,)
        out = np.empty(shape, dtype=np.result_type(part_a, part_b))
        out[..., self.set_a] = part_a
        out[..., self.set_b] = part_b
        return out

    def __eq__(self, other):
        if not isinstance(other, AntennaPartition):
            return NotImplemented
        return (self.M == other.M and np.array_equal(self.set_a, other.set_a)
                and np.array_equal(self.set_b, other.set_b))

    def __hash__(self):
        return hash((self.M, self.set_a.tobytes()))

    def __repr__(self):
        return f"AntennaPartition(M={self.M}, |A|={len(self.set_a)}, eta={self.eta:.4g})"
