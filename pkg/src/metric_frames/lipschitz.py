"""Scalar Lipschitz maps on finite spaces.

Maps are plain float vectors indexed like the space's points. Lipschitz
numbers come from an exhaustive pair scan, so they are exact for the finite
space and always come with the pair that attains them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, InfeasibleExtensionError, NormalizationError, StructuralError
from .metric_core import FiniteMetricSpace

__all__ = [
    "LipschitzNumber",
    "LipschitzFamily",
    "as_map",
    "lip_number",
    "lip0_norm",
    "mcshane_extend",
    "kuratowski_functional",
]

BASE_ATOL = 1e-12


class LipschitzNumber(NamedTuple):
    value: float
    witness: tuple


def as_map(values, M: FiniteMetricSpace) -> np.ndarray:
    f = np.asarray(values, dtype=float)
    if f.shape != (M.n,):
        raise StructuralError(f"map has shape {f.shape}, space has {M.n} points")
    if not np.all(np.isfinite(f)):
        raise StructuralError("map has non-finite values")
    return f


def lip_number(f, M: FiniteMetricSpace) -> LipschitzNumber:
    """Max of ``|f(i) - f(j)| / d(i, j)`` over pairs ``i < j``, with the attaining pair.

    >>> from metric_frames.metric_core import from_points
    >>> lip_number([0, 1, 4], from_points([[0], [1], [3]]))
    LipschitzNumber(value=1.5, witness=(1, 2))
    """
    f = as_map(f, M)
    I, J = M.pairs()
    ratios = np.abs(f[I] - f[J]) / M.dist[I, J]
    t = int(np.argmax(ratios))
    return LipschitzNumber(float(ratios[t]), (int(I[t]), int(J[t])))


def lip0_norm(f, M: FiniteMetricSpace) -> float:
    f = as_map(f, M)
    fb = f[M.base_index]
    if abs(fb) > BASE_ATOL:
        raise NormalizationError(f"map takes value {fb!r} at the base point, expected 0",
                                 witness=(M.base_index,))
    return lip_number(f, M).value


def mcshane_extend(M: FiniteMetricSpace, subset: Sequence[int], f0, L: float,
                   mode: str = "sup") -> np.ndarray:
    """Extend ``f0`` (given on ``subset``) to all of ``M`` with Lipschitz constant ``L``.

    ``mode="inf"`` gives the largest extension ``min_y f0(y) + L d(x, y)``,
    ``mode="sup"`` the smallest ``max_y f0(y) - L d(x, y)``.
    """
    idx = np.asarray(subset, dtype=int)
    f0 = np.asarray(f0, dtype=float)
    if idx.size == 0:
        raise DomainError("extension needs a nonempty subset")
    if idx.shape != f0.shape:
        raise StructuralError("subset and values differ in length")
    if len(set(idx.tolist())) != idx.size:
        raise StructuralError("subset has repeated indices")
    if not L > 0:
        raise DomainError(f"Lipschitz constant must be positive, got {L}")
    if idx.size >= 2:
        sub = FiniteMetricSpace(tuple(idx.tolist()), 0, M.dist[np.ix_(idx, idx)])
        need = lip_number(f0, sub)
        if need.value > L:
            w = (int(idx[need.witness[0]]), int(idx[need.witness[1]]))
            raise InfeasibleExtensionError(
                f"L={L} is below the Lipschitz number {need.value} of the data", witness=w)
    Dx = M.dist[:, idx]
    if mode == "inf":
        f = np.min(f0[None, :] + L * Dx, axis=1)
    elif mode == "sup":
        f = np.max(f0[None, :] - L * Dx, axis=1)
    else:
        raise ValueError(f"mode must be 'inf' or 'sup', not {mode!r}")
    f[idx] = f0
    return f


def kuratowski_functional(M: FiniteMetricSpace, target: int) -> np.ndarray:
    """``y -> d(t, 0) - d(t, y)``: sup-mode extension of ``f(0)=0, f(t)=d(t,0)`` with L=1."""
    b = M.base_index
    if target == b:
        raise DomainError("the target of a Kuratowski functional must differ from the base")
    f = mcshane_extend(M, [b, target], [0.0, M.dist[target, b]], 1.0, mode="sup")
    # |f(y)| <= d(y, 0) holds in exact arithmetic; clipping by the inf-mode
    # envelope d(y, 0) keeps it exact under rounding too
    return np.minimum(f, M.dist[:, b])


@dataclass(frozen=True, eq=False)
class LipschitzFamily:
    """Ordered finite family of scalar maps, stored as rows of ``values``.

    ``tail_bound`` bounds the sum of the dropped terms when the family is a
    truncation of an infinite closed form (0 for genuinely finite families).
    """

    space: FiniteMetricSpace
    values: np.ndarray
    tail_bound: float = 0.0
    family_meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        V = np.array(self.values, dtype=float)
        if V.ndim == 1:
            V = V[None, :]
        if V.ndim != 2 or V.shape[1] != self.space.n:
            raise StructuralError(
                f"family values must have shape (N, {self.space.n}), got {V.shape}")
        if not np.all(np.isfinite(V)):
            raise StructuralError("family has non-finite values")
        if not self.tail_bound >= 0:
            raise StructuralError("tail bound must be nonnegative")
        V.setflags(write=False)
        object.__setattr__(self, "values", V)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, k) -> np.ndarray:
        return self.values[k]

    @classmethod
    def from_maps(cls, space, maps, tail_bound=0.0, **meta) -> "LipschitzFamily":
        return cls(space, np.vstack([as_map(m, space) for m in maps]), tail_bound, meta)

    def is_lip0(self, atol: float = BASE_ATOL) -> bool:
        return bool(np.all(np.abs(self.values[:, self.space.base_index]) <= atol))

    def lip_numbers(self) -> np.ndarray:
        return np.array([lip_number(f, self.space).value for f in self.values])

    def with_values(self, values, tail_bound=None, **meta) -> "LipschitzFamily":
        tb = self.tail_bound if tail_bound is None else tail_bound
        return LipschitzFamily(self.space, values, tb, {**self.family_meta, **meta})
