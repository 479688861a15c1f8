"""Finite pointed metric spaces.

A :class:`FiniteMetricSpace` is an immutable bundle of point labels, a base
point index and a validated distance matrix. Coordinate-derived spaces also
keep their coordinates so that closed-form decoders can report positions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Hashable, NamedTuple, Sequence

import numpy as np

from .errors import MetricAxiomError, StructuralError

__all__ = [
    "Violation",
    "ValidationReport",
    "FiniteMetricSpace",
    "validate_metric",
    "from_points",
    "from_matrix",
    "product_space",
    "metric_closure",
]


class Violation(NamedTuple):
    kind: str
    indices: tuple
    magnitude: float

    def to_dict(self):
        return {"kind": self.kind, "indices": list(self.indices),
                "magnitude": float(self.magnitude)}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def to_dict(self):
        return {"valid": self.valid,
                "violations": [v.to_dict() for v in self.violations]}


def _as_square(dist) -> np.ndarray:
    D = np.asarray(dist, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise StructuralError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(D))[0])
        raise StructuralError(f"non-finite distance entry at {bad}", witness=bad)
    return D


def validate_metric(dist, tolerance: float = 0.0) -> ValidationReport:
    """Check every metric axiom and collect each violation with a witness.

    Triangle violations are reported as ``(i, j, k)`` meaning
    ``d(i, k) > d(i, j) + d(j, k) + tolerance``, listed once per ``i < k``.
    """
    D = _as_square(dist)
    n = D.shape[0]
    out: list[Violation] = []

    for i in range(n):
        if D[i, i] != 0.0:
            out.append(Violation("nonzero-diagonal", (i, i), abs(D[i, i])))
    for i, j in zip(*np.nonzero(D < 0)):
        out.append(Violation("negative", (int(i), int(j)), float(-D[i, j])))

    iu, ju = np.triu_indices(n, 1)
    asym = np.abs(D[iu, ju] - D[ju, iu])
    for t in np.nonzero(asym > tolerance)[0]:
        out.append(Violation("asymmetry", (int(iu[t]), int(ju[t])), float(asym[t])))
    zero = (D[iu, ju] == 0) | (D[ju, iu] == 0)
    for t in np.nonzero(zero)[0]:
        out.append(Violation("zero-offdiagonal", (int(iu[t]), int(ju[t])), 0.0))

    tri = []
    for j in range(n):
        # excess[i, k] = d(i,k) - d(i,j) - d(j,k)
        excess = D - (D[:, j, None] + D[None, j, :])
        for i, k in np.argwhere(excess > tolerance):
            if i < k:
                tri.append(Violation("triangle", (int(i), j, int(k)), float(excess[i, k])))
    tri.sort(key=lambda v: (v.indices[0], v.indices[2], v.indices[1]))
    return ValidationReport(tuple(out + tri))


def metric_closure(dist) -> np.ndarray:
    """Shortest-path closure, iterated until the float triangle inequality is exact.

    For a true metric this only moves entries by rounding error.
    """
    D = _as_square(dist).copy()
    n = D.shape[0]
    while True:
        before = D.copy()
        for k in range(n):
            np.minimum(D, D[:, k, None] + D[None, k, :], out=D)
        if np.array_equal(before, D):
            return D


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Pointed finite metric space.

    Construct through :func:`from_matrix` or :func:`from_points`; the raw
    constructor validates too, so an instance always satisfies the axioms.
    """

    point_ids: tuple
    base_index: int
    dist: np.ndarray
    coords: np.ndarray | None = None
    tolerance: float = 0.0
    _report: ValidationReport = field(default=None, repr=False)

    def __post_init__(self):
        D = _as_square(self.dist)
        n = D.shape[0]
        if n < 2:
            raise StructuralError("a finite metric space needs at least two points")
        if len(self.point_ids) != n:
            raise StructuralError(f"{len(self.point_ids)} labels for {n} points")
        if len(set(self.point_ids)) != n:
            raise StructuralError("point labels must be unique")
        if not 0 <= self.base_index < n:
            raise StructuralError(f"base index {self.base_index} out of range")
        report = validate_metric(D, self.tolerance)
        if not report.valid:
            v = report.violations[0]
            raise MetricAxiomError(
                f"not a metric: {v.kind} at {v.indices} (magnitude {v.magnitude:g})",
                report)
        D = D.copy()
        D.setflags(write=False)
        object.__setattr__(self, "dist", D)
        object.__setattr__(self, "point_ids", tuple(self.point_ids))
        object.__setattr__(self, "_report", report)
        if self.coords is not None:
            C = np.array(self.coords, dtype=float)
            C.setflags(write=False)
            object.__setattr__(self, "coords", C)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __len__(self):
        return self.n

    @property
    def base(self) -> Hashable:
        return self.point_ids[self.base_index]

    def index(self, label) -> int:
        return self.point_ids.index(label)

    def pairs(self):
        """Index arrays ``(I, J)`` of all pairs ``i < j``."""
        return np.triu_indices(self.n, 1)

    def min_distance(self) -> float:
        I, J = self.pairs()
        return float(self.dist[I, J].min())

    def relabel(self, perm: Sequence[int]) -> "FiniteMetricSpace":
        """Space whose point ``k`` is the old point ``perm[k]``."""
        perm = np.asarray(perm, dtype=int)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        coords = None if self.coords is None else self.coords[perm]
        return FiniteMetricSpace(tuple(self.point_ids[p] for p in perm),
                                 int(inv[self.base_index]),
                                 self.dist[np.ix_(perm, perm)], coords, self.tolerance)

    def to_dict(self) -> dict:
        ids = [p if isinstance(p, (str, int, float)) else str(p) for p in self.point_ids]
        return {"points": ids, "base": ids[self.base_index],
                "distances": self.dist.tolist()}


def from_matrix(dist, point_ids: Sequence | None = None, base: Any = None,
                base_index: int | None = None, tolerance: float = 0.0) -> FiniteMetricSpace:
    D = _as_square(dist)
    ids = tuple(range(D.shape[0])) if point_ids is None else tuple(point_ids)
    if base_index is None:
        base_index = 0 if base is None else ids.index(base)
    return FiniteMetricSpace(ids, int(base_index), D, tolerance=tolerance)


def from_points(coords, base_index: int = 0,
                point_ids: Sequence | None = None) -> FiniteMetricSpace:
    """Euclidean distances between coordinate vectors.

    The matrix is passed through :func:`metric_closure` so that the triangle
    inequality holds exactly in floating point, not just up to rounding.
    """
    C = np.asarray(coords, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    if C.ndim != 2:
        raise StructuralError("coordinates must be a list of equal-length vectors")
    if C.shape[0] < 2:
        raise StructuralError("a finite metric space needs at least two points")
    if not np.all(np.isfinite(C)):
        raise StructuralError("non-finite coordinate")
    D = np.sqrt(((C[:, None, :] - C[None, :, :]) ** 2).sum(axis=-1))
    D = metric_closure(D)
    ids = tuple(range(C.shape[0])) if point_ids is None else tuple(point_ids)
    return FiniteMetricSpace(ids, int(base_index), D, coords=C)


def product_space(M: FiniteMetricSpace, N: FiniteMetricSpace) -> FiniteMetricSpace:
    """``M x N`` with the sum metric and base ``(base_M, base_N)``.

    Point ``(i, j)`` sits at flat index ``i * len(N) + j``.
    """
    D = (M.dist[:, None, :, None] + N.dist[None, :, None, :]).reshape(M.n * N.n, M.n * N.n)
    ids = tuple(product(M.point_ids, N.point_ids))
    # sums of two exact metrics can break the float triangle test by an ulp
    tol = 4 * np.finfo(float).eps * float(D.max())
    return FiniteMetricSpace(ids, M.base_index * N.n + N.base_index, D, tolerance=tol)
