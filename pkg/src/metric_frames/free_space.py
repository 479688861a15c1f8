"""Lipschitz-free (Arens-Eells) space over a finite pointed metric space.

A molecule is a coefficient vector over the points. Its free norm is

    max  sum_i m_i f_i   s.t.  f_base = 0,  |f_i - f_j| <= d(i, j)

i.e. the dual pairing against the unit ball of ``Lip_0``. Molecules need not
be balanced: the base point absorbs any leftover mass, and its own
coefficient never matters.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import SolverError, StructuralError
from .frames import FrameBounds, FrameSystem, frame_bounds
from .lipschitz import LipschitzFamily, as_map, lip0_norm, lip_number
from .metric_core import FiniteMetricSpace, from_matrix

__all__ = [
    "Molecule",
    "FreeNormCertificate",
    "free_norm",
    "free_norm_oracle",
    "embed",
    "Linearization",
    "linearize",
    "CorrespondenceReport",
    "correspondence_check",
    "parallel_map",
    "thread_count",
]


def thread_count() -> int:
    """Worker cap from ``METRIC_FRAMES_THREADS`` (default: CPU count, at most 8)."""
    env = os.environ.get("METRIC_FRAMES_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def parallel_map(fn: Callable, items: Iterable) -> list:
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True, eq=False)
class Molecule:
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise StructuralError("molecule has non-finite coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def __len__(self):
        return self.coefficients.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients)

    def __add__(self, other: "Molecule") -> "Molecule":
        return Molecule(self.coefficients + other.coefficients)

    def __sub__(self, other: "Molecule") -> "Molecule":
        return Molecule(self.coefficients - other.coefficients)

    def __neg__(self) -> "Molecule":
        return Molecule(-self.coefficients)

    def __mul__(self, lam: float) -> "Molecule":
        return Molecule(float(lam) * self.coefficients)

    __rmul__ = __mul__

    @classmethod
    def zero(cls, n: int) -> "Molecule":
        return cls(np.zeros(n))


def _coeffs(M: FiniteMetricSpace, m) -> np.ndarray:
    c = m.coefficients if isinstance(m, Molecule) else Molecule(m).coefficients
    if c.size != M.n:
        raise StructuralError(f"molecule has {c.size} coefficients, space has {M.n} points")
    return c


def embed(M: FiniteMetricSpace, x: int) -> Molecule:
    """The point molecule ``delta_x``."""
    c = np.zeros(M.n)
    c[x] = 1.0
    return Molecule(c)


@dataclass(frozen=True, eq=False)
class FreeNormCertificate:
    """``value`` is attained by ``optimal_f``, which lies in the ``Lip_0`` unit ball."""

    value: float
    optimal_f: np.ndarray = field(repr=False)
    duality_gap: float = 0.0

    def lipschitz_ratio(self, M: FiniteMetricSpace) -> float:
        return lip_number(self.optimal_f, M).value

    def check(self, M: FiniteMetricSpace, m, tol: float = 1e-9) -> bool:
        c = _coeffs(M, m)
        f = self.optimal_f
        return (f[M.base_index] == 0.0 and self.lipschitz_ratio(M) <= 1 + tol
                and abs(float(c @ f) - self.value) <= self.duality_gap + tol * max(1.0, self.value))

    def to_dict(self):
        return {"value": self.value, "duality_gap": self.duality_gap,
                "optimal_f": self.optimal_f.tolist()}


def _lp_data(M: FiniteMetricSpace):
    """Constraint matrix over the non-base variables: ``f_i - f_j <= d``, both signs."""
    free = np.array([i for i in range(M.n) if i != M.base_index])
    k = free.size
    I, J = np.triu_indices(k, 1)
    e = I.size
    rows = np.arange(e)
    pair = sparse.coo_matrix(
        (np.r_[np.ones(e), -np.ones(e)], (np.r_[rows, rows], np.r_[I, J])), shape=(e, k))
    eye = sparse.identity(k, format="coo")
    A = sparse.vstack([pair, -pair, eye, -eye]).tocsr()
    dp = M.dist[free[I], free[J]]
    db = M.dist[free, M.base_index]
    b = np.r_[dp, dp, db, db]
    # edge list (u, v, d) with u - v <= d, in full-space indices
    u = np.r_[free[I], free[J], free, np.full(k, M.base_index)]
    v = np.r_[free[J], free[I], np.full(k, M.base_index), free]
    return free, A, b, u, v


def _polish(M: FiniteMetricSpace, f: np.ndarray, u, v, b, atol: float) -> np.ndarray | None:
    """Recompute a simplex vertex exactly from its tight constraints.

    At a vertex the tight edges connect every point to the base, and walking
    a spanning tree from the base pins each value to a sum of distances.
    Returns None when the tight graph is not connected.
    """
    slack = b - (f[u] - f[v])
    tight = np.flatnonzero(slack <= atol)
    adj: dict[int, list] = {}
    for t in tight:
        adj.setdefault(int(v[t]), []).append((int(u[t]), b[t]))   # f_u = f_v + d
        adj.setdefault(int(u[t]), []).append((int(v[t]), -b[t]))  # f_v = f_u - d
    g = np.full(M.n, np.nan)
    g[M.base_index] = 0.0
    stack = [M.base_index]
    while stack:
        s = stack.pop()
        for w, step in adj.get(s, ()):
            if np.isnan(g[w]):
                g[w] = g[s] + step
                stack.append(w)
    return None if np.isnan(g).any() else g


def free_norm(M: FiniteMetricSpace, m, tol: float = 1e-9) -> FreeNormCertificate:
    """Free norm by dual simplex (HiGHS) over the ``Lip_0`` unit ball.

    The solver's vertex is re-derived from its tight constraints so the
    returned function is feasible to rounding, and the value is the exact
    pairing ``m . f`` with that function.
    """
    c = _coeffs(M, m)
    free, A, b, u, v = _lp_data(M)
    f = np.zeros(M.n)
    if not np.any(c[free]):
        return FreeNormCertificate(0.0, f, 0.0)
    res = linprog(-c[free], A_ub=A, b_ub=b, bounds=(None, None), method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise SolverError(f"LP did not converge: {res.message}",
                          bounds=(None, None) if res.x is None else (float(-res.fun), None))
    f[free] = res.x
    primal = float(-res.fun)
    dual = float(-(b @ res.ineqlin.marginals))
    gap = abs(dual - primal)
    scale = max(1.0, float(np.abs(b).max()))
    g = _polish(M, f, u, v, b, 1e-7 * scale)
    if g is not None and lip_number(g, M).value <= 1 + 1e-12 and c @ g >= c @ f - tol * scale:
        f = g
    value = float(c @ f)
    if lip_number(f, M).value > 1 + tol or abs(value - primal) > tol * max(1.0, abs(primal)) + gap:
        raise SolverError("LP solution failed its own certificate", bounds=(value, dual))
    return FreeNormCertificate(max(value, 0.0), f, gap)


def free_norm_oracle(M: FiniteMetricSpace, m, max_support: int = 4) -> float:
    """Free norm by brute-force vertex enumeration on ``support + base``.

    Restricting to the support is exact because any 1-Lipschitz function on a
    subset extends to the whole space with the same constant. Every choice
    of ``k`` constraint rows with nonsingular (integer, so ``|det| >= 1``)
    matrix is solved, feasible vertices are kept, and the best pairing wins.
    """
    c = _coeffs(M, m)
    b0 = M.base_index
    S = [int(i) for i in np.flatnonzero(c) if i != b0]
    k = len(S)
    if k == 0:
        return 0.0
    if k > max_support:
        raise StructuralError(f"oracle handles support <= {max_support}, got {k}")
    rows, rhs = [], []
    for i in range(k):
        e = np.zeros(k)
        e[i] = 1.0
        d0 = M.dist[S[i], b0]
        rows += [e, -e]
        rhs += [d0, d0]
    for i, j in itertools.combinations(range(k), 2):
        e = np.zeros(k)
        e[i], e[j] = 1.0, -1.0
        dij = M.dist[S[i], S[j]]
        rows += [e, -e]
        rhs += [dij, dij]
    R, h = np.array(rows), np.array(rhs)
    combos = np.array(list(itertools.combinations(range(len(R)), k)))
    As, bs = R[combos], h[combos]
    keep = np.abs(np.linalg.det(As)) > 0.5
    X = np.linalg.solve(As[keep], bs[keep][..., None])[..., 0]
    feas = np.all(X @ R.T <= h + 1e-12 * max(1.0, h.max()), axis=1)
    return float(max((X[feas] @ c[S]).max(), 0.0))


@dataclass(frozen=True, eq=False)
class Linearization:
    """``T_f(m) = sum_i m_i f(i)``, the linear extension of ``f`` to molecules."""

    space: FiniteMetricSpace
    f: np.ndarray = field(repr=False)

    def __call__(self, m) -> float:
        c = _coeffs(self.space, m)
        nz = np.flatnonzero(c)
        return math.fsum(c[nz] * self.f[nz])

    def two_point_norm(self):
        """Sup of ``|T_f(delta_x - delta_y)| / d(x, y)`` with the attaining pair."""
        M = self.space
        best, w = -1.0, None
        for x, y in zip(*M.pairs()):
            m = embed(M, x) - embed(M, y)
            r = abs(self(m)) / M.dist[x, y]
            if r > best:
                best, w = r, (int(x), int(y))
        return float(best), w

    def sampled_check(self, molecules, tol: float = 1e-8):
        """Worst ``|T_f(m)| - (Lip(f) + tol) ||m||`` over the samples (<= 0 means no violation)."""
        L = lip_number(self.f, self.space).value
        norms = parallel_map(lambda mm: free_norm(self.space, mm).value, molecules)
        worst, w = -math.inf, None
        for k, (mm, nm) in enumerate(zip(molecules, norms)):
            excess = abs(self(mm)) - (L + tol) * nm
            if excess > worst:
                worst, w = excess, k
        return worst <= 0, worst, w


def linearize(f, M: FiniteMetricSpace) -> Linearization:
    lip0_norm(f, M)  # raises unless f(base) = 0
    f = as_map(f, M).copy()
    f.setflags(write=False)
    return Linearization(M, f)


@dataclass(frozen=True)
class CorrespondenceReport:
    original: FrameBounds
    embedded: FrameBounds
    max_metric_deviation: float
    tol: float
    embedding_metric: str

    @property
    def agree(self) -> bool:
        return (abs(self.original.a - self.embedded.a) <= self.tol
                and abs(self.original.b - self.embedded.b) <= self.tol)

    def to_dict(self):
        return {"embedding_metric": self.embedding_metric, "agree": self.agree,
                "tolerance": self.tol, "max_metric_deviation": self.max_metric_deviation,
                "original": self.original.to_dict(), "embedded": self.embedded.to_dict()}


def correspondence_check(F: FrameSystem, tol: float = 1e-8,
                         embedding_metric: str = "free") -> CorrespondenceReport:
    """Compare ``F``'s bounds with those of ``{T_{f_n}}`` on ``{delta_x}``.

    ``embedding_metric="free"`` measures ``||delta_x - delta_y||`` by LP;
    ``"raw-l2"`` uses the Euclidean norm of the coefficient vectors instead
    and serves as a negative control.
    """
    M = F.space
    if not F.family.is_lip0():
        raise StructuralError("correspondence needs maps vanishing at the base point")
    I, J = M.pairs()
    deltas = [embed(M, x) for x in range(M.n)]
    if embedding_metric == "free":
        vals = parallel_map(lambda ij: free_norm(M, deltas[ij[0]] - deltas[ij[1]]).value,
                            list(zip(I, J)))
    elif embedding_metric == "raw-l2":
        vals = [float(np.linalg.norm((deltas[x] - deltas[y]).coefficients)) for x, y in zip(I, J)]
    else:
        raise ValueError(f"unknown embedding metric {embedding_metric!r}")
    D = np.zeros((M.n, M.n))
    D[I, J] = vals
    D[J, I] = vals
    E = from_matrix(D, M.point_ids, base_index=M.base_index,
                    tolerance=tol * max(1.0, float(D.max())))
    T = [linearize(f, M) for f in F.family.values]
    values = np.array([[t(dx) for dx in deltas] for t in T])
    G = FrameSystem(LipschitzFamily(E, values, F.family.tail_bound, F.family.family_meta),
                    F.norm)
    dev = float(np.abs(D - M.dist).max())
    return CorrespondenceReport(frame_bounds(F), frame_bounds(G), dev, tol, embedding_metric)
