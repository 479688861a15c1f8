"""Concrete frame builders.

* the two closed-form 1-frames on real intervals (log and geometric series)
* the McShane/Kuratowski frame of an arbitrary finite pointed space
* frames pulled back from an injective embedding into coefficient space
* the sum-decomposition frame on a sampled real interval
* conversions between decoders, projections and left inverses of theta
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, HypothesisError, StructuralError
from .frames import (FrameSystem, ReconstructionMap, decoder_nearest, frame_bounds,
                     projection_of, verify_reconstruction)
from .lipschitz import LipschitzFamily, kuratowski_functional, lip_number
from .metric_core import FiniteMetricSpace, from_points
from .seq_norms import SequenceNormSpec, seq_norm, tail_bound

__all__ = [
    "ClosedFormFamily",
    "ConstructedFrame",
    "closed_form_frame",
    "log_frame",
    "log_sum_decoder",
    "coordinate_sum_decoder",
    "geometric_frame",
    "kuratowski_frame",
    "embedding_frame",
    "sum_decomposition_frame",
    "Conversions",
    "char_conversions",
]


@dataclass(frozen=True)
class ClosedFormFamily:
    """Descriptor of a truncated closed-form family sampled on a uniform grid."""

    name: str
    interval: tuple
    truncation: int
    grid_size: int = 64

    def __post_init__(self):
        c, d = (float(t) for t in self.interval)
        if not (math.isfinite(c) and math.isfinite(d)) or c > d:
            raise DomainError(f"interval [{c}, {d}] must be finite and ordered")
        if self.name == "log" and not c > 1:
            raise DomainError("log family requires 1 < c <= d < inf")
        if self.name == "geometric" and not c >= 1:
            raise DomainError("geometric family requires 1 <= c <= d < inf")
        if self.name not in ("log", "geometric"):
            raise DomainError(f"unknown family {self.name!r}")
        if self.truncation < 1:
            raise DomainError("truncation must be at least 1")
        if self.grid_size < 2:
            raise DomainError("grid needs at least two points")
        object.__setattr__(self, "interval", (c, d))

    @property
    def sample_points(self) -> np.ndarray:
        return np.linspace(*self.interval, self.grid_size)

    def terms(self, x) -> np.ndarray:
        """Rows ``f_0 .. f_N`` evaluated at ``x``."""
        x = np.asarray(x, dtype=float)
        r = np.log(x) if self.name == "log" else 1.0 - 1.0 / x
        out = np.empty((self.truncation + 1,) + x.shape)
        out[0] = 1.0
        for k in range(1, self.truncation + 1):
            out[k] = out[k - 1] * r / k if self.name == "log" else out[k - 1] * r
        return out

    def tail(self) -> float:
        return tail_bound(self.name, self.interval, self.truncation)

    def to_json(self) -> dict:
        return {"type": "family", "name": self.name,
                "params": {"interval": list(self.interval), "grid": self.grid_size},
                "truncation": self.truncation}


@dataclass(frozen=True, eq=False)
class ConstructedFrame:
    system: FrameSystem
    decoder: ReconstructionMap | None = None
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(bool(v.get("ok", True)) if isinstance(v, dict) else bool(v)
                   for v in self.checks.values())


def closed_form_frame(name, interval, grid_size, N, p=1.0) -> FrameSystem:
    """Tabulate the ``log`` or ``geometric`` family on a uniform grid of ``interval``."""
    desc = ClosedFormFamily(name, tuple(interval), int(N), int(grid_size))
    x = desc.sample_points
    M = from_points(x[:, None], base_index=0)
    fam = LipschitzFamily(M, desc.terms(x), desc.tail(),
                          {"name": name, "descriptor": desc})
    return FrameSystem(fam, SequenceNormSpec(p))


def log_frame(interval=(2.0, 10.0), grid_size=64, N=40, p=1.0) -> ConstructedFrame:
    """``f_0 = 1``, ``f_n = (log x)^n / n!`` on a grid, with decoder ``1 + |sum_{n>=1} c_n|``.

    The telescoping identity ``sum_n |f_n(x) - f_n(y)| = |x - y|`` makes this
    an isometric 1-frame up to the truncation tail.
    """
    F = closed_form_frame("log", interval, grid_size, N, p)
    return ConstructedFrame(F, log_sum_decoder())


def log_sum_decoder() -> ReconstructionMap:
    """``c -> 1 + |sum_{n>=1} c_n|``, inverting the log family's analysis map."""

    def decode(c):
        return np.array([1.0 + abs(math.fsum(c[1:]))])

    return ReconstructionMap("log-sum", decode, "coordinate", 1.0)


def coordinate_sum_decoder() -> ReconstructionMap:
    """``c -> sum_n c_n`` (exactly rounded)."""

    def decode(c):
        return np.array([math.fsum(c)])

    return ReconstructionMap("coordinate-sum", decode, "coordinate", 1.0)


def geometric_frame(interval=(1.0, 5.0), grid_size=32, N=120, p=1.0) -> ConstructedFrame:
    """``f_n = (1 - 1/x)^n``, ``n = 0..N``, on a grid inside ``[1, d]``."""
    return ConstructedFrame(closed_form_frame("geometric", interval, grid_size, N, p))


def kuratowski_frame(M: FiniteMetricSpace) -> ConstructedFrame:
    """One Kuratowski functional per non-base point, sup norm, nearest-preimage decoder.

    Checks recorded in ``checks``:

    * ``norm_equality``: ``d(x, 0) == max_n |f_n(x)|`` for every point (exact)
    * ``bessel``: ``max_n |f_n(x) - f_n(y)| <= d(x, y)`` for every pair (to 8 ulps of the diameter)
    * ``decoder_inequality``: ``d(S0 u, S0 v) <= ||u|| + ||v||`` on image pairs
    """
    targets = [t for t in range(M.n) if t != M.base_index]
    fam = LipschitzFamily.from_maps(M, [kuratowski_functional(M, t) for t in targets],
                                    name="kuratowski", targets=targets)
    F = FrameSystem(fam, SequenceNormSpec(math.inf))
    theta = F.theta
    d0 = M.dist[:, M.base_index]

    sup = np.abs(theta).max(axis=1)
    bad = np.nonzero(sup != d0)[0]
    checks = {"norm_equality": {"ok": bad.size == 0,
                                "witness": None if bad.size == 0 else int(bad[0])}}

    I, J = M.pairs()
    diff = np.abs(theta[I] - theta[J]).max(axis=1)
    # d(t,y) - d(t,x) <= d(x,y) holds exactly only in exact arithmetic; the
    # difference carries rounding on the scale of the largest distance
    slack = 8 * np.finfo(float).eps * float(M.dist.max(initial=0.0))
    over = np.nonzero(diff > M.dist[I, J] + slack)[0]
    checks["bessel"] = {"ok": over.size == 0,
                        "witness": None if over.size == 0 else (int(I[over[0]]), int(J[over[0]]))}

    S = decoder_nearest(F)
    images = [S(theta[x]) for x in range(M.n)]
    worst = None
    for i, j in zip(I, J):
        if M.dist[images[i], images[j]] > sup[i] + sup[j]:
            worst = (int(i), int(j))
            break
    checks["decoder_inequality"] = {"ok": worst is None, "witness": worst}
    return ConstructedFrame(F, S, checks)


def embedding_frame(M: FiniteMetricSpace, A, norm=2.0,
                    projection: Callable | None = None, tol: float = 0.0) -> ConstructedFrame:
    """Coordinates of an injective embedding ``A`` (rows = points) as a frame.

    The decoder is ``A^-1 o P``; without ``projection`` it is the nearest
    image in the chosen norm. Frame bounds are then the exact bi-Lipschitz
    constants of ``A``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.shape[0] != M.n:
        raise StructuralError(f"embedding has {A.shape[0]} rows for {M.n} points")
    spec = norm if isinstance(norm, SequenceNormSpec) else SequenceNormSpec.from_json(norm)
    I, J = M.pairs()
    gaps = seq_norm(A[I] - A[J], spec)
    if np.any(gaps == 0):
        t = int(np.argmax(gaps == 0))
        raise HypothesisError("embedding is not injective", witness=(int(I[t]), int(J[t])))
    F = FrameSystem(LipschitzFamily(M, A.T, family_meta={"name": "embedding"}), spec)

    if projection is None:
        S = decoder_nearest(F)
        S = ReconstructionMap("A^-1 o nearest-image", S.func, "index", S.lip_estimate)
    else:
        for x in range(M.n):
            err = float(seq_norm(np.asarray(projection(A[x]), dtype=float) - A[x], spec))
            if err > tol:
                raise HypothesisError(f"projection moves the image of point {x} by {err}",
                                      witness=(x,))

        def decode(c):
            y = np.asarray(projection(c), dtype=float)
            dist = seq_norm(A - y[None, :], spec)
            k = int(np.argmin(dist))
            if dist[k] > tol:
                raise HypothesisError("projection left the image of the embedding")
            return k

        S = ReconstructionMap("A^-1 o P", decode, "index")
    return ConstructedFrame(F, S, {"reconstruction": verify_reconstruction(F, S).ok})


def sum_decomposition_frame(m: int, phi, grid) -> ConstructedFrame:
    """Maps ``f_1 = x/m + phi``, ``f_2 = x/m - phi``, ``f_k = x/m`` summing to ``x``.

    The last map is formed as ``x - (f_1 + ... + f_{m-1})`` so the sum is
    reproduced by ``math.fsum``. ``f_1`` is bi-Lipschitz when ``Lip(phi) < 1/m``.
    """
    if m < 2:
        raise DomainError("need at least two maps")
    x = np.asarray(grid, dtype=float).ravel()
    M = from_points(x[:, None])
    phi = np.asarray(phi, dtype=float)
    lp = lip_number(phi, M)
    if not lp.value < 1.0 / m:
        raise HypothesisError(
            f"Lip(phi) = {lp.value} >= 1/{m}: f_1 = x/{m} + phi is not certified bi-Lipschitz",
            witness=lp.witness)
    maps = [x / m + phi]
    if m > 2:
        maps.append(x / m - phi)
        maps.extend(x / m for _ in range(m - 3))
    partial = np.array([math.fsum(col) for col in np.vstack(maps).T])
    maps.append(x - partial)
    F = FrameSystem(LipschitzFamily.from_maps(M, maps, name="sum-decomposition", m=m),
                    SequenceNormSpec(1.0))

    S = coordinate_sum_decoder()
    sums = np.array([math.fsum(F.family.values[:, k]) for k in range(M.n)])
    mism = np.nonzero(sums != x)[0]
    checks = {"sum_identity": {"ok": mism.size == 0,
                               "witness": None if mism.size == 0 else int(mism[0])},
              "reconstruction": verify_reconstruction(F, S, tol=0.0).ok,
              "f1_lower_lipschitz": 1.0 / m - lp.value}
    return ConstructedFrame(F, S, checks)


@dataclass(frozen=True, eq=False)
class Conversions:
    S: ReconstructionMap
    P: Callable
    V: ReconstructionMap
    checks: dict

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def char_conversions(F: FrameSystem, S: ReconstructionMap | None = None,
                     P: Callable | None = None,
                     V: ReconstructionMap | None = None, samples: int = 64,
                     seed=0) -> Conversions:
    """Given one of decoder ``S``, projection ``P`` onto ``theta(M)``, or left inverse
    ``V``, build the other two: ``P = theta o S``, ``V = theta^-1 o P``, ``S = V``."""
    if sum(o is not None for o in (S, P, V)) != 1:
        raise ValueError("give exactly one of S, P, V")
    fb = frame_bounds(F)
    if not fb.a > 0:
        raise HypothesisError("theta is not injective (a = 0)", witness=fb.witness_low)
    theta = F.theta

    def theta_inv(y):
        hits = np.nonzero(np.all(theta == y[None, :], axis=1))[0]
        if hits.size == 0:
            raise HypothesisError("vector is not in theta(M)")
        return int(hits[0])

    if P is not None:
        proj = P
        V = ReconstructionMap("theta^-1 o P", lambda c: theta_inv(np.asarray(proj(c), float)))
        S = V
    else:
        given = S if S is not None else V
        S = V = given
        P = lambda c: theta[int(given(c))]  # noqa: E731

    left_inverse = verify_reconstruction(F, S).ok
    extends_inverse = all(int(V(theta[x])) == x for x in range(F.space.n))
    proj_report = projection_of(F, S, samples=samples, seed=seed)
    P_matches = all(np.array_equal(P(c), theta[int(S(c))])
                    for c in theta)
    checks = {"left_inverse": left_inverse, "extends_inverse": extends_inverse,
              "idempotent": proj_report.ok, "P_consistent": P_matches}
    return Conversions(S, P, V, checks)
