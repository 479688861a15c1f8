"""Frame systems on finite metric spaces.

A :class:`FrameSystem` pairs a :class:`LipschitzFamily` with a sequence norm.
Its analysis map sends a point ``x`` to ``(f_1(x), ..., f_N(x))``; the
optimal frame bounds are the min and max over pairs of

    ||theta(x) - theta(y)|| / d(x, y)

which on a finite space is an exhaustive, exact scan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, HypothesisError, StructuralError
from .lipschitz import LipschitzFamily, lip_number
from .metric_core import FiniteMetricSpace, product_space
from .seq_norms import SequenceNormSpec, seq_norm

__all__ = [
    "FrameSystem",
    "FrameBounds",
    "ReconstructionMap",
    "CertificationReport",
    "BesselCheck",
    "TransformResult",
    "ReconstructionReport",
    "ProjectionReport",
    "TransportResult",
    "SynthesisReport",
    "analysis",
    "pair_ratios",
    "frame_bounds",
    "certify",
    "is_bessel",
    "scale",
    "bilipschitz_constants",
    "precompose",
    "combine",
    "decoder_nearest",
    "decoder_table",
    "verify_reconstruction",
    "projection_of",
    "transport_frame",
    "synthesis_norm_check",
]

_PAIR_CHUNK = 1 << 22  # entries of the pair-difference buffer per chunk


@dataclass(frozen=True, eq=False)
class FrameSystem:
    family: LipschitzFamily
    norm: SequenceNormSpec = field(default_factory=SequenceNormSpec)

    def __post_init__(self):
        if not isinstance(self.norm, SequenceNormSpec):
            object.__setattr__(self, "norm", SequenceNormSpec.from_json(self.norm))

    @property
    def space(self) -> FiniteMetricSpace:
        return self.family.space

    @property
    def theta(self) -> np.ndarray:
        """Analysis vectors as rows: ``theta[x] = (f_1(x), ..., f_N(x))``."""
        return self.family.values.T

    @property
    def p(self) -> float:
        return self.norm.p

    def with_values(self, values, tail_bound=None, **meta) -> "FrameSystem":
        return FrameSystem(self.family.with_values(values, tail_bound, **meta), self.norm)

    def require_minkowski(self, what: str):
        if self.norm.quasi_flag:
            raise DomainError(f"{what} uses Minkowski's inequality; p={self.p} < 1 "
                              "only gives a quasi-norm")


def analysis(F: FrameSystem, x: int) -> np.ndarray:
    if not 0 <= x < F.space.n:
        raise StructuralError(f"point index {x} out of range")
    return F.family.values[:, x].copy()


def pair_ratios(F: FrameSystem):
    """``(I, J, ratios)`` for every pair ``i < j`` in lexicographic order."""
    theta, D = F.theta, F.space.dist
    I, J = F.space.pairs()
    ratios = np.empty(I.size)
    step = max(1, _PAIR_CHUNK // max(1, theta.shape[1]))
    for s in range(0, I.size, step):
        i, j = I[s:s + step], J[s:s + step]
        ratios[s:s + step] = seq_norm(theta[i] - theta[j], F.norm) / D[i, j]
    return I, J, ratios


@dataclass(frozen=True)
class FrameBounds:
    """Optimal bounds of the (truncated) family on the finite space.

    ``tail`` is the family's absolute truncation bound; ``tail_ratio`` is
    ``tail / min d(x, y)``, the most any pair ratio of the untruncated family
    can exceed the truncated one (for ``p >= 1``).
    """

    a: float
    b: float
    witness_low: tuple
    witness_high: tuple
    tail: float = 0.0
    tail_ratio: float = 0.0

    def to_dict(self):
        return {"a": self.a, "b": self.b, "witness_low": list(self.witness_low),
                "witness_high": list(self.witness_high), "tail": self.tail,
                "tail_ratio": self.tail_ratio}


def frame_bounds(F: FrameSystem) -> FrameBounds:
    I, J, r = pair_ratios(F)
    lo, hi = int(np.argmin(r)), int(np.argmax(r))
    tail = float(F.family.tail_bound)
    return FrameBounds(float(r[lo]), float(r[hi]), (int(I[lo]), int(J[lo])),
                       (int(I[hi]), int(J[hi])), tail, tail / F.space.min_distance())


@dataclass(frozen=True)
class CertificationReport:
    claimed: tuple
    computed: FrameBounds
    tolerance: float
    lower_ok: bool
    upper_ok: bool
    reconstruction: "ReconstructionReport | None" = None

    @property
    def passed(self) -> bool:
        rec = self.reconstruction is None or self.reconstruction.ok
        return self.lower_ok and self.upper_ok and rec

    def to_dict(self):
        d = {"claimed": {"a": self.claimed[0], "b": self.claimed[1]},
             "computed": self.computed.to_dict(), "tolerance": self.tolerance,
             "lower_ok": self.lower_ok, "upper_ok": self.upper_ok, "passed": self.passed}
        if not self.lower_ok:
            d["lower_witness"] = list(self.computed.witness_low)
        if not self.upper_ok:
            d["upper_witness"] = list(self.computed.witness_high)
        if self.reconstruction is not None:
            d["reconstruction"] = self.reconstruction.to_dict()
        return d


def certify(F: FrameSystem, claimed_a: float, claimed_b: float, tol: float = 0.0,
            decoder: "ReconstructionMap | None" = None) -> CertificationReport:
    """Check claimed bounds against the exact scan, charging the truncation tail.

    Adding the dropped terms can only raise each pair ratio (for ``p >= 1``
    by at most ``tail_ratio``), so the computed ``a`` is a sound lower value
    and the upper check must absorb ``b + tail_ratio``.
    """
    if claimed_a > claimed_b:
        raise DomainError("claimed lower bound exceeds claimed upper bound")
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    fb = frame_bounds(F)
    tail_r = fb.tail_ratio
    if F.norm.quasi_flag and fb.tail > 0:
        tail_r = math.inf
    lower_ok = fb.a >= claimed_a - tol
    upper_ok = fb.b + tail_r <= claimed_b + tol
    rec = None if decoder is None else verify_reconstruction(F, decoder, tol)
    return CertificationReport((claimed_a, claimed_b), fb, tol, lower_ok, upper_ok, rec)


class BesselCheck(NamedTuple):
    ok: bool
    witness: tuple | None
    b: float


def is_bessel(F: FrameSystem, claimed_b: float, tol: float = 0.0) -> BesselCheck:
    fb = frame_bounds(F)
    ok = fb.b + fb.tail_ratio <= claimed_b + tol
    return BesselCheck(bool(ok), None if ok else fb.witness_high, fb.b)


@dataclass(frozen=True)
class TransformResult:
    system: FrameSystem
    predicted: tuple
    computed: FrameBounds
    tol: float = 1e-12

    @property
    def within(self) -> bool:
        lo, hi = self.predicted
        s = self.tol * max(1.0, abs(hi))
        return self.computed.a >= lo - s and self.computed.b <= hi + s

    def to_dict(self):
        return {"predicted": {"a": self.predicted[0], "b": self.predicted[1]},
                "computed": self.computed.to_dict(), "within": self.within}


def scale(F: FrameSystem, lam: float) -> TransformResult:
    if lam == 0:
        raise DomainError("scaling by zero destroys the lower frame bound")
    fb = frame_bounds(F)
    G = F.with_values(lam * F.family.values, abs(lam) * F.family.tail_bound)
    return TransformResult(G, (abs(lam) * fb.a, abs(lam) * fb.b), frame_bounds(G))


def _check_bijection(A, n) -> np.ndarray:
    A = np.asarray(A, dtype=int)
    if A.shape != (n,) or sorted(A.tolist()) != list(range(n)):
        raise HypothesisError("point map must be a bijection of the space onto itself")
    return A


def bilipschitz_constants(M: FiniteMetricSpace, A) -> tuple:
    """Exact ``(c, d)`` with ``c d(x,y) <= d(Ax, Ay) <= d d(x,y)``."""
    A = np.asarray(A, dtype=int)
    I, J = M.pairs()
    r = M.dist[A[I], A[J]] / M.dist[I, J]
    return float(r.min()), float(r.max())


def precompose(F: FrameSystem, A) -> TransformResult:
    """Maps ``f_n o A`` for a point bijection ``A`` (array: ``x -> A[x]``)."""
    A = _check_bijection(A, F.space.n)
    c, d = bilipschitz_constants(F.space, A)
    fb = frame_bounds(F)
    G = F.with_values(F.family.values[:, A])
    return TransformResult(G, (fb.a * c, fb.b * d), frame_bounds(G))


def combine(F: FrameSystem, G: FrameSystem, lam: float) -> TransformResult:
    """``f_n + lam g_n``; predicted bounds ``a - |lam| d_G`` and ``b + |lam| d_G``."""
    F.require_minkowski("combine")
    if G.space is not F.space and not np.array_equal(G.space.dist, F.space.dist):
        raise StructuralError("families live on different spaces")
    if len(G.family) != len(F.family):
        raise StructuralError("families have different lengths")
    fa, gb = frame_bounds(F), frame_bounds(G)
    a, b, dG = fa.a, fa.b, gb.b
    if abs(lam) * dG >= a:
        raise HypothesisError(f"|lambda| = {abs(lam)} must be below a/d = {a}/{dG}")
    H = F.with_values(F.family.values + lam * G.family.values,
                      F.family.tail_bound + abs(lam) * G.family.tail_bound)
    return TransformResult(H, (a - abs(lam) * dG, b + abs(lam) * dG), frame_bounds(H))


@dataclass(frozen=True, eq=False)
class ReconstructionMap:
    """Decoder from coefficient vectors back to the space.

    ``output="index"`` decoders return a point index; ``output="coordinate"``
    decoders return a position to compare against ``space.coords``.
    """

    strategy: str
    func: Callable
    output: str = "index"
    lip_estimate: float = math.nan

    def __call__(self, c):
        return self.func(np.asarray(c, dtype=float))


def decoder_nearest(F: FrameSystem) -> ReconstructionMap:
    """Point whose analysis vector is nearest to ``c``; ties go to the lowest index."""
    fb = frame_bounds(F)
    if not fb.a > 0:
        raise HypothesisError("analysis map is not injective (a = 0); no decoder",
                              witness=fb.witness_low)
    theta = F.theta.copy()
    norm = F.norm

    def nearest(c):
        return int(np.argmin(seq_norm(theta - c[None, :], norm)))

    return ReconstructionMap("nearest-preimage", nearest, "index", 1.0 / fb.a)


def decoder_table(F: FrameSystem, table) -> ReconstructionMap:
    """Nearest preimage followed by the point relabelling ``table``.

    The identity table gives :func:`decoder_nearest`; anything else is a
    deliberately wrong decoder, useful as a negative control.
    """
    table = np.asarray(table, dtype=int)
    if table.shape != (F.space.n,) or table.min() < 0 or table.max() >= F.space.n:
        raise StructuralError("decoder table must map point indices to point indices")
    S = decoder_nearest(F)
    return ReconstructionMap("table", lambda c: int(table[S(c)]), "index")


@dataclass(frozen=True)
class ReconstructionReport:
    ok: bool
    max_error: float
    failures: tuple
    lip_estimate: float
    n_samples: int

    @property
    def witness(self):
        return self.failures[0] if self.failures else None

    def to_dict(self):
        return {"ok": self.ok, "max_error": self.max_error,
                "failures": [list(f) for f in self.failures],
                "lip_estimate": self.lip_estimate, "n_samples": self.n_samples}


def _sample_coefficients(F: FrameSystem, count: int, seed, spread: float = 0.25):
    """Analysis vectors plus Gaussian perturbations of random ones."""
    rng = np.random.default_rng(seed)
    theta = F.theta
    if count <= 0:
        return theta.copy()
    s = spread * max(float(np.std(theta)), 1e-12)
    base = theta[rng.integers(0, theta.shape[0], size=count)]
    return np.vstack([theta, base + s * rng.standard_normal(base.shape)])


def _output_distance(F: FrameSystem, S: ReconstructionMap, u, v) -> float:
    if S.output == "index":
        return float(F.space.dist[u, v]) if u != v else 0.0
    return float(np.linalg.norm(np.atleast_1d(u) - np.atleast_1d(v)))


def verify_reconstruction(F: FrameSystem, S: ReconstructionMap, tol: float = 1e-9,
                          samples: int = 32, seed=0) -> ReconstructionReport:
    """``S(theta(x)) == x`` for every point, plus a measured Lipschitz constant of ``S``."""
    theta = F.theta
    failures, max_err = [], 0.0
    slack = tol + F.family.tail_bound
    for x in range(F.space.n):
        out = S(theta[x])
        if S.output == "index":
            err = 0.0 if int(out) == x else math.inf
            if err:
                failures.append((x, int(out)))
        else:
            if F.space.coords is None:
                raise StructuralError("coordinate decoder on a space without coordinates")
            err = float(np.linalg.norm(np.atleast_1d(out) - F.space.coords[x]))
            if err > slack:
                failures.append((x, np.atleast_1d(out).tolist()))
        max_err = max(max_err, err)

    C = _sample_coefficients(F, samples, seed)
    outs = [S(c) for c in C]
    lip = 0.0
    for i in range(len(C)):
        dc = seq_norm(C[i + 1:] - C[i], F.norm)
        for k, j in enumerate(range(i + 1, len(C))):
            if dc[k] > 0:
                lip = max(lip, _output_distance(F, S, outs[i], outs[j]) / dc[k])
    return ReconstructionReport(not failures, max_err, tuple(failures), lip, len(C))


@dataclass(frozen=True)
class ProjectionReport:
    idempotent: bool
    range_ok: bool
    fixes_image: bool
    witness: object
    n_samples: int

    @property
    def ok(self) -> bool:
        return self.idempotent and self.range_ok and self.fixes_image

    def to_dict(self):
        return {"ok": self.ok, "idempotent": self.idempotent, "range_ok": self.range_ok,
                "fixes_image": self.fixes_image, "witness": self.witness,
                "n_samples": self.n_samples}


def projection_of(F: FrameSystem, S: ReconstructionMap, samples: int = 64,
                  seed=0) -> ProjectionReport:
    """Checks that ``P = theta o S`` is idempotent with range inside ``theta(M)``."""
    if S.output != "index":
        raise StructuralError("projection check needs an index-valued decoder")
    theta = F.theta
    C = _sample_coefficients(F, samples, seed)
    idem = rng_ok = fixes = True
    witness = None
    for k, c in enumerate(C):
        x = int(S(c))
        if not 0 <= x < F.space.n:
            rng_ok = False
            witness = witness or {"sample": k, "decoded": x}
            continue
        Pc = theta[x]
        PPc = theta[int(S(Pc))]
        if not np.array_equal(PPc, Pc):
            idem = False
            witness = witness or {"sample": k, "P(c)": Pc.tolist(), "P(P(c))": PPc.tolist()}
        if k < F.space.n and not np.array_equal(Pc, theta[k]):
            fixes = False
            witness = witness or {"point": k, "P(theta(x))": Pc.tolist()}
    return ProjectionReport(idem, rng_ok, fixes, witness, len(C))


@dataclass(frozen=True)
class TransportResult:
    transform: TransformResult
    decoder: ReconstructionMap
    reconstruction: ReconstructionReport

    @property
    def system(self) -> FrameSystem:
        return self.transform.system

    @property
    def ok(self) -> bool:
        return self.transform.within and self.reconstruction.ok


def transport_frame(F: FrameSystem, S: ReconstructionMap, A, B) -> TransportResult:
    """``({f_n o A}, B o S)`` for a bijection ``A`` and a point map ``B`` with ``B o A = id``."""
    n = F.space.n
    A = _check_bijection(A, n)
    B = np.asarray(B, dtype=int)
    if B.shape != (n,) or B.min() < 0 or B.max() >= n:
        raise StructuralError("B must map point indices to point indices")
    bad = np.nonzero(B[A] != np.arange(n))[0]
    if bad.size:
        x = int(bad[0])
        raise HypothesisError(f"B(A({x})) = {int(B[A[x]])} != {x}", witness=(x,))
    if S.output != "index":
        raise StructuralError("transport needs an index-valued decoder")
    T = precompose(F, A)
    dec = ReconstructionMap(f"B o {S.strategy}", lambda c: int(B[int(S(c))]), "index")
    return TransportResult(T, dec, verify_reconstruction(T.system, dec))


@dataclass(frozen=True)
class SynthesisReport:
    bound: float
    max_found: float
    n_samples: int
    violations: int
    worst_coefficients: list

    @property
    def ok(self) -> bool:
        return self.violations == 0

    @property
    def verdict(self) -> str:
        if self.ok:
            return f"no violation found among {self.n_samples} samples"
        return f"{self.violations} of {self.n_samples} samples exceed the bound"

    def to_dict(self):
        return {"bound": self.bound, "max_found": self.max_found,
                "n_samples": self.n_samples, "violations": self.violations,
                "verdict": self.verdict, "worst_coefficients": self.worst_coefficients}


def synthesis_norm_check(F: FrameSystem, b: float, trials: int = 100, seed=0,
                         tol: float = 1e-9, coefficients=None) -> SynthesisReport:
    """Sampled check of ``||T|| <= b`` for ``T a = ((x, y) -> sum a_n (f_n(x) - f_n(y)))``.

    Each coefficient vector is normalised to unit ``l^q`` norm, ``q`` the
    conjugate of ``p``; the Lip_0 norm of ``T a`` is scanned exactly over
    ``M x M`` with the sum metric.
    """
    p = F.p
    if not (p > 1 and math.isfinite(p)):
        raise DomainError(f"synthesis check needs 1 < p < inf, got p={p}")
    if not F.family.is_lip0():
        raise HypothesisError("synthesis check needs maps vanishing at the base point")
    q = F.norm.conjugate
    M = F.space
    P = product_space(M, M)
    V = F.family.values
    if coefficients is None:
        rng = np.random.default_rng(seed)
        coefficients = rng.standard_normal((trials, V.shape[0]))
    coefficients = np.atleast_2d(np.asarray(coefficients, dtype=float))
    best, worst, bad = 0.0, None, 0
    for a in coefficients:
        nq = seq_norm(a, q)
        if nq > 0:
            a = a / nq
        g = a @ V
        h = (g[:, None] - g[None, :]).ravel()
        val = lip_number(h, P).value
        if val > b + tol:
            bad += 1
        if worst is None or val > best:
            best, worst = val, a.tolist()
    return SynthesisReport(b, best, len(coefficients), bad, worst)
