"""Stability of metric frames under perturbation.

Closed-form predictions for perturbed families, exhaustive verification of
the prefix hypothesis on finite spaces, and the fixed-point (Neumann-type)
inversion used to rebuild a reconstruction operator for a perturbed frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ContractionError, DomainError, HypothesisError, StructuralError
from .frames import FrameBounds, FrameSystem, frame_bounds
from .lipschitz import lip_number
from .seq_norms import SequenceNormSpec, seq_norm

__all__ = [
    "PerturbationParams",
    "StabilityParams",
    "predict_bounds_perturb",
    "HypothesisCheck",
    "verify_perturbation_hypothesis",
    "minimal_gamma",
    "PerturbationReport",
    "perturb_and_certify",
    "ClosenessResult",
    "quadratic_closeness",
    "BesselPerturbReport",
    "bessel_perturb",
    "InversionResult",
    "invert_lip",
    "sample_lipschitz",
    "smooth_perturbation",
    "StabilityReport",
    "stability_reconstruct",
]


@dataclass(frozen=True)
class PerturbationParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    p: float | None = None

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")
        if self.p is not None and not self.p >= 1:
            raise DomainError(f"perturbation results need p >= 1, got p={self.p}")

    def check_bessel(self):
        if not self.beta < 1:
            raise HypothesisError(f"beta < 1 violated (beta = {self.beta})")

    def check_frame(self, a: float):
        self.check_bessel()
        if not self.alpha < 1:
            raise HypothesisError(f"alpha < 1 violated (alpha = {self.alpha})")
        if not self.gamma < (1 - self.alpha) * a:
            raise HypothesisError(
                f"gamma < (1 - alpha) a violated ({self.gamma} >= {(1 - self.alpha) * a})")


@dataclass(frozen=True)
class StabilityParams:
    alpha: float
    gamma: float
    s_norm: float
    theta_norm: float

    @property
    def q(self) -> float:
        return self.s_norm * (self.alpha * self.theta_norm + self.gamma)


def predict_bounds_perturb(a: float, b: float, params: PerturbationParams) -> tuple:
    """``(((1-alpha) a - gamma) / (1+beta), ((1+alpha) b + gamma) / (1-beta))``."""
    params.check_frame(a)
    al, be, ga = params.alpha, params.beta, params.gamma
    return ((1 - al) * a - ga) / (1 + be), ((1 + al) * b + ga) / (1 - be)


def _norm_spec(F: FrameSystem, params: PerturbationParams | None) -> SequenceNormSpec:
    p = F.p if params is None or params.p is None else params.p
    if not p >= 1:
        raise DomainError(f"perturbation results need p >= 1, got p={p}")
    return SequenceNormSpec(p)


def _aligned(F: FrameSystem, G: FrameSystem):
    if F.space.n != G.space.n or not np.array_equal(F.space.dist, G.space.dist):
        raise StructuralError("families live on different spaces")
    if len(F.family) != len(G.family):
        raise StructuralError(f"family lengths differ: {len(F.family)} vs {len(G.family)}")


def _prefix_norms(diff: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(diff)
    if math.isinf(p):
        return np.maximum.accumulate(a, axis=1)
    return np.cumsum(a ** p, axis=1) ** (1.0 / p)


def _prefix_terms(F: FrameSystem, G: FrameSystem, p: float):
    I, J = F.space.pairs()
    df = F.theta[I] - F.theta[J]
    dg = G.theta[I] - G.theta[J]
    return (I, J, F.space.dist[I, J], _prefix_norms(df - dg, p),
            _prefix_norms(df, p), _prefix_norms(dg, p))


class HypothesisCheck(NamedTuple):
    holds: bool
    witness: tuple | None
    max_excess: float

    def to_dict(self):
        return {"holds": self.holds, "max_excess": self.max_excess,
                "witness": None if self.witness is None else
                {"x": self.witness[0], "y": self.witness[1], "m": self.witness[2]}}


def verify_perturbation_hypothesis(F: FrameSystem, G: FrameSystem,
                                   params: PerturbationParams,
                                   tol: float = 1e-12) -> HypothesisCheck:
    """Check the prefix inequality for every pair and every prefix length ``m``.

    ``||(f-g)_{1..m}(x) - (f-g)_{1..m}(y)|| <= alpha ||..f..|| + beta ||..g..|| + gamma d(x,y)``

    ``witness`` is ``(x, y, m)`` at the largest excess (``m`` counts from 1).
    A relative slack of ``tol`` absorbs rounding only.
    """
    _aligned(F, G)
    spec = _norm_spec(F, params)
    I, J, d, lhs, nf, ng = _prefix_terms(F, G, spec.p)
    rhs = params.alpha * nf + params.beta * ng + params.gamma * d[:, None]
    excess = lhs - rhs
    slack = tol * np.maximum(rhs, d[:, None])
    t, m = np.unravel_index(int(np.argmax(excess - slack)), excess.shape)
    worst = float(excess[t, m])
    holds = bool(np.all(excess <= slack))
    w = None if holds else (int(I[t]), int(J[t]), int(m) + 1)
    return HypothesisCheck(holds, w, worst)


def minimal_gamma(F: FrameSystem, G: FrameSystem, alpha: float = 0.0, beta: float = 0.0,
                  p: float | None = None) -> float:
    """Smallest ``gamma`` making the prefix hypothesis hold for the given alpha, beta."""
    _aligned(F, G)
    spec = _norm_spec(F, PerturbationParams(alpha, beta, 0.0, p))
    _, _, d, lhs, nf, ng = _prefix_terms(F, G, spec.p)
    need = (lhs - alpha * nf - beta * ng) / d[:, None]
    return max(0.0, float(need.max()))


@dataclass(frozen=True)
class PerturbationReport:
    applicable: bool
    hypothesis: HypothesisCheck
    original: FrameBounds
    actual: FrameBounds | None = None
    predicted: tuple | None = None
    lower_ok: bool = False
    upper_ok: bool = False
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.applicable and self.lower_ok and self.upper_ok

    def to_dict(self):
        d = {"applicable": self.applicable, "passed": self.passed,
             "hypothesis": self.hypothesis.to_dict(), "original": self.original.to_dict()}
        if self.reason:
            d["reason"] = self.reason
        if self.predicted is not None:
            d["predicted"] = {"a": self.predicted[0], "b": self.predicted[1]}
        if self.actual is not None:
            d["actual"] = self.actual.to_dict()
            d["lower_ok"], d["upper_ok"] = self.lower_ok, self.upper_ok
        return d


def perturb_and_certify(F: FrameSystem, G: FrameSystem, params: PerturbationParams,
                        tol: float = 1e-9) -> PerturbationReport:
    """Predict ``G``'s bounds from ``F``'s and check them against an exact scan of ``G``.

    Refuses (``applicable=False``) when the prefix hypothesis or the parameter
    conditions fail, since the prediction then says nothing.
    """
    hyp = verify_perturbation_hypothesis(F, G, params)
    fb = frame_bounds(F)
    if not hyp.holds:
        return PerturbationReport(False, hyp, fb, reason="prefix hypothesis fails")
    try:
        pred = predict_bounds_perturb(fb.a, fb.b, params)
    except HypothesisError as exc:
        return PerturbationReport(False, hyp, fb, reason=str(exc))
    gb = frame_bounds(G)
    slack = tol + fb.tail_ratio + gb.tail_ratio
    return PerturbationReport(True, hyp, fb, gb, pred,
                              gb.a >= pred[0] - slack, gb.b <= pred[1] + slack)


@dataclass(frozen=True)
class ClosenessResult:
    r: float
    a: float
    b: float
    lip_differences: np.ndarray = field(repr=False)

    @property
    def available(self) -> bool:
        return self.r < self.a

    @property
    def predicted(self) -> tuple | None:
        return (self.a - self.r, self.b + self.r) if self.available else None

    @property
    def params(self) -> PerturbationParams | None:
        return PerturbationParams(0.0, 0.0, self.r) if self.available else None

    def to_dict(self):
        return {"r": self.r, "a": self.a, "b": self.b, "available": self.available,
                "predicted": None if not self.available else
                {"a": self.predicted[0], "b": self.predicted[1]}}


def quadratic_closeness(F: FrameSystem, G: FrameSystem, p: float | None = None) -> ClosenessResult:
    """``r = ||(Lip(f_n - g_n))_n||_p``; predicts bounds ``a - r``, ``b + r`` when ``r < a``."""
    _aligned(F, G)
    spec = _norm_spec(F, PerturbationParams(p=p))
    diffs = F.family.values - G.family.values
    lips = np.array([lip_number(h, F.space).value for h in diffs])
    fb = frame_bounds(F)
    return ClosenessResult(float(seq_norm(lips, spec)), fb.a, fb.b, lips)


@dataclass(frozen=True)
class BesselPerturbReport:
    predicted: float
    actual: float
    hypothesis: HypothesisCheck
    ok: bool

    def to_dict(self):
        return {"predicted": self.predicted, "actual": self.actual,
                "hypothesis": self.hypothesis.to_dict(), "ok": self.ok}


def bessel_perturb(F: FrameSystem, G: FrameSystem, params: PerturbationParams,
                   tol: float = 1e-9) -> BesselPerturbReport:
    """Upper-bound-only version: ``b' = ((1+alpha) b + gamma) / (1-beta)``."""
    params.check_bessel()
    hyp = verify_perturbation_hypothesis(F, G, params)
    fb, gb = frame_bounds(F), frame_bounds(G)
    pred = ((1 + params.alpha) * fb.b + params.gamma) / (1 - params.beta)
    slack = tol + fb.tail_ratio + gb.tail_ratio
    return BesselPerturbReport(pred, gb.b, hyp, hyp.holds and gb.b <= pred + slack)


@dataclass(frozen=True)
class InversionResult:
    x: np.ndarray
    iterations: int
    steps: tuple
    converged: bool
    q: float

    @property
    def geometric(self) -> bool:
        """Every step shrinks by at least ``q``, up to rounding in the iterate."""
        s = self.steps
        ulp = 8 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(self.x), initial=0.0)))
        return all(s[k + 1] <= self.q * s[k] + ulp for k in range(len(s) - 1))


def invert_lip(U: Callable, y, q: float, tol: float = 1e-12, max_iter: int = 10_000,
               norm: Callable | None = None) -> InversionResult:
    """Solve ``U(x) = y`` by ``x <- x - U(x) + y`` from ``x = y``.

    ``q`` is the Lipschitz constant of ``I - U`` (must be < 1). Stops once a
    step is at most ``tol * (1 - q)``, which bounds the distance to the
    solution by ``tol * q``.
    """
    if not q < 1:
        raise ContractionError(f"||U - I|| = {q} is not a contraction")
    norm = norm or (lambda v: float(np.linalg.norm(v)))
    y = np.asarray(y, dtype=float)
    x = y.copy()
    steps = []
    for k in range(1, max_iter + 1):
        x_new = x - np.asarray(U(x), dtype=float) + y
        steps.append(norm(x_new - x))
        x = x_new
        if steps[-1] <= tol * (1 - q):
            return InversionResult(x, k, tuple(steps), True, q)
    return InversionResult(x, max_iter, tuple(steps), False, q)


def sample_lipschitz(X, Y, norm_x: Callable | None = None,
                     norm_y: Callable | None = None) -> float:
    """Exact Lipschitz number of the sampled map ``X[i] -> Y[i]`` (Euclidean by default)."""
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1)
    I, J = np.triu_indices(len(X), 1)
    nx = (norm_x or (lambda v: np.linalg.norm(v, axis=-1)))(X[I] - X[J])
    ny = (norm_y or (lambda v: np.linalg.norm(v, axis=-1)))(Y[I] - Y[J])
    keep = nx > 0
    return float((ny[keep] / nx[keep]).max()) if keep.any() else 0.0


def smooth_perturbation(n_out: int, dim: int, eps: float, seed=0) -> Callable:
    """``h(x) = eps * (sin(W x + phi) - sin(phi))`` with ``||W||_op = 1``.

    ``h(0) = 0`` and ``||h(x) - h(y)||_2 <= eps ||x - y||_2``.
    """
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((n_out, dim))
    W /= np.linalg.norm(W, 2)
    phi = rng.uniform(0, 2 * np.pi, n_out)
    s0 = np.sin(phi)

    def h(x):
        return eps * (np.sin(W @ np.asarray(x, dtype=float) + phi) - s0)

    return h


@dataclass(frozen=True, eq=False)
class StabilityReport:
    params: StabilityParams
    T: Callable
    max_reconstruction_error: float
    geometric_ok: bool
    lower_ok: bool
    upper_ok: bool
    printed_lower_ok: bool
    stated_bounds: tuple
    iterations: list
    worst_step_ratio: float
    witness: object = None

    @property
    def q(self) -> float:
        return self.params.q

    def passed(self, tol: float) -> bool:
        return (self.max_reconstruction_error <= tol and self.geometric_ok
                and self.lower_ok and self.upper_ok)

    def to_dict(self):
        return {"q": self.q, "s_norm": self.params.s_norm,
                "theta_f_norm": self.params.theta_norm,
                "alpha": self.params.alpha, "gamma": self.params.gamma,
                "max_reconstruction_error": self.max_reconstruction_error,
                "geometric_ok": self.geometric_ok, "worst_step_ratio": self.worst_step_ratio,
                "lower_ok": self.lower_ok, "upper_ok": self.upper_ok,
                "printed_lower_ok": self.printed_lower_ok,
                "stated_bounds": list(self.stated_bounds),
                "max_iterations": max(self.iterations) if self.iterations else 0,
                "witness": self.witness}


def stability_reconstruct(X, theta_f: Callable, S: Callable, theta_g: Callable,
                          alpha: float = 0.0, gamma: float | None = None,
                          tol: float = 1e-10,
                          p: float = 2.0, base_index: int = 0,
                          max_iter: int = 10_000) -> StabilityReport:
    """Rebuild a reconstruction operator for a perturbed frame on a finite sample.

    ``X`` holds sample points of a finite-dimensional normed space (Euclidean
    norm) with ``X[base_index] = 0``; ``theta_f``, ``theta_g`` map a point to
    its coefficient vector (``l^p`` norm) and ``S`` maps coefficients back.
    The operator norms ``||S||`` and ``||theta_f||`` are exact Lipschitz
    numbers over the sample, so every claim is scoped to that sample.

    ``T(c)`` solves ``S(theta_g(x)) = S(c)`` by :func:`invert_lip`.
    ``gamma=None`` uses the smallest value for which the perturbation
    inequality holds on the sample.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    spec = SequenceNormSpec(p)
    if spec.quasi_flag:
        raise DomainError("stability needs p >= 1")
    cnorm = lambda v: seq_norm(v, spec)  # noqa: E731
    Tf = np.array([np.asarray(theta_f(x), dtype=float) for x in X])
    Tg = np.array([np.asarray(theta_g(x), dtype=float) for x in X])
    z = X[base_index]
    if np.any(z != 0):
        raise HypothesisError("the base sample point must be the origin")
    for name, v in (("f_n(0)", Tf[base_index]), ("g_n(0)", Tg[base_index]),
                    ("S(0)", np.asarray(S(np.zeros(Tf.shape[1])), dtype=float))):
        if np.max(np.abs(v), initial=0.0) > 1e-12:
            raise HypothesisError(f"{name} must vanish")

    I, J = np.triu_indices(len(X), 1)
    dx = np.linalg.norm(X[I] - X[J], axis=1)
    dfg = cnorm((Tf[I] - Tg[I]) - (Tf[J] - Tg[J]))
    df = cnorm(Tf[I] - Tf[J])
    dg = cnorm(Tg[I] - Tg[J])
    if gamma is None:
        gamma = max(0.0, float(((dfg - alpha * df) / dx).max()))
    excess = dfg - (alpha * df + gamma * dx)
    t = int(np.argmax(excess))
    if excess[t] > 1e-12 * max(1.0, df[t] + dx[t]):
        raise HypothesisError("perturbation inequality fails on a sample pair",
                              witness=(int(I[t]), int(J[t])))

    theta_norm = sample_lipschitz(X, Tf, norm_y=cnorm)
    C = np.vstack([Tf, Tg])
    SC = np.array([np.asarray(S(c), dtype=float) for c in C])
    s_norm = sample_lipschitz(C, SC, norm_x=cnorm)
    params = StabilityParams(float(alpha), float(gamma), s_norm, theta_norm)
    q = params.q
    if not q < 1:
        raise HypothesisError(f"contraction constant q = {q} >= 1; inversion not justified")

    def U(x):
        return np.asarray(S(np.asarray(theta_g(x), dtype=float)), dtype=float)

    def T(c):
        return invert_lip(U, S(np.asarray(c, dtype=float)), q, tol, max_iter)

    max_err, geom, iters, worst_ratio, witness = 0.0, True, [], 0.0, None
    for k, x in enumerate(X):
        res = T(Tg[k])
        err = float(np.linalg.norm(res.x - x))
        if err > max_err:
            max_err = err
            if err > tol:
                witness = {"sample": k, "error": err}
        iters.append(res.iterations)
        s = res.steps
        for a_, b_ in zip(s, s[1:]):
            if a_ > 0:
                worst_ratio = max(worst_ratio, b_ / a_)
        if not res.geometric:
            geom = False
            witness = witness or {"sample": k, "steps": list(s)}

    lower_ok = bool(np.all(dx <= s_norm / (1 - q) * dg * (1 + 1e-12)))
    printed_lower_ok = bool(np.all(dx <= dg / (1 - q) * (1 + 1e-12)))
    upper_ok = bool(np.all(dg <= ((1 + alpha) * theta_norm + gamma) * dx * (1 + 1e-12)))
    shift = alpha * theta_norm + gamma
    stated = (float(1.0 / s_norm - shift), float(theta_norm + shift))
    return StabilityReport(params, T, max_err, geom, lower_ok, upper_ok, printed_lower_ok,
                           stated, iters, worst_ratio, witness)
