"""Sequence-space norms on finite coefficient vectors and certified truncation tails."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .errors import DomainError

__all__ = ["SequenceNormSpec", "seq_norm", "tail_bound", "truncation_for_tail"]


@dataclass(frozen=True)
class SequenceNormSpec:
    """``l^p`` norm, ``0 < p <= inf``. For ``p < 1`` it is only a quasi-norm."""

    p: float = 1.0

    def __post_init__(self):
        p = float(self.p)
        if not p > 0:
            raise DomainError(f"p must be positive, got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def quasi_flag(self) -> bool:
        return self.p < 1

    @property
    def conjugate(self) -> float:
        if self.p <= 1:
            raise DomainError(f"no finite conjugate exponent for p={self.p}")
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1)

    @classmethod
    def from_json(cls, obj) -> "SequenceNormSpec":
        p = obj["p"] if isinstance(obj, dict) else obj
        if isinstance(p, str):
            if p.lower() not in ("inf", "infinity"):
                raise DomainError(f"unrecognised exponent {p!r}")
            p = math.inf
        return cls(float(p))

    def to_json(self) -> dict:
        return {"p": "inf" if math.isinf(self.p) else self.p}


def _spec(p) -> SequenceNormSpec:
    return p if isinstance(p, SequenceNormSpec) else SequenceNormSpec(p)


def seq_norm(v, spec=1.0):
    """``(sum |v_n|^p)^(1/p)`` along the last axis, ``max |v_n|`` for ``p = inf``.

    Terms are accumulated in descending magnitude after scaling by the
    largest entry, so the result does not depend on the order of ``v``.
    """
    p = _spec(spec).p
    a = np.abs(np.asarray(v, dtype=float))
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1]) if a.ndim > 1 else 0.0
    top = a.max(axis=-1)
    if math.isinf(p):
        return top if a.ndim > 1 else float(top)
    scale = np.where(top > 0, top, 1.0)
    r = -np.sort(-(a / scale[..., None]), axis=-1)
    if p != 1.0:
        r = r ** p
    s = r.sum(axis=-1)
    if p != 1.0:
        s = s ** (1.0 / p)
    out = scale * s * (top > 0)
    return out if a.ndim > 1 else float(out)


def _check_interval(family: str, interval):
    c, d = (float(t) for t in interval)
    if not (math.isfinite(c) and math.isfinite(d)) or c > d:
        raise DomainError(f"interval [{c}, {d}] must be finite and ordered")
    if family == "log":
        if c <= 1:
            raise DomainError("the log family needs an interval inside (1, inf)")
    elif family == "geometric":
        if c < 1:
            raise DomainError("the geometric family needs an interval inside [1, inf)")
    else:
        raise DomainError(f"unknown family {family!r}")
    return c, d


def tail_bound(family: str, interval, N: int) -> float:
    """Upper bound on ``sum_{n>N} sup_{x,y} |f_n(x) - f_n(y)|`` over the interval.

    log:       ``sum_{n>N} (log d)^n / n!``  (remainder of the exponential series)
    geometric: ``r^(N+1) / (1 - r)`` with ``r = 1 - 1/d``
    """
    c, d = _check_interval(family, interval)
    if N < 0:
        raise DomainError("truncation must be nonnegative")
    if family == "log":
        t = math.log(d)
        # sum_{n>N} t^n/n! = e^t * P(N+1, t), P the regularized lower gamma
        return float(math.exp(t) * gammainc(N + 1, t))
    r = 1.0 - 1.0 / d
    return r ** (N + 1) / (1.0 - r)


def truncation_for_tail(family: str, interval, target: float, max_terms: int = 10_000) -> int:
    """Smallest ``N`` with ``tail_bound(family, interval, N) <= target``."""
    if not target > 0:
        raise DomainError("target tail must be positive")
    for N in range(max_terms + 1):
        if tail_bound(family, interval, N) <= target:
            return N
    raise DomainError(f"no truncation up to {max_terms} reaches tail {target}")
