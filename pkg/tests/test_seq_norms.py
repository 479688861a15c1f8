import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from metric_frames.errors import DomainError
from metric_frames.seq_norms import (SequenceNormSpec, seq_norm, tail_bound,
                                     truncation_for_tail)

from oracles import exp_remainder, geometric_term, log_term, lp

finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = arrays(np.float64, st.integers(1, 12), elements=finite)


def test_examples():
    assert seq_norm([3, 4], 2) == 5
    assert seq_norm([1, -2, 3], math.inf) == 3
    assert seq_norm([1, 1, 1, 1], 0.5) == 16
    assert seq_norm([], 2) == 0


def test_spec():
    assert SequenceNormSpec(0.5).quasi_flag and not SequenceNormSpec(1).quasi_flag
    assert SequenceNormSpec(3).conjugate == 1.5
    assert SequenceNormSpec(math.inf).conjugate == 1
    assert SequenceNormSpec.from_json({"p": "inf"}).p == math.inf
    assert SequenceNormSpec.from_json(SequenceNormSpec(2).to_json()).p == 2
    for bad in (0, -1):
        with pytest.raises(DomainError):
            SequenceNormSpec(bad)
    with pytest.raises(DomainError):
        SequenceNormSpec(1).conjugate


@given(vectors, st.sampled_from([0.5, 1, 1.5, 2, 3, math.inf]))
def test_matches_reference(v, p):
    assert math.isclose(seq_norm(v, p), lp(v, p), rel_tol=1e-12, abs_tol=1e-300)


@given(vectors, st.sampled_from([1, 2, 3]), st.integers(0, 1000))
def test_order_independent(v, p, seed):
    perm = np.random.default_rng(seed).permutation(v.size)
    assert seq_norm(v, p) == seq_norm(v[perm], p)


@given(vectors, st.sampled_from([0.5, 1, 2, math.inf]), st.integers(0, 1000))
def test_monotone(v, p, seed):
    bump = np.abs(np.random.default_rng(seed).normal(size=v.size))
    assert seq_norm(np.abs(v) + bump, p) >= seq_norm(v, p)


@given(vectors)
def test_sup_limit(v):
    # ||v||_inf <= ||v||_p <= L^(1/p) ||v||_inf with L = len(v): the gap closes as p grows
    top = seq_norm(v, math.inf)
    for p in (8, 16, 64):
        assert top * (1 - 1e-12) <= seq_norm(v, p) <= v.size ** (1 / p) * top * (1 + 1e-12)
    if v.size <= 20:
        assert seq_norm(v, 64) <= 1.05 * top + 1e-300


@given(vectors, st.integers(0, 1000), st.sampled_from([1, 1.5, 2, 4, math.inf]))
def test_triangle(v, seed, p):
    w = np.random.default_rng(seed).normal(size=v.size) * 10
    assert seq_norm(v + w, p) <= (seq_norm(v, p) + seq_norm(w, p)) * (1 + 1e-12)


@given(vectors, st.integers(0, 1000), st.sampled_from([0.25, 0.5, 0.9]))
def test_quasi_triangle(v, seed, p):
    w = np.random.default_rng(seed).normal(size=v.size) * 10
    K = 2 ** (1 / p - 1)
    assert seq_norm(v + w, p) <= K * (seq_norm(v, p) + seq_norm(w, p)) * (1 + 1e-12)


def test_quasi_triangle_is_not_a_norm():
    assert seq_norm([1, 1], 0.5) > seq_norm([1, 0], 0.5) + seq_norm([0, 1], 0.5)


def test_tail_examples():
    N = 0
    while math.e * 1 / math.factorial(N + 1) >= 1e-12:
        N += 1
    assert tail_bound("log", (2, math.e), N) <= 1e-12
    for N in (0, 3, 50):
        assert tail_bound("geometric", (1, 1), N) == 0
    # the exponential remainder for N = 0 on [2, 3]: e^(log 3) - 1 = 2
    assert math.isclose(tail_bound("log", (2, 3), 0), 2.0, rel_tol=1e-14)


@given(st.floats(1.01, 30), st.integers(0, 60))
def test_log_tail_is_exponential_remainder(d, N):
    assert math.isclose(tail_bound("log", (1.01, d), N), exp_remainder(math.log(d), N),
                        rel_tol=1e-10, abs_tol=1e-300)


@given(st.floats(1.0, 6.0), st.floats(1.0, 6.0), st.integers(0, 40),
       st.sampled_from(["log", "geometric"]))
def test_tail_bounds_dropped_terms(x, y, N, family):
    lo = 1.5 if family == "log" else 1.0
    x, y = max(x, lo), max(y, lo)
    term = log_term if family == "log" else geometric_term
    dropped = math.fsum(abs(term(x, n) - term(y, n)) for n in range(N + 1, N + 3000))
    assert dropped <= tail_bound(family, (lo, 6.0), N) * (1 + 1e-9) + 1e-300


def test_tail_domain_errors():
    for fam, iv in (("log", (1, 3)), ("log", (0.5, 3)), ("geometric", (0.9, 3)),
                    ("log", (3, 2)), ("log", (2, math.inf)), ("cosine", (2, 3))):
        with pytest.raises(DomainError):
            tail_bound(fam, iv, 3)


def test_truncation_for_tail():
    N = truncation_for_tail("log", (2, 10), 1e-9)
    assert tail_bound("log", (2, 10), N) <= 1e-9 < tail_bound("log", (2, 10), N - 1)
    with pytest.raises(DomainError):
        truncation_for_tail("geometric", (1, 1e6), 1e-12, max_terms=10)
