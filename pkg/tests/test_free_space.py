import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metric_frames.constructions import kuratowski_frame
from metric_frames.errors import NormalizationError, StructuralError
from metric_frames.free_space import (Molecule, correspondence_check, embed, free_norm,
                                      free_norm_oracle, linearize, parallel_map, thread_count)
from metric_frames.frames import FrameSystem
from metric_frames.metric_core import from_matrix, from_points
from metric_frames.seq_norms import SequenceNormSpec

import oracles
from strategies import random_graph_metric, random_planar, spaces


def test_examples():
    two = from_matrix([[0, 3], [3, 0]])
    assert free_norm(two, embed(two, 0) - embed(two, 1)).value == pytest.approx(3, abs=1e-9)
    line = from_points([[0], [1], [2]])
    d02 = embed(line, 0) - embed(line, 2)
    assert free_norm(line, d02).value == pytest.approx(2, abs=1e-9)
    m = embed(line, 2) + embed(line, 1) - 2 * embed(line, 0)
    assert free_norm(line, m).value == pytest.approx(3, abs=1e-9)
    assert free_norm(line, 2 * embed(line, 2)).value == pytest.approx(4, abs=1e-9)


@given(spaces(max_n=8), st.data())
def test_point_molecules(M, data):
    x = data.draw(st.integers(0, M.n - 1))
    lam = data.draw(st.floats(-5, 5))
    assert free_norm(M, embed(M, x)).value == pytest.approx(M.dist[x, M.base_index], abs=1e-9)
    assert free_norm(M, lam * embed(M, x)).value == pytest.approx(
        abs(lam) * M.dist[x, M.base_index], abs=1e-8)
    assert free_norm(M, embed(M, M.base_index)).value == pytest.approx(0, abs=1e-12)
    assert free_norm(M, Molecule.zero(M.n)).value == 0


@given(spaces(max_n=8))
def test_isometry(M):
    for x, y in zip(*M.pairs()):
        v = free_norm(M, embed(M, x) - embed(M, y)).value
        assert abs(v - M.dist[x, y]) <= 1e-9 * max(1.0, M.dist[x, y])


def _molecule(rng, n, k=None):
    c = np.zeros(n)
    idx = rng.choice(n, size=k or rng.integers(1, n + 1), replace=False)
    c[idx] = rng.normal(size=idx.size)
    return Molecule(c)


@given(spaces(max_n=8), st.integers(0, 10_000), st.floats(-4, 4))
def test_norm_axioms_and_certificate(M, seed, lam):
    rng = np.random.default_rng(seed)
    m1, m2 = _molecule(rng, M.n), _molecule(rng, M.n)
    c1, c2 = free_norm(M, m1), free_norm(M, m2)
    tol = 1e-9 * max(1.0, c1.value + c2.value)
    assert free_norm(M, lam * m1).value == pytest.approx(abs(lam) * c1.value, abs=tol * (1 + abs(lam)))
    assert free_norm(M, m1 + m2).value <= c1.value + c2.value + 2 * tol
    for m, c in ((m1, c1), (m2, c2)):
        assert c.check(M, m)
        f = c.optimal_f
        assert f[M.base_index] == 0
        assert oracles.lip(f, M.dist)[0] <= 1 + 1e-9
        assert abs(m.coefficients @ f - c.value) <= 1e-9 * max(1.0, c.value)
        assert c.duality_gap <= 1e-9 * max(1.0, c.value)


@given(st.integers(2, 9), st.integers(0, 10_000))
def test_line_oracle(n, seed):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-5, 5, size=n)
    base = int(rng.integers(n))
    M = from_points(xs[:, None], base_index=base)
    m = _molecule(rng, n)
    want = oracles.line_free_norm(list(xs), base, list(m.coefficients))
    assert free_norm(M, m).value == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_vertex_oracle_agreement():
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(200):
        M = random_graph_metric(8, k) if k % 2 else random_planar(8, k)
        m = _molecule(rng, M.n, k=int(rng.integers(1, 4)))
        v = free_norm(M, m).value
        worst = max(worst, abs(v - free_norm_oracle(M, m)) / max(1.0, v))
    assert worst <= 1e-9


def test_shape_errors():
    M = from_points([[0], [1]])
    with pytest.raises(StructuralError):
        free_norm(M, Molecule(np.ones(3)))
    with pytest.raises(StructuralError):
        Molecule([1.0, math.nan])


def test_linearization_examples():
    M = random_planar(7, 3)
    K = kuratowski_frame(M).system.family
    d0 = M.dist[:, M.base_index]
    for f in K.values:
        T = linearize(f, M)
        assert T(Molecule.zero(M.n)) == 0
    # the Kuratowski map built from the base point itself is x -> d(x, 0) - d(0, 0)
    T = linearize(d0, M)
    for t in range(M.n):
        assert T(embed(M, t)) == d0[t]
    with pytest.raises(NormalizationError):
        linearize(d0 + 1, M)


@given(spaces(min_n=3, max_n=8), st.integers(0, 10_000))
def test_linearization_norm_matches_lipschitz_number(M, seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=M.n)
    f[M.base_index] = 0
    T = linearize(f, M)
    L = oracles.lip(f, M.dist)[0]
    value, pair = T.two_point_norm()
    assert value == pytest.approx(L, rel=1e-12)
    x, y = pair
    assert abs(f[x] - f[y]) / M.dist[x, y] == pytest.approx(L, rel=1e-12)


def test_linearization_sampled_bound():
    M = random_graph_metric(10, 11)
    rng = np.random.default_rng(1)
    f = rng.normal(size=M.n)
    f[M.base_index] = 0
    mols = [_molecule(rng, M.n) for _ in range(100)]
    ok, worst, _ = linearize(f, M).sampled_check(mols)
    assert ok and worst <= 0


def test_correspondence():
    M = random_planar(8, 5)
    F = kuratowski_frame(M).system
    rep = correspondence_check(F)
    assert rep.agree and rep.max_metric_deviation <= 1e-9
    two = from_matrix([[0, 2], [2, 0]])
    assert correspondence_check(kuratowski_frame(two).system).agree


def test_correspondence_negative_control():
    M = random_planar(8, 5)
    F = FrameSystem(kuratowski_frame(M).system.family, SequenceNormSpec(2.0))
    assert correspondence_check(F).agree
    rep = correspondence_check(F, embedding_metric="raw-l2")
    assert not rep.agree and rep.max_metric_deviation > 0.1


def test_parallel_map_respects_thread_cap(monkeypatch):
    monkeypatch.setenv("METRIC_FRAMES_THREADS", "1")
    assert thread_count() == 1
    assert parallel_map(lambda x: x * x, range(5)) == [0, 1, 4, 9, 16]
    monkeypatch.setenv("METRIC_FRAMES_THREADS", "3")
    assert thread_count() == 3
    assert parallel_map(lambda x: -x, [1, 2]) == [-1, -2]
