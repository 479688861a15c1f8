import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metric_frames.constructions import kuratowski_frame
from metric_frames.errors import DomainError, HypothesisError, StructuralError
from metric_frames.frames import (FrameSystem, ReconstructionMap, analysis, certify, combine,
                                  decoder_nearest, decoder_table, frame_bounds, is_bessel,
                                  precompose, projection_of, scale, synthesis_norm_check,
                                  transport_frame, verify_reconstruction)
from metric_frames.lipschitz import LipschitzFamily, kuratowski_functional, lip_number
from metric_frames.metric_core import from_matrix, from_points, product_space
from metric_frames.seq_norms import SequenceNormSpec

from oracles import bounds as brute_bounds
from strategies import random_planar, spaces


def system(M, maps, p=1.0):
    return FrameSystem(LipschitzFamily.from_maps(M, maps), SequenceNormSpec(p))


@pytest.fixture
def kinked():
    """Maps x and min(x, 1) on the line {0, 1, 2}."""
    M = from_points([[0], [1], [2]])
    return system(M, [[0, 1, 2], [0, 1, 1]])


def random_family(M, seed, N=4):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(N, M.n))
    V[:, M.base_index] = 0
    return V


def test_analysis_examples(line3):
    K = kuratowski_frame(line3).system
    assert np.all(analysis(K, line3.base_index) == 0)
    F = system(line3, [[0, 1, 3], [1, 1, 1]])
    assert analysis(F, 2).tolist() == [3, 1]
    assert analysis(K, 1).tolist() == [1, 1]
    with pytest.raises(StructuralError):
        analysis(F, 3)


def test_bounds_examples(line3, kinked):
    for p in (0.5, 1, 2, math.inf):
        fb = frame_bounds(system(line3, [[0, 1, 3]], p))
        assert fb.a == fb.b == 1
    fb = frame_bounds(kinked)
    assert (fb.a, fb.witness_low) == (1, (1, 2))
    assert (fb.b, fb.witness_high) == (2, (0, 1))


@given(spaces(max_n=7), st.integers(0, 1000), st.sampled_from([0.5, 1, 2, 3, math.inf]))
def test_bounds_match_brute_force(M, seed, p):
    V = random_family(M, seed)
    fb = frame_bounds(FrameSystem(LipschitzFamily(M, V), SequenceNormSpec(p)))
    a, b = brute_bounds(V.tolist(), M.dist.tolist(), p)
    assert math.isclose(fb.a, a, rel_tol=1e-12) and math.isclose(fb.b, b, rel_tol=1e-12)


@given(spaces(), st.integers(0, 1000))
def test_permutation_and_isometry_invariance(M, seed):
    V = random_family(M, seed)
    F = FrameSystem(LipschitzFamily(M, V), SequenceNormSpec(2))
    perm = np.random.default_rng(seed).permutation(M.n)
    R = M.relabel(perm)
    G = FrameSystem(LipschitzFamily(R, V[:, perm]), SequenceNormSpec(2))
    fa, fg = frame_bounds(F), frame_bounds(G)
    assert (fa.a, fa.b) == (fg.a, fg.b)


@given(spaces(), st.integers(0, 1000), st.sampled_from([0.5, 1, 2]))
def test_appending_a_map_is_monotone(M, seed, p):
    V = random_family(M, seed)
    F = FrameSystem(LipschitzFamily(M, V[:-1]), SequenceNormSpec(p))
    G = FrameSystem(LipschitzFamily(M, V), SequenceNormSpec(p))
    fa, fg = frame_bounds(F), frame_bounds(G)
    assert fg.b >= fa.b and fg.a >= fa.a


@given(spaces())
def test_kuratowski_sup_frame_is_isometric(M):
    fb = frame_bounds(kuratowski_frame(M).system)
    assert abs(fb.a - 1) <= 1e-12 and abs(fb.b - 1) <= 1e-12


def test_certify(kinked):
    fb = frame_bounds(kinked)
    assert certify(kinked, fb.a, fb.b, 0).passed
    rep = certify(kinked, 1.5, 2, 0)
    assert not rep.passed and not rep.lower_ok and rep.upper_ok
    assert rep.to_dict()["lower_witness"] == [1, 2]
    with pytest.raises(DomainError):
        certify(kinked, 2, 1)
    with pytest.raises(DomainError):
        certify(kinked, 1, 2, -1)


def test_certify_charges_the_tail(line3):
    fam = LipschitzFamily(line3, [[0, 1, 3]], tail_bound=1e-3)
    F = FrameSystem(fam)
    assert not certify(F, 1, 1, 1e-4).passed
    assert certify(F, 1, 1, 1e-3).passed
    Q = FrameSystem(fam, SequenceNormSpec(0.5))
    assert not certify(Q, 1, 1, 1.0).upper_ok


def test_is_bessel(line3):
    assert is_bessel(system(line3, [[2, 2, 2]]), 0).ok
    chk = is_bessel(system(line3, [[0, 1, 3]]), 0.5)
    assert not chk.ok and chk.witness is not None
    assert is_bessel(kuratowski_frame(line3).system, 1).ok


def test_scale(line3):
    K = kuratowski_frame(line3).system
    r = scale(K, 1)
    assert r.predicted == (1, 1) and r.within
    r = scale(K, -2)
    assert r.predicted == (2, 2) and (r.computed.a, r.computed.b) == (2, 2)
    with pytest.raises(DomainError):
        scale(K, 0)


@given(spaces(), st.integers(0, 1000), st.floats(-5, 5).filter(lambda t: abs(t) > 1e-3))
def test_scale_is_exact(M, seed, lam):
    F = FrameSystem(LipschitzFamily(M, random_family(M, seed)), SequenceNormSpec(2))
    r = scale(F, lam)
    assert math.isclose(r.computed.a, r.predicted[0], rel_tol=1e-12)
    assert math.isclose(r.computed.b, r.predicted[1], rel_tol=1e-12)


def test_precompose_examples(line3):
    K = kuratowski_frame(line3).system
    r = precompose(K, [0, 1, 2])
    assert (r.computed.a, r.computed.b) == (1, 1)
    sym = from_points([[-1], [0], [1]], base_index=1)
    S = system(sym, [[-1, 0, 1], [1, 0, 1]], 2)
    r = precompose(S, [2, 1, 0])  # negation
    fb = frame_bounds(S)
    assert (r.computed.a, r.computed.b) == (fb.a, fb.b) and r.predicted == (fb.a, fb.b)
    eq = from_matrix([[0, 1, 1], [1, 0, 1], [1, 1, 0]])  # points 1 and 2 equidistant
    E = system(eq, [[0, 1, 0.5], [0, 0.2, 1]], 1)
    r = precompose(E, [0, 2, 1])
    assert (r.computed.a, r.computed.b) == (frame_bounds(E).a, frame_bounds(E).b)
    with pytest.raises(HypothesisError):
        precompose(K, [0, 0, 1])


@given(spaces(), st.integers(0, 1000))
def test_precompose_within_prediction(M, seed):
    F = FrameSystem(LipschitzFamily(M, random_family(M, seed)), SequenceNormSpec(1))
    A = np.random.default_rng(seed + 1).permutation(M.n)
    assert precompose(F, A).within


def test_combine_examples(line3):
    K = FrameSystem(kuratowski_frame(line3).system.family, SequenceNormSpec(1))
    fb = frame_bounds(K)
    r = combine(K, K, 1e-9)
    shift = 1e-9 * fb.b  # |lam| d_G with G = F
    assert math.isclose(fb.a - r.predicted[0], shift, rel_tol=1e-6)
    assert math.isclose(r.predicted[1] - fb.b, shift, rel_tol=1e-6)
    L = system(line3, [[0, 1, 3]])
    r = combine(L, L, 0.1)
    assert r.predicted == (0.9, 1.1)
    assert math.isclose(r.computed.a, 1.1) and math.isclose(r.computed.b, 1.1) and r.within
    with pytest.raises(HypothesisError):
        combine(L, L, 2)
    with pytest.raises(DomainError):
        combine(system(line3, [[0, 1, 3]], 0.5), system(line3, [[0, 1, 3]], 0.5), 0.1)


@given(spaces(), st.integers(0, 1000), st.sampled_from([1, 2, math.inf]))
def test_combine_within_prediction(M, seed, p):
    rng = np.random.default_rng(seed)
    F = FrameSystem(kuratowski_frame(M).system.family, SequenceNormSpec(p))
    V = rng.normal(size=F.family.values.shape)
    G = F.with_values(V)
    a, dG = frame_bounds(F).a, frame_bounds(G).b
    lam = rng.uniform(-0.99, 0.99) * a / dG
    assert combine(F, G, lam).within


def test_decoder_nearest(kinked):
    S = decoder_nearest(kinked)
    assert [S(kinked.theta[x]) for x in range(3)] == [0, 1, 2]
    assert S([2.9, 1.05]) == 2
    assert S([0.5, 0.5]) == 0  # equidistant from theta(0) and theta(1): lower index
    assert S.lip_estimate == 1.0
    M = from_points([[0], [1], [2]])
    with pytest.raises(HypothesisError):
        decoder_nearest(system(M, [[0, 1, 1]]))


def test_verify_reconstruction(kinked, line3):
    rep = verify_reconstruction(kinked, decoder_nearest(kinked))
    assert rep.ok and rep.lip_estimate > 0
    bad = decoder_table(kinked, [0, 2, 1])
    rep = verify_reconstruction(kinked, bad)
    assert not rep.ok and rep.witness == (1, 2)
    coord = ReconstructionMap("shifted", lambda c: np.array([c[0] + 1e-3]), "coordinate")
    rep = verify_reconstruction(system(line3, [[0, 1, 3]]), coord)
    assert not rep.ok and rep.witness[0] == 0


@given(spaces(), st.integers(0, 1000))
def test_nearest_left_inverse_and_idempotent(M, seed):
    F = FrameSystem(kuratowski_frame(M).system.family, SequenceNormSpec(2))
    S = decoder_nearest(F)
    assert verify_reconstruction(F, S, samples=8, seed=seed).ok
    assert projection_of(F, S, samples=16, seed=seed).ok


def test_projection_examples(kinked):
    S = decoder_nearest(kinked)
    rep = projection_of(kinked, S)
    assert rep.ok and rep.fixes_image
    bad = ReconstructionMap("off-by-one", lambda c: (S(c) + 1) % 3)
    rep = projection_of(kinked, bad)
    assert not rep.idempotent and rep.witness is not None


def test_transport(line3):
    K = kuratowski_frame(line3).system
    S = decoder_nearest(K)
    T = transport_frame(K, S, [0, 1, 2], [0, 1, 2])
    assert T.ok and np.array_equal(T.system.family.values, K.family.values)
    sym = from_points([[-1], [0], [1]], base_index=1)
    KS = kuratowski_frame(sym).system
    T = transport_frame(KS, decoder_nearest(KS), [2, 1, 0], [2, 1, 0])
    assert T.ok and (T.transform.computed.a, T.transform.computed.b) == (1, 1)
    with pytest.raises(HypothesisError) as e:
        transport_frame(K, S, [0, 2, 1], [0, 1, 2])
    assert e.value.witness == (1,)


def test_synthesis_examples(line3):
    K = FrameSystem(kuratowski_frame(line3).system.family, SequenceNormSpec(2))
    b = frame_bounds(K).b
    rep = synthesis_norm_check(K, b, coefficients=[[1.0, 0.0]])
    f1 = K.family.values[0]
    P = product_space(line3, line3)
    h = (f1[:, None] - f1[None, :]).ravel()
    assert rep.max_found == lip_number(h, P).value <= b
    assert synthesis_norm_check(K, b, coefficients=[[0.0, 0.0]]).max_found == 0
    with pytest.raises(DomainError):
        synthesis_norm_check(FrameSystem(K.family, SequenceNormSpec(1)), 1)


@given(st.integers(3, 9), st.integers(0, 1000))
def test_synthesis_respects_the_bessel_bound(n, seed):
    M = random_planar(n, seed)
    K = FrameSystem(kuratowski_frame(M).system.family, SequenceNormSpec(2))
    b = frame_bounds(K).b
    rep = synthesis_norm_check(K, b, trials=20, seed=seed)
    assert rep.ok and rep.verdict == "no violation found among 20 samples"


@given(st.integers(3, 9), st.integers(0, 1000))
def test_kuratowski_two_norm_bound_exceeds_one(n, seed):
    # two functionals move by d(x, y) between a pair of targets x, y, so b_2 >= sqrt 2
    M = random_planar(n, seed)
    K = FrameSystem(kuratowski_frame(M).system.family, SequenceNormSpec(2))
    assert frame_bounds(K).b >= math.sqrt(2) * (1 - 1e-12)
