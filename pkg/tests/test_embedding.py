import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from distbound.distances import (
    DistanceMatrix, build_bhattacharyya, build_from_points, build_hamming, build_lee, bsc,
    named_distance,
)
from distbound.embedding import (
    center, check_concavity_sampled, check_divisible, check_negative_type, classify,
    classify_blocks, euclidean_embed,
)
from distbound.errors import InfiniteDistanceError, NotEmbeddableError

TRIANGLE = DistanceMatrix([[0, 0.01, 0.01], [0.01, 0, 1], [0.01, 1, 0]])


def test_center_examples():
    assert np.all(center(DistanceMatrix(np.zeros((3, 3)))).entries == 0)
    assert np.allclose(center(build_hamming(2)).entries, [[0.5, -0.5], [-0.5, 0.5]])
    with pytest.raises(InfiniteDistanceError):
        center(named_distance("pentagon"))


@given(st.integers(2, 7), st.integers(0, 10_000))
def test_center_rows_sum_to_zero(K, seed):
    d = np.random.default_rng(seed).uniform(0, 3, (K, K))
    d = d + d.T
    np.fill_diagonal(d, 0)
    dt = center(DistanceMatrix(d)).entries
    assert np.allclose(dt.sum(axis=1), 0, atol=1e-12)
    assert np.allclose(dt, dt.T)


def test_negative_type_examples():
    for K in range(2, 7):
        assert check_negative_type(build_hamming(K))[0]
    assert check_negative_type(build_lee(5))[0]
    ok, c = check_negative_type(TRIANGLE)
    assert not ok
    assert abs(c.sum()) < 1e-12
    assert c @ TRIANGLE.entries @ c > 0


def test_divisible_examples():
    assert check_divisible(build_hamming(2), (1.0,))
    eig = np.linalg.eigvalsh(build_hamming(2).similarity(1.0))
    assert np.allclose(sorted(eig), [1 - math.exp(-1), 1 + math.exp(-1)])
    ok, rho = check_divisible(TRIANGLE, (0.25, 0.5, 1, 2, 5, 10, 100), return_rho=True)
    assert not ok and rho is not None
    pts = np.random.default_rng(3).normal(size=(6, 3))
    assert check_divisible(build_from_points(pts), (0.5, 1, 2, 10))


def test_concavity_examples():
    assert check_concavity_sampled(build_hamming(4), trials=1000)
    assert not check_concavity_sampled(TRIANGLE, trials=1000)
    assert check_concavity_sampled(DistanceMatrix([[0]]))


def test_embed_examples():
    U = euclidean_embed(build_hamming(3))
    G = (U - U.mean(axis=0)) @ (U - U.mean(axis=0)).T
    sq = np.sum((U[:, None] - U[None]) ** 2, axis=-1)
    assert np.allclose(sq, 1 - np.eye(3), atol=1e-12)
    # centred vectors of three equidistant points: mutually orthogonal after adding a common offset
    assert np.allclose(np.diag(G), 1 / 3, atol=1e-12)
    Z = euclidean_embed(DistanceMatrix(np.zeros((4, 4))))
    assert np.allclose(Z, Z[0])
    with pytest.raises(NotEmbeddableError) as info:
        euclidean_embed(TRIANGLE)
    assert info.value.witness is not None


def _gram(X):
    X = X - X.mean(axis=0)
    return X @ X.T


@pytest.mark.parametrize("K", [5, 6])
def test_lee_embedding_matches_explicit_points(K):
    from test_distances import LEE5_COLUMNS, LEE6_COLUMNS
    explicit = (LEE5_COLUMNS if K == 5 else LEE6_COLUMNS).T
    U = euclidean_embed(build_lee(K))
    assert np.allclose(build_from_points(U).entries, build_lee(K).entries, atol=1e-9)
    # equal centred Gram matrices means equal up to a rigid motion
    assert np.allclose(_gram(U), _gram(explicit), atol=1e-9)


def test_classify_examples():
    rep = classify(build_bhattacharyya(bsc(0.1)))
    assert rep.divisible and rep.negative_type and rep.concave_form and rep.embeddable
    assert rep.witness_vectors is not None and rep.max_reconstruction_error <= 1e-9
    bad = classify(TRIANGLE)
    assert not any([bad.divisible, bad.negative_type, bad.concave_form, bad.embeddable])
    assert bad.witness_violation is not None
    pent = classify(named_distance("pentagon"))
    assert pent.negative_type is None and pent.concave_form is None and pent.embeddable is None
    assert isinstance(pent.divisible, bool)
    js = rep.to_json()
    assert js["negative_type"] is True


def test_classify_blocks():
    inf = math.inf
    D = DistanceMatrix([[0, 1, inf, inf], [1, 0, inf, inf], [inf, inf, 0, 2], [inf, inf, 2, 0]])
    reps = classify_blocks(D, [[0, 1], [2, 3]])
    assert all(r.embeddable for r in reps)


@given(st.integers(2, 6), st.integers(0, 10_000), st.floats(0.01, 100))
def test_scale_invariance(K, seed, c):
    d = np.random.default_rng(seed).uniform(0, 2, (K, K))
    d = d + d.T
    np.fill_diagonal(d, 0)
    D = DistanceMatrix(d)
    assert check_negative_type(D)[0] == check_negative_type(D.scaled(c))[0]


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_schur_product_psd(K, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(K, K))
    B = rng.normal(size=(K, K))
    A, B = A @ A.T, B @ B.T
    assert np.linalg.eigvalsh(A * B)[0] >= -1e-9 * np.abs(np.linalg.eigvalsh(A * B)).max()


@given(st.integers(2, 7), st.integers(1, 4), st.integers(0, 10_000))
def test_embed_round_trip(K, dim, seed):
    pts = np.random.default_rng(seed).normal(size=(K, dim))
    D = build_from_points(pts)
    U = euclidean_embed(D)
    assert np.allclose(build_from_points(U).entries, D.entries, atol=2e-8 * max(1, D.entries.max()))


@given(st.integers(3, 6), st.integers(0, 10_000), st.floats(0.05, 2.0))
def test_four_checks_agree_on_perturbed(K, seed, noise):
    rng = np.random.default_rng(seed)
    d = build_from_points(rng.normal(size=(K, 2))).entries
    E = rng.uniform(-noise, noise, (K, K))
    d = np.clip(d + E + E.T, 0, None)
    np.fill_diagonal(d, 0)
    assert classify(DistanceMatrix(d), trials=500).consistent
