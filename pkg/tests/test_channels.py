import math

import numpy as np
import pytest

from distbound.bounds import best_curve
from distbound.channels import (
    additive_chernoff_matrix, blahut_counterexample, chernoff_distance, composition_log_ratio,
    pairwise_reversible, reliability_upper, sequence_chernoff, ternary_unilateral,
)
from distbound.distances import Channel, DistanceMatrix, build_bhattacharyya, bsc
from distbound.errors import InvalidChannelError, InvalidInputError

BSC_DB = -math.log(2 * math.sqrt(0.09))


def test_chernoff_examples():
    r = chernoff_distance([0.2, 0.8], [0.2, 0.8])
    assert r.value == 0 and 0 < r.argmin_s < 1
    b = chernoff_distance([0.9, 0.1], [0.1, 0.9])
    assert b.value == pytest.approx(BSC_DB, abs=1e-12)
    assert b.argmin_s == pytest.approx(0.5, abs=1e-6) and b.pairwise_reversible_pair
    T = ternary_unilateral(0.01).W
    t = chernoff_distance(T[1], T[2])
    assert t.value == pytest.approx(-math.log(0.01), abs=1e-9)
    assert t.boundary and t.argmin_s == pytest.approx(0.0, abs=1e-9)
    assert math.isinf(chernoff_distance([1, 0], [0, 1]).value)
    with pytest.raises(InvalidInputError):
        chernoff_distance([0.5, 0.6], [0.5, 0.5])


def test_chernoff_symmetric(rng):
    for _ in range(100):
        Y = int(rng.integers(2, 6))
        p, q = rng.dirichlet(np.ones(Y)), rng.dirichlet(np.ones(Y))
        a, b = chernoff_distance(p, q), chernoff_distance(q, p)
        assert a.value == pytest.approx(b.value, abs=1e-12)
        assert a.argmin_s == pytest.approx(1 - b.argmin_s, abs=1e-6)


def test_sandwich(rng):
    for _ in range(100):
        X, Y = int(rng.integers(2, 5)), int(rng.integers(2, 6))
        W = rng.dirichlet(np.ones(Y) * 0.7, size=X)
        dB = build_bhattacharyya(Channel(W)).entries
        dC = additive_chernoff_matrix(W).entries
        assert np.all(dB <= dC + 1e-9)
        assert np.all(dC <= 2 * dB + 1e-9)


def test_value_zero_iff_equal(rng):
    p = rng.dirichlet(np.ones(4))
    q = p.copy()
    q[0] += 1e-3
    q[1] -= 1e-3
    assert chernoff_distance(p, q).value > 0


def test_additive_matrix_examples():
    assert np.allclose(additive_chernoff_matrix(bsc(0.1)).entries, build_bhattacharyya(bsc(0.1)).entries,
                       atol=1e-12)
    eps = 0.01
    T = additive_chernoff_matrix(ternary_unilateral(eps)).entries
    off = T[~np.eye(3, dtype=bool)]
    assert np.allclose(off, -math.log(eps), atol=1e-9)
    I = additive_chernoff_matrix(np.eye(3)).entries
    assert np.all(np.isinf(I[~np.eye(3, dtype=bool)]))


def test_reversibility_examples():
    assert pairwise_reversible(bsc(0.1))
    assert not pairwise_reversible(ternary_unilateral(0.01))
    assert pairwise_reversible(Channel([[0.3, 0.7], [0.3, 0.7], [0.7, 0.3]]))
    assert pairwise_reversible(Channel([[0.2, 0.5, 0.3]] * 3))


def test_ternary_unilateral():
    W = ternary_unilateral(0.2).W
    assert np.allclose(W.sum(axis=1), 1)
    assert W[0, 0] == 0.8 and W[0, 1] == 0.2 and W[2, 0] == 0.2
    with pytest.raises(InvalidChannelError):
        ternary_unilateral(1.5)


def test_counterexample():
    assert blahut_counterexample(0.1) == pytest.approx(3 * math.log(9), abs=1e-12)
    assert blahut_counterexample(0.1) == pytest.approx(6.5917, abs=1e-4)
    assert abs(blahut_counterexample(0.5 - 1e-9)) < 1e-6
    # swapping the codewords flips the sign
    T = ternary_unilateral(0.1)
    assert composition_log_ratio(T, (0, 1, 2), (1, 2, 0)) == pytest.approx(-3 * math.log(9), abs=1e-12)


def test_chernoff_not_additive():
    eps = 0.1
    T = ternary_unilateral(eps)
    per_letter = additive_chernoff_matrix(T)
    x, y = (0, 1), (1, 0)
    joint = sequence_chernoff(T, x, y)
    summed = sum(per_letter[a, b] for a, b in zip(x, y))
    assert joint == pytest.approx(-math.log(eps * (1 - eps)), abs=1e-9)
    assert summed == pytest.approx(-2 * math.log(eps), abs=1e-9)
    assert abs(joint - summed) > 1.0
    # the same-composition pair of the counterexample happens to be additive
    a, b = (1, 2, 0), (0, 1, 2)
    assert sequence_chernoff(T, a, b) == pytest.approx(sum(per_letter[u, v] for u, v in zip(a, b)), abs=1e-9)


def test_reliability_routing():
    grid = [0.3]
    r = reliability_upper(bsc(0.1), grid)
    assert r.distance_kind == "bhattacharyya" and r.pairwise_reversible
    T = ternary_unilateral(0.05)
    rt = reliability_upper(T, grid)
    assert rt.distance_kind == "chernoff-additive"
    doubled = best_curve(DistanceMatrix(2 * build_bhattacharyya(T).entries), grid)
    for a, b in zip(rt.curve.points, doubled.points):
        assert a.delta_bound <= b.delta_bound + 1e-9


def test_reliability_identical_inputs():
    W = Channel([[0.7, 0.3], [0.7, 0.3]])
    r = reliability_upper(W, [0.1, 0.5])
    assert all(p.delta_bound <= 1e-9 for p in r.curve.points)
