import itertools
import math

import numpy as np
import pytest

from distbound.bounds import eps_capacity_bound, plotkin_exponential
from distbound.distances import (
    Code, DistanceMatrix, build_hamming, build_lee, code_min_distance, named_distance,
)
from distbound.errors import BudgetError, InvalidCompositionError, InvalidInputError, WrongSymmetryError
from distbound.oracle import (
    best_covered_subcode, kronecker_power, max_clique, max_stable_set, optimal_min_distance,
    shift_to_constant_composition, type_class,
)
from distbound.theta import solve_theta, solve_theta_P


def test_type_class():
    T = type_class([2, 1])
    assert T.tolist() == [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    assert len(type_class([2, 2, 1])) == math.factorial(5) // 4


def test_kronecker_examples():
    G = kronecker_power(build_hamming(2), 2)
    assert len(G) == 4
    assert G.similarity((0, 1), (1, 0)) == pytest.approx(math.exp(-2))
    one = kronecker_power(build_lee(4), 1)
    assert np.allclose(one.matrix(), build_lee(4).similarity(1.0))
    three = kronecker_power(build_lee(3), 3).matrix()
    assert np.all(np.diag(three) == 1)
    assert np.allclose(three, three.T)
    cc = kronecker_power(build_hamming(2), 4, P=[0.5, 0.5])
    assert len(cc) == 6
    with pytest.raises(BudgetError):
        kronecker_power(build_hamming(2), 20)
    with pytest.raises(InvalidCompositionError):
        kronecker_power(build_hamming(2), 3, P=[0.5, 0.5])


def test_max_clique_brute_force(rng):
    for _ in range(30):
        N = int(rng.integers(1, 11))
        A = rng.uniform(size=(N, N)) < 0.5
        A = np.triu(A, 1)
        A = A | A.T
        adj = [sum(1 << j for j in range(N) if A[i, j]) for i in range(N)]
        best = 0
        for r in range(N, 0, -1):
            if any(all(A[a, b] for a, b in itertools.combinations(S, 2))
                   for S in itertools.combinations(range(N), r)):
                best = r
                break
        clique = max_clique(adj)
        assert len(clique) == best
        assert all(A[a, b] for a, b in itertools.combinations(clique, 2))


def test_stable_set_examples():
    C5 = named_distance("pentagon")
    r1 = max_stable_set(kronecker_power(C5, 1), 0.0)
    assert r1.size == 2
    r2 = max_stable_set(kronecker_power(C5, 2), 0.0)
    assert r2.size == 5
    G = kronecker_power(C5, 2)
    for a, b in itertools.combinations(r2.witness, 2):
        assert G.similarity(a, b) == 0
    full = kronecker_power(DistanceMatrix(np.zeros((3, 3))), 2)
    assert max_stable_set(full, 0.5).size == 1
    assert r2.to_json()["size"] == 5


def test_min_distance_examples():
    H = build_hamming(2)
    assert optimal_min_distance(4, 2, H).distance == 4
    r = optimal_min_distance(5, 4, H)
    assert r.distance == 3
    assert code_min_distance(r.code, H) == 3 and r.code.M == 4
    with pytest.raises(InvalidInputError):
        optimal_min_distance(2, 5, H)
    with pytest.raises(InvalidCompositionError):
        optimal_min_distance(3, 2, H, P=[0.5, 0.5])


def test_min_distance_known_values():
    # classical binary A(n, d) table values
    H = build_hamming(2)
    assert optimal_min_distance(6, 8, H).distance == 3
    assert optimal_min_distance(6, 4, H).distance == 4
    assert optimal_min_distance(7, 16, H).distance == 3
    assert optimal_min_distance(3, 2, build_lee(5)).distance == 6


def test_min_distance_nonincreasing_in_M():
    for D, n in ((build_hamming(2), 5), (build_lee(4), 3), (named_distance("pentagon"), 2)):
        vals = [optimal_min_distance(n, M, D).distance for M in range(2, 9)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_min_distance_constant_composition():
    H = build_hamming(2)
    r = optimal_min_distance(4, 3, H, P=[0.5, 0.5])
    assert r.code.is_constant_composition(2)
    assert r.distance == 2
    assert r.distance <= optimal_min_distance(4, 3, H).distance


def test_oracle_respects_plotkin():
    for D in (build_hamming(2), build_lee(3), build_lee(4)):
        for rho in (0.5, 1.0, 2.0, 4.0):
            th = solve_theta(D, rho).value
            for n in (1, 2, 3):
                for M in range(2, min(D.K ** n, 9) + 1):
                    bound = plotkin_exponential(M, n, th, rho)
                    assert optimal_min_distance(n, M, D).distance <= bound + 1e-9


def test_oracle_respects_composition_plotkin():
    D = build_lee(3)
    P = [1 / 3, 1 / 3, 1 / 3]
    for rho in (0.5, 2.0):
        th = solve_theta_P(D, rho, P).value
        for M in range(2, 7):
            assert optimal_min_distance(3, M, D, P=P).distance <= plotkin_exponential(M, 3, th, rho) + 1e-9


def test_stable_sets_respect_eps_bound():
    for D in (named_distance("pentagon"), build_lee(3), named_distance("square")):
        for eps in (0.0, math.exp(-1), math.exp(-2)):
            for rho in (0.5, 1.0, 4.0, math.inf):
                for n in (1, 2):
                    b = eps_capacity_bound(D, eps, rho, n=n)
                    size = max_stable_set(kronecker_power(D, n), eps ** n).size
                    assert size <= b.alpha_bound * (1 + 1e-6)
    pent3 = max_stable_set(kronecker_power(named_distance("pentagon"), 3), 0.0).size
    assert pent3 <= eps_capacity_bound(named_distance("pentagon"), 0.0, math.inf, n=3).alpha_bound + 1e-6


def test_shift_examples(rng):
    cc = Code(type_class([2, 1, 1]))
    r = shift_to_constant_composition(cc, 3)
    assert r.code.M >= cc.M / (4 + 1) ** 3
    assert r.code.is_constant_composition(3)
    single = shift_to_constant_composition([[0], [1], [3]], 4)
    assert single.code.M >= 1 and single.code.is_constant_composition(4)
    with pytest.raises(WrongSymmetryError):
        shift_to_constant_composition(cc, 3, D=DistanceMatrix([[0, 1, 2], [1, 0, 1], [2, 1, 0]]))


def test_shift_preserves_distance_random_z4(rng):
    D = build_lee(4)
    for trial in range(100):
        n = int(rng.integers(2, 6))
        M = int(rng.integers(2, 12))
        C = rng.integers(0, 4, (M, n))
        C = np.unique(C, axis=0)
        if len(C) < 2:
            continue
        r = shift_to_constant_composition(C, 4, seed=trial, D=D)
        assert r.code.is_constant_composition(4)
        n_types = math.comb(n + 3, 3)
        assert r.code.M >= len(C) / n_types
        shifted = (C + r.shift) % 4
        assert code_min_distance(shifted, D) == code_min_distance(C, D)
        if r.code.M >= 2:
            assert code_min_distance(r.code, D) >= code_min_distance(C, D)


def test_cover_examples():
    cc = Code(type_class([2, 2]))
    const = np.array([[1.0], [1.0]])
    whole = best_covered_subcode(cc, const)
    assert whole.code.M == cc.M and whole.sequence.tolist() == [0, 0, 0, 0]
    one = best_covered_subcode(Code([[0, 1, 1, 0]]), [[0.5, 0.5], [0.5, 0.5]])
    assert one.code.M == 1
    with pytest.raises(InvalidCompositionError):
        best_covered_subcode(cc, [[0.25, 0.75], [0.5, 0.5]])


def test_cover_meets_pigeonhole_floor():
    cc = Code(type_class([3, 3]))
    lam = 1 / 3
    V = [[1 - lam, lam], [lam, 1 - lam]]
    r = best_covered_subcode(cc, V)
    assert r.code.M >= r.floor
    # exhaustive: nothing covers more than the returned sequence
    for a in itertools.product(range(2), repeat=6):
        a = np.array(a)
        count = 0
        for x in cc.codewords:
            joint = np.zeros((2, 2), dtype=int)
            np.add.at(joint, (x, a), 1)
            count += np.array_equal(joint, [[2, 1], [1, 2]])
        assert count <= r.code.M


def test_cover_budget():
    with pytest.raises(BudgetError):
        best_covered_subcode(Code(type_class([4, 4])), [[0.5, 0.5], [0.5, 0.5]], budget=10)
