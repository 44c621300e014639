"""Exact small-scale ground truth.

Everything reduces to maximum cliques in a "compatibility" graph on
sequences: two sequences are compatible when their additive distance is at
least a threshold, or equivalently when their product similarity is at most
``eps``.  Cliques are found by branch and bound with greedy colouring,
using Python integers as bitsets.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .distances import Code, DistanceMatrix, WeightedGraph, check_composition, code_min_distance
from .errors import BudgetError, InvalidCompositionError, InvalidInputError, WrongSymmetryError

DEFAULT_BUDGET = 20_000
SHIFT_TRIALS = 512
EXHAUSTIVE_SHIFTS = 4096
DIST_RTOL = 1e-9
SIM_RTOL = 1e-12


def _as_distance(G) -> DistanceMatrix:
    if isinstance(G, WeightedGraph):
        return G.to_distance()
    if not isinstance(G, DistanceMatrix):
        return DistanceMatrix(G)
    return G


def _multinomial(counts) -> int:
    out = math.factorial(int(sum(counts)))
    for c in counts:
        out //= math.factorial(int(c))
    return out


def type_class(counts) -> np.ndarray:
    """All sequences with ``counts[x]`` copies of symbol ``x``, in lexicographic order."""
    counts = [int(c) for c in counts]
    n = sum(counts)
    out = []
    seq = [0] * n

    def rec(pos):
        if pos == n:
            out.append(tuple(seq))
            return
        for x, c in enumerate(counts):
            if c:
                counts[x] -= 1
                seq[pos] = x
                rec(pos + 1)
                counts[x] += 1

    rec(0)
    return np.array(out, dtype=np.int64).reshape(len(out), n)


@dataclass(eq=False)
class CompatibilityGraph:
    """Sequences of length ``n`` over the alphabet of ``base``, optionally one type class.

    Entries of the Kronecker power are computed on demand from the
    per-letter similarity ``g = exp(-d)``.
    """

    base: DistanceMatrix
    n: int
    vertices: np.ndarray
    composition: np.ndarray | None = None

    def __len__(self) -> int:
        return self.vertices.shape[0]

    @property
    def K(self) -> int:
        return self.base.K

    def _index(self, u) -> np.ndarray:
        if isinstance(u, (int, np.integer)):
            return self.vertices[int(u)]
        u = np.asarray(u, dtype=np.int64)
        if u.shape != (self.n,):
            raise InvalidInputError(f"expected a sequence of length {self.n}")
        return u

    def similarity(self, u, v) -> float:
        g = self.base.similarity(1.0)
        a, b = self._index(u), self._index(v)
        return float(np.prod(g[a, b]))

    def distance(self, u, v) -> float:
        a, b = self._index(u), self._index(v)
        return float(np.sum(self.base.entries[a, b]))

    def distance_row(self, i: int) -> np.ndarray:
        d = self.base.entries
        x = self.vertices[i]
        out = np.zeros(len(self))
        for k in range(self.n):
            out += d[x[k], self.vertices[:, k]]
        return out

    def similarity_row(self, i: int) -> np.ndarray:
        g = self.base.similarity(1.0)
        x = self.vertices[i]
        out = np.ones(len(self))
        for k in range(self.n):
            out *= g[x[k], self.vertices[:, k]]
        return out

    def matrix(self) -> np.ndarray:
        """Dense similarity matrix of the Kronecker power (small graphs only)."""
        return np.array([self.similarity_row(i) for i in range(len(self))])

    def _allowed(self, i: int, eps: float | None, threshold: float | None) -> np.ndarray:
        if eps is not None:
            row = self.similarity_row(i)
            ok = row <= eps * (1 + SIM_RTOL)
        else:
            row = self.distance_row(i)
            ok = row >= threshold - DIST_RTOL * max(1.0, abs(threshold)) if math.isfinite(threshold) \
                else np.isinf(row)
        ok[i] = False
        return ok

    def adjacency(self, eps: float | None = None, threshold: float | None = None) -> list:
        """Bitset rows of the compatibility relation (similarity <= eps or distance >= threshold)."""
        if (eps is None) == (threshold is None):
            raise InvalidInputError("give exactly one of eps and threshold")
        return [int.from_bytes(np.packbits(self._allowed(i, eps, threshold), bitorder="little").tobytes(),
                               "little")
                for i in range(len(self))]


def kronecker_power(G, n: int, P=None, budget: int = DEFAULT_BUDGET) -> CompatibilityGraph:
    """The ``n``-fold power, restricted to the type class of ``P`` when given."""
    D = _as_distance(G)
    if int(n) != n or n < 1:
        raise InvalidInputError("n must be a positive integer")
    n = int(n)
    if P is None:
        size = D.K ** n
        if size > budget:
            raise BudgetError(f"{D.K}^{n} = {size} vertices exceeds the budget of {budget}")
        verts = np.array(list(itertools.product(range(D.K), repeat=n)), dtype=np.int64)
        return CompatibilityGraph(D, n, verts, None)
    counts = check_composition(P, n, D.K)
    size = _multinomial(counts)
    if size > budget:
        raise BudgetError(f"type class with {size} vertices exceeds the budget of {budget}")
    return CompatibilityGraph(D, n, type_class(counts), counts)


# --- maximum clique ---------------------------------------------------------

def _colour_sort(P: int, adj: list):
    order, colours = [], []
    k = 0
    U = P
    while U:
        k += 1
        Q = U
        while Q:
            low = Q & -Q
            v = low.bit_length() - 1
            Q &= ~low & ~adj[v]
            U &= ~low
            order.append(v)
            colours.append(k)
    return order, colours


def max_clique(adj: list, target: int | None = None) -> list:
    """Largest clique of the graph with bitset rows ``adj``.

    Stops early once a clique of size ``target`` is found.
    """
    N = len(adj)
    if N == 0:
        return []
    # smallest-last (degeneracy) order: the vertex removed last gets bit 0
    deg = [bin(a).count("1") for a in adj]
    alive = (1 << N) - 1
    removed = []
    if N > 2000:
        removed = sorted(range(N), key=lambda u: (deg[u], -u))
    for _ in range(N if N <= 2000 else 0):
        v = min((u for u in range(N) if alive >> u & 1), key=lambda u: (deg[u], -u))
        removed.append(v)
        alive &= ~(1 << v)
        row = adj[v] & alive
        while row:
            low = row & -row
            deg[low.bit_length() - 1] -= 1
            row ^= low
    perm = removed[::-1]
    pos = {v: i for i, v in enumerate(perm)}
    radj = [0] * N
    for v in range(N):
        row, bits = adj[v], 0
        while row:
            low = row & -row
            bits |= 1 << pos[low.bit_length() - 1]
            row ^= low
        radj[pos[v]] = bits
    best: list = [0]
    best_set: list = [[perm[0]]]
    goal = N if target is None else target

    def expand(R: list, P: int) -> bool:
        order, colours = _colour_sort(P, radj)
        for idx in range(len(order) - 1, -1, -1):
            if len(R) + colours[idx] <= best[0]:
                return False
            v = order[idx]
            newP = P & radj[v]
            R.append(v)
            if newP:
                if expand(R, newP):
                    return True
            elif len(R) > best[0]:
                best[0] = len(R)
                best_set[0] = [perm[u] for u in R]
                if best[0] >= goal:
                    return True
            R.pop()
            P &= ~(1 << v)
        return False

    best[0] = 1
    expand([], (1 << N) - 1)
    return sorted(best_set[0])


@dataclass(frozen=True)
class StableSetResult:
    size: int
    witness: np.ndarray
    eps: float

    def to_json(self) -> dict:
        return {"size": self.size, "witness": self.witness.tolist()}


def max_stable_set(graph: CompatibilityGraph, eps: float) -> StableSetResult:
    """Largest set of sequences with pairwise product similarity at most ``eps``."""
    eps = float(eps)
    if not 0 <= eps:
        raise InvalidInputError("eps must be nonnegative")
    if eps >= 1:
        members = list(range(len(graph)))
    else:
        members = max_clique(graph.adjacency(eps=eps))
    W = graph.vertices[members]
    for i, j in itertools.combinations(range(len(members)), 2):
        if graph.similarity(W[i], W[j]) > eps * (1 + SIM_RTOL):
            raise AssertionError("stable set witness failed re-validation")
    W.flags.writeable = False
    return StableSetResult(len(members), W, eps)


# --- optimal minimum distance -----------------------------------------------

@dataclass(frozen=True)
class MinDistanceResult:
    distance: float
    code: Code

    def to_json(self) -> dict:
        return {"distance": "inf" if math.isinf(self.distance) else self.distance,
                "witness": self.code.codewords.tolist()}


def _candidate_thresholds(graph: CompatibilityGraph) -> list:
    d = graph.base.entries
    vals = np.unique(d)
    n = graph.n
    if math.comb(len(vals) + n - 1, n) <= 200_000:
        sums = {float(sum(c)) for c in itertools.combinations_with_replacement(vals.tolist(), n)}
    else:
        sums = set()
        for i in range(len(graph)):
            sums.update(np.unique(graph.distance_row(i)).tolist())
    return sorted(s for s in sums if s > 0)


def optimal_min_distance(n: int, M: int, D, P=None, budget: int = DEFAULT_BUDGET) -> MinDistanceResult:
    """Largest minimum distance of an ``M``-word code of length ``n`` (composition ``P``)."""
    D = _as_distance(D)
    if int(M) != M or M < 2:
        raise InvalidInputError("need M >= 2 codewords")
    graph = kronecker_power(D, n, P, budget)
    if M > len(graph):
        raise InvalidInputError(f"M = {M} exceeds the {len(graph)} available sequences")

    def attempt(t):
        members = max_clique(graph.adjacency(threshold=t), target=M)
        return members if len(members) >= M else None

    cands = _candidate_thresholds(graph)
    lo, hi = -1, len(cands)
    found = None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        members = attempt(cands[mid])
        if members is not None:
            lo, found = mid, members
        else:
            hi = mid
    if found is None:
        # only zero distance is achievable (e.g. an all-zero distance)
        found = list(range(M))
    code = Code(graph.vertices[found[:M]])
    dist = code_min_distance(code, D)
    if lo >= 0 and dist < cands[lo] - DIST_RTOL * max(1.0, abs(cands[lo])):
        raise AssertionError("witness code failed re-validation")
    return MinDistanceResult(dist, code)


# --- constant-composition machinery ------------------------------------------

@dataclass(frozen=True)
class ShiftResult:
    code: Code
    shift: np.ndarray
    composition: np.ndarray


def _largest_class(C: np.ndarray, K: int):
    comps = Counter(tuple(np.bincount(row, minlength=K)) for row in C)
    comp, _ = max(comps.items(), key=lambda kv: (kv[1], tuple(-c for c in kv[0])))
    mask = np.array([tuple(np.bincount(row, minlength=K)) == comp for row in C])
    return mask, np.array(comp)


def shift_to_constant_composition(code, K: int, seed: int = 0, D: DistanceMatrix | None = None) -> ShiftResult:
    """Largest constant-composition subcode of a shifted copy ``{x_m + s mod K}``.

    Shifts are drawn at random, then enumerated when ``K^n`` is small.  For
    a circularly symmetric distance shifting preserves all pairwise
    distances, so the subcode's minimum distance is at least the original's.
    """
    if not isinstance(code, Code):
        code = Code(code)
    if D is not None and not D.circularly_symmetric:
        raise WrongSymmetryError("shifts preserve distances only for circularly symmetric distances")
    C = code.codewords % K
    n = code.n
    rng = np.random.default_rng(seed)
    shifts = [np.zeros(n, dtype=np.int64)]
    shifts += [rng.integers(0, K, n) for _ in range(SHIFT_TRIALS)]
    if K ** n <= EXHAUSTIVE_SHIFTS:
        shifts += [np.array(s) for s in itertools.product(range(K), repeat=n)]
    best = None
    for s in shifts:
        Cs = (C + s) % K
        mask, comp = _largest_class(Cs, K)
        size = int(mask.sum())
        if best is None or size > best[0]:
            best = (size, Cs[mask], s, comp)
    size, sub, s, comp = best
    return ShiftResult(Code(sub), np.asarray(s, dtype=np.int64), comp)


def _conditional_shell(x: np.ndarray, cond_counts: np.ndarray, A: int):
    """All ``a`` whose joint type with ``x`` has ``cond_counts[x, a]`` entries."""
    n = len(x)
    positions = [np.flatnonzero(x == s) for s in range(cond_counts.shape[0])]
    per_symbol = []
    for s, pos in enumerate(positions):
        labels = type_class(cond_counts[s]) if len(pos) else np.zeros((1, 0), dtype=np.int64)
        per_symbol.append((pos, labels))
    for combo in itertools.product(*[range(len(lab)) for _, lab in per_symbol]):
        a = np.empty(n, dtype=np.int64)
        for (pos, lab), k in zip(per_symbol, combo):
            a[pos] = lab[k]
        yield tuple(a)


@dataclass(frozen=True)
class CoveredSubcode:
    sequence: np.ndarray
    code: Code
    floor: float


def best_covered_subcode(code, Vhat, K: int | None = None, budget: int = 1_000_000) -> CoveredSubcode:
    """Sequence ``a`` covering the most codewords in the joint type ``P x Vhat``.

    The count is at least ``M |T_Vhat(x)| / |T_F|`` by pigeonhole.
    """
    if not isinstance(code, Code):
        code = Code(code)
    V = np.asarray(Vhat, dtype=float)
    K = V.shape[0] if K is None else K
    if V.shape[0] != K or np.any(V < 0) or np.any(np.abs(V.sum(axis=1) - 1) > 1e-9):
        raise InvalidInputError("Vhat must be a stochastic matrix with one row per input symbol")
    comps = code.compositions(K)
    if np.any(comps != comps[0]):
        raise InvalidCompositionError("code is not constant composition")
    n = code.n
    counts = comps[0]
    cond = counts[:, None] * V
    cond_int = np.rint(cond)
    if np.any(np.abs(cond - cond_int) > 1e-9):
        raise InvalidCompositionError("n P(x) Vhat_x(a) must be integral")
    cond_int = cond_int.astype(np.int64)
    A = V.shape[1]
    shell = 1
    for s in range(K):
        shell *= _multinomial(cond_int[s])
    if shell * code.M > budget:
        raise BudgetError(f"{shell * code.M} shell sequences exceed the budget of {budget}")
    F_counts = cond_int.sum(axis=0)
    floor = code.M * shell / _multinomial(F_counts)
    tally = Counter()
    for x in code.codewords:
        tally.update(_conditional_shell(x, cond_int, A))
    a, _ = max(tally.items(), key=lambda kv: (kv[1], tuple(-v for v in kv[0])))
    a = np.array(a, dtype=np.int64)
    keep = []
    for m, x in enumerate(code.codewords):
        joint = np.zeros((K, A), dtype=np.int64)
        np.add.at(joint, (x, a), 1)
        if np.array_equal(joint, cond_int):
            keep.append(m)
    sub = Code(code.codewords[keep])
    if sub.M < floor - 1e-9:
        raise AssertionError("covered subcode is below the pigeonhole floor")
    return CoveredSubcode(a, sub, floor)


__all__ = ["CompatibilityGraph", "kronecker_power", "max_clique", "max_stable_set",
           "StableSetResult", "optimal_min_distance", "MinDistanceResult",
           "shift_to_constant_composition", "ShiftResult", "best_covered_subcode",
           "CoveredSubcode", "type_class"]
