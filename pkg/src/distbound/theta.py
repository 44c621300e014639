"""Generalised Lovász theta functions of a distance.

A representation of degree ``rho`` is a family of unit vectors ``u_x`` with
``|<u_x, u_x'>| <= exp(-d(x, x')/rho)`` plus a unit handle ``f``.  Everything
is optimised over the ``(K+1) x (K+1)`` Gram matrix ``G`` of ``(f, u_1..u_K)``:
unit diagonal, positive semidefinite, box constraints on the symbol block and
``G[0, x] > 0`` (flipping a ``u_x`` never changes ``|.|`` constraints, so the
sign normalisation loses nothing).

* ``theta(rho)``     minimises ``max_x -ln G[0,x]^2``  (equivalently maximises
  ``min_x G[0,x]``, a linear SDP);
* ``theta(rho, P)``  minimises ``sum_x P(x) (-ln G[0,x]^2)`` (convex);
* ``theta(rho, V|F)`` is ``sum_a F(a) theta(rho, V_a)``.

Both problems are solved by a primal log-barrier method with Newton
centring.  Every iterate is strictly feasible, so the returned value is the
objective of a certified feasible point and therefore an upper bound on the
true minimum; the barrier gap bounds the excess.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .distances import DistanceMatrix, WeightedGraph, as_distribution, as_stochastic
from .errors import InvalidInputError

# box bounds below this are treated as exact orthogonality (a tighter,
# still feasible constraint set, so values stay valid upper bounds)
ZERO_BOUND = 1e-12
FEAS_TOL = 1e-8
INF_VALUE = 1e6

CONVERGED = "converged"
MAX_ITER = "max-iterations"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-10
    max_iter: int = 50_000
    starts: int = 1
    seed: int = 0
    growth: float = 10.0


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True, eq=False)
class Representation:
    """Gram matrix of ``(f, u_1, ..., u_K)``; index 0 is the handle."""

    gram: np.ndarray
    rho: float

    @property
    def K(self) -> int:
        return self.gram.shape[0] - 1

    @property
    def handle_products(self) -> np.ndarray:
        return self.gram[0, 1:]

    def vectors(self) -> np.ndarray:
        """Rows ``f, u_1, ..., u_K`` of an explicit factorisation."""
        w, v = np.linalg.eigh(self.gram)
        w = np.clip(w, 0.0, None)
        return v * np.sqrt(w)

    def max_violation(self, D: DistanceMatrix) -> float:
        """Largest violation of any defining constraint (0 when feasible)."""
        G = self.gram
        K = self.K
        viol = [float(np.max(np.abs(np.diag(G) - 1.0))),
                float(max(0.0, -np.linalg.eigvalsh(G)[0])),
                float(max(0.0, -np.min(G[0, 1:])))]
        c = D.similarity(self.rho)
        block = np.abs(G[1:, 1:])
        off = ~np.eye(K, dtype=bool)
        if off.any():
            viol.append(float(np.max(np.where(off, block - c, 0.0), initial=0.0)))
        return max(viol)


@dataclass(frozen=True, eq=False)
class ThetaResult:
    value: float
    representation: Representation
    per_symbol_cost: np.ndarray
    solver_status: str
    iterations: int = 0
    weights: np.ndarray | None = None
    history: tuple = field(default_factory=tuple)

    def to_json(self) -> dict:
        rho = self.representation.rho
        return {
            "value": _num(self.value),
            "rho": "inf" if math.isinf(rho) else rho,
            "weights": None if self.weights is None else self.weights.tolist(),
            "per_symbol_cost": [_num(v) for v in self.per_symbol_cost],
            "solver_status": self.solver_status,
            "iterations": self.iterations,
            "gram": self.representation.gram.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ConditionalThetaResult:
    """``theta(rho, V|F)`` together with the per-row sub-results."""

    value: float
    F: np.ndarray
    V: np.ndarray
    parts: tuple

    @property
    def solver_status(self) -> str:
        statuses = {p.solver_status for p in self.parts}
        for s in (INFEASIBLE, MAX_ITER):
            if s in statuses:
                return s
        return CONVERGED


def _num(v: float):
    return "inf" if math.isinf(v) else float(v)


class _BarrierProblem:
    """Gram-matrix problem in the free off-diagonal entries.

    Variables are ``G[0, x]`` for x = 1..K, then the free symbol pairs, and in
    max mode one extra epigraph variable ``s <= G[0, x]``.
    """

    def __init__(self, c: np.ndarray, weights: np.ndarray | None):
        K = c.shape[0]
        self.K = K
        self.n = K + 1
        self.maxmode = weights is None
        self.w = None if weights is None else np.asarray(weights, dtype=float)
        pairs = [(0, x) for x in range(1, K + 1)]
        bounds = []
        for i in range(K):
            for j in range(i + 1, K):
                if c[i, j] > ZERO_BOUND:
                    pairs.append((i + 1, j + 1))
                    bounds.append(c[i, j])
        P = np.array(pairs, dtype=np.int64)
        self.I, self.J = P[:, 0], P[:, 1]
        self.m = len(pairs)
        box = [K + k for k, b in enumerate(bounds) if b < 1.0]
        self.box = np.array(box, dtype=np.int64)
        self.cb = np.array([bounds[k - K] for k in box], dtype=float)
        self.bounds = np.array(bounds, dtype=float)
        self.nv = self.m + (1 if self.maxmode else 0)
        self.nu = self.n + 2 * len(self.box) + K
        self.h = np.arange(K)
        self._hii = (np.ix_(self.J, self.I), np.ix_(self.I, self.J),
                     np.ix_(self.J, self.J), np.ix_(self.I, self.I))

    def gram(self, y: np.ndarray) -> np.ndarray:
        G = np.eye(self.n)
        G[self.I, self.J] = y[:self.m]
        G[self.J, self.I] = y[:self.m]
        return G

    def start(self, rng: np.random.Generator | None) -> np.ndarray:
        K = self.K
        eta = 0.5 / math.sqrt(K)
        y = np.zeros(self.nv)
        if rng is None:
            y[:K] = eta
        else:
            y[:K] = eta * rng.uniform(0.3, 1.0, K)
            if self.m > K:
                lim = np.minimum(self.bounds, 0.5 / K)
                y[K:self.m] = lim * rng.uniform(-0.9, 0.9, self.m - K)
        if self.maxmode:
            y[self.m] = 0.5 * np.min(y[:K])
        return y

    def feasible(self, y: np.ndarray) -> bool:
        if len(self.box) and np.any(np.abs(y[self.box]) >= self.cb):
            return False
        hp = y[:self.K]
        if self.maxmode:
            if np.any(hp - y[self.m] <= 0):
                return False
        elif np.any(hp <= 0):
            return False
        try:
            np.linalg.cholesky(self.gram(y))
        except np.linalg.LinAlgError:
            return False
        return True

    def f0(self, y: np.ndarray) -> float:
        if self.maxmode:
            return -float(y[self.m])
        return -2.0 * float(np.sum(self.w * np.log(y[:self.K])))

    def phi(self, y: np.ndarray) -> float:
        _, logdet = np.linalg.slogdet(self.gram(y))
        v = -logdet
        if len(self.box):
            b = y[self.box]
            v -= float(np.sum(np.log(self.cb - b) + np.log(self.cb + b)))
        if self.maxmode:
            v -= float(np.sum(np.log(y[:self.K] - y[self.m])))
        else:
            v -= float(np.sum(np.log(y[:self.K])))
        return v

    def grad_hess(self, y: np.ndarray, t: float):
        S = np.linalg.inv(self.gram(y))
        m, h = self.m, self.h
        g = np.zeros(self.nv)
        H = np.zeros((self.nv, self.nv))
        g[:m] = -2.0 * S[self.I, self.J]
        a, b, cc, d = self._hii
        H[:m, :m] = 2.0 * (S[a] * S[b] + S[cc] * S[d])
        if len(self.box):
            bx = y[self.box]
            lo, hi = self.cb + bx, self.cb - bx
            g[self.box] += 1.0 / hi - 1.0 / lo
            H[self.box, self.box] += 1.0 / hi ** 2 + 1.0 / lo ** 2
        if self.maxmode:
            s = y[:self.K] - y[m]
            inv, inv2 = 1.0 / s, 1.0 / s ** 2
            g[h] -= inv
            g[m] += np.sum(inv) - t
            H[h, h] += inv2
            H[m, m] += np.sum(inv2)
            H[h, m] -= inv2
            H[m, h] -= inv2
        else:
            yy = y[:self.K]
            g[h] += -1.0 / yy - t * 2.0 * self.w / yy
            H[h, h] += 1.0 / yy ** 2 + t * 2.0 * self.w / yy ** 2
        return g, H


def _newton_step(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(H)
        z = np.linalg.solve(L, -g)
        return np.linalg.solve(L.T, z)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(H, -g, rcond=None)[0]


def _barrier_solve(prob: _BarrierProblem, y: np.ndarray, opts: SolverOptions):
    t = 1.0
    iters = 0
    history = []
    status = CONVERGED
    while True:
        for k in range(100):
            if iters >= opts.max_iter:
                status = MAX_ITER
                break
            g, H = prob.grad_hess(y, t)
            dx = _newton_step(H, g)
            lam2 = float(-g @ dx)
            iters += 1
            # past t ~ 1e10 roundoff keeps the decrement from vanishing
            if lam2 <= 2e-10 or (k >= 20 and lam2 <= 1e-6):
                break
            F = t * prob.f0(y) + prob.phi(y)
            slope = float(g @ dx)
            step = 1.0
            while step > 1e-14:
                yn = y + step * dx
                if prob.feasible(yn):
                    Fn = t * prob.f0(yn) + prob.phi(yn)
                    if Fn <= F + 0.25 * step * slope:
                        break
                step *= 0.5
            else:
                break
            y = yn
        history.append(prob.f0(y))
        if status != CONVERGED or prob.nu / t < opts.gap_tol:
            break
        t *= opts.growth
    return y, status, iters, tuple(history)


def _similarity(D: DistanceMatrix, rho: float) -> np.ndarray:
    return D.similarity(rho)


def _as_distance(D) -> DistanceMatrix:
    if isinstance(D, WeightedGraph):
        return D.to_distance()
    if not isinstance(D, DistanceMatrix):
        return DistanceMatrix(D)
    return D


def _check_rho(rho) -> float:
    rho = float(rho)
    if not rho > 0:
        raise InvalidInputError(f"rho must be positive, got {rho}")
    return rho


@functools.lru_cache(maxsize=4096)
def _solve_cached(D: DistanceMatrix, rho: float, weights: tuple | None,
                  opts: SolverOptions) -> ThetaResult:
    c = _similarity(D, rho)
    w = None if weights is None else np.array(weights)
    prob = _BarrierProblem(c, w)
    best = None
    rng = np.random.default_rng(opts.seed)
    for k in range(max(1, opts.starts)):
        y0 = prob.start(None if k == 0 else rng)
        if not prob.feasible(y0):
            y0 = prob.start(None)
        y, status, iters, hist = _barrier_solve(prob, y0, opts)
        G = prob.gram(y)
        hp = G[0, 1:]
        with np.errstate(divide="ignore"):
            cost = np.where(hp > 0, -2.0 * np.log(np.where(hp > 0, hp, 1.0)), np.inf)
        if w is None:
            value = float(np.max(cost))
        else:
            value = float(np.sum(np.where(w > 0, w * cost, 0.0)))
        if value > INF_VALUE:
            value = math.inf
        value = max(value, 0.0)
        rep = Representation(G, rho)
        if rep.max_violation(D) > FEAS_TOL:
            status = INFEASIBLE
        G.flags.writeable = False
        cost.flags.writeable = False
        res = ThetaResult(value, rep, cost, status, iters,
                          None if w is None else w, hist)
        if best is None or res.value < best.value:
            best = res
    return best


def solve_theta(D, rho: float, opts: SolverOptions = DEFAULT_OPTIONS) -> ThetaResult:
    """``theta(rho)``: best worst-case ``-ln <u_x, f>^2`` over representations."""
    D = _as_distance(D)
    return _solve_cached(D, _check_rho(rho), None, opts)


def solve_theta_P(D, rho: float, P, opts: SolverOptions = DEFAULT_OPTIONS) -> ThetaResult:
    """``theta(rho, P)``: the ``P``-weighted average cost, minimised."""
    D = _as_distance(D)
    P = as_distribution(P, D.K, "P")
    return _solve_cached(D, _check_rho(rho), tuple(float(p) for p in P), opts)


def solve_theta_VF(D, rho: float, V, F, opts: SolverOptions = DEFAULT_OPTIONS) -> ConditionalThetaResult:
    """``theta(rho, V|F) = sum_a F(a) theta(rho, V_a)``; rows are solved independently."""
    D = _as_distance(D)
    V = as_stochastic(V, D.K, "V")
    F = as_distribution(F, V.shape[0], "F")
    parts = tuple(solve_theta_P(D, rho, V[a], opts) for a in range(V.shape[0]))
    value = float(sum(F[a] * parts[a].value for a in range(len(parts)) if F[a] > 0))
    return ConditionalThetaResult(value, F, V, parts)


def binary_theta_analytic(rho: float, Q) -> float:
    """Closed form of ``theta(rho, Q)`` for two symbols at distance 1.

    ``u_0, u_1`` sit at angles ``+-alpha`` with ``cos 2 alpha = exp(-1/rho)``
    and the handle at angle ``beta`` with
    ``sin 2 beta = (Q(0) - Q(1)) sin 2 alpha``.
    """
    Q = as_distribution(Q, 2, "Q")
    rho = _check_rho(rho)
    if math.isinf(rho):
        return 0.0
    alpha = 0.5 * math.acos(math.exp(-1.0 / rho))
    beta = 0.5 * math.asin((Q[0] - Q[1]) * math.sin(2 * alpha))
    total = 0.0
    for q, ang in ((Q[0], alpha - beta), (Q[1], alpha + beta)):
        if q > 0:
            total -= 2.0 * q * math.log(math.cos(ang))
    return total


def lovasz_classical(G, opts: SolverOptions = DEFAULT_OPTIONS) -> ThetaResult:
    """Logarithmic Lovász theta: orthogonality exactly where ``g = 0``."""
    D = _as_distance(G)
    return _solve_cached(D, math.inf, None, opts)


def spherical_bound(M: int, c: float) -> float:
    """Lower bound ``(Mc - 1)/(M - 1)`` on the largest pairwise ``|<v_i, v_j>|``."""
    if M < 2:
        raise InvalidInputError("need at least two vectors")
    if not 0 < c <= 1:
        raise InvalidInputError("c must lie in (0, 1]")
    return (M * c - 1.0) / (M - 1.0)
