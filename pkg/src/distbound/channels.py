"""Distances between the output distributions of a discrete memoryless channel.

The Chernoff distance ``-ln min_s sum_y Q1^(1-s) Q2^s`` controls the error
exponent of a binary test but is not additive over letters.  The
Bhattacharyya distance (``s = 1/2``) and the per-letter Chernoff distance
are additive upper-bound surrogates that feed the minimum-distance bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .bounds import BoundCurve, best_curve
from .distances import Channel, DistanceMatrix, as_distribution, build_bhattacharyya
from .errors import InvalidChannelError, InvalidInputError
from .theta import DEFAULT_OPTIONS, SolverOptions

S_TOL = 1e-12
GRID_POINTS = 64
REVERSIBLE_S_TOL = 1e-6
REVERSIBLE_D_TOL = 1e-9

__all__ = ["Channel", "ChernoffResult", "chernoff_distance", "additive_chernoff_matrix",
           "pairwise_reversible", "ternary_unilateral", "blahut_counterexample",
           "composition_log_ratio", "sequence_chernoff", "reliability_upper", "ReliabilityCurve"]


@dataclass(frozen=True)
class ChernoffResult:
    value: float
    argmin_s: float
    boundary: bool
    pairwise_reversible_pair: bool

    def to_json(self) -> dict:
        return {"value": "inf" if math.isinf(self.value) else self.value,
                "argmin_s": self.argmin_s, "boundary": self.boundary,
                "pairwise_reversible_pair": self.pairwise_reversible_pair}


def _golden(f, lo: float, hi: float, tol: float = S_TOL) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def chernoff_distance(Q1, Q2) -> ChernoffResult:
    """Chernoff distance between two distributions on the same outputs.

    Only outputs in the common support contribute.  The minimum over the
    closed interval ``[0, 1]`` equals the infimum over the open one.
    """
    Q1 = as_distribution(Q1, name="Q1")
    Q2 = as_distribution(Q2, Q1.shape[0], "Q2")
    sup = (Q1 > 0) & (Q2 > 0)
    if not sup.any():
        return ChernoffResult(math.inf, 0.5, False, True)
    a = np.log(Q1[sup])
    b = np.log(Q2[sup]) - a
    if np.all(b == 0) and sup.sum() == np.count_nonzero(Q1) == np.count_nonzero(Q2):
        return ChernoffResult(0.0, 0.5, False, True)

    def lnf(s):
        return float(logsumexp(a + s * b))

    grid = np.linspace(0.0, 1.0, GRID_POINTS)
    vals = np.array([lnf(s) for s in grid])
    # ln f is convex; a midpoint check on the scan guards against roundoff surprises
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    if np.any(second < -1e-9 * max(1.0, float(np.max(np.abs(vals))))):
        raise InvalidInputError("log-moment function failed the convexity check")
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    s = _golden(lnf, lo, hi)
    best = lnf(s)
    for edge in (0.0, 1.0):
        v = lnf(edge)
        if v <= best:
            s, best = edge, v
    boundary = s <= 1e-9 or s >= 1 - 1e-9
    value = max(0.0, -best)
    return ChernoffResult(value, float(s), bool(boundary),
                          bool(abs(s - 0.5) <= REVERSIBLE_S_TOL))


def _as_channel(W) -> Channel:
    return W if isinstance(W, Channel) else Channel(np.asarray(W, dtype=float))


def additive_chernoff_matrix(W) -> DistanceMatrix:
    """Per-letter Chernoff distances ``D_C(W_x, W_x')``."""
    W = _as_channel(W)
    X = W.X
    d = np.zeros((X, X))
    for i in range(X):
        for j in range(i + 1, X):
            d[i, j] = d[j, i] = chernoff_distance(W.W[i], W.W[j]).value
    return DistanceMatrix(d, name="chernoff-additive")


def pairwise_reversible(W) -> bool:
    """True when every pair of distinct rows has its Chernoff optimum at ``s = 1/2``."""
    W = _as_channel(W)
    dB = build_bhattacharyya(W).entries
    for i in range(W.X):
        for j in range(i + 1, W.X):
            if np.array_equal(W.W[i], W.W[j]):
                continue
            res = chernoff_distance(W.W[i], W.W[j])
            if res.pairwise_reversible_pair:
                continue
            if math.isinf(res.value) and math.isinf(dB[i, j]):
                continue
            if abs(res.value - dB[i, j]) > REVERSIBLE_D_TOL * max(1.0, dB[i, j]):
                return False
    return True


def ternary_unilateral(eps: float) -> Channel:
    """Input ``x`` is received as ``x`` with probability ``1 - eps``, else as ``x + 1 mod 3``."""
    if not 0 < eps < 1:
        raise InvalidChannelError("eps must lie in (0, 1)")
    W = np.zeros((3, 3))
    for x in range(3):
        W[x, x] = 1 - eps
        W[x, (x + 1) % 3] = eps
    return Channel(W)


def _sequence_rows(W: Channel, x) -> np.ndarray:
    """Output distribution of the input sequence ``x`` over ``Y^n`` (lexicographic)."""
    row = np.ones(1)
    for s in x:
        row = np.kron(row, W.W[s])
    return row


def sequence_chernoff(W, x, x_prime) -> float:
    """Chernoff distance between the output distributions of two input sequences."""
    W = _as_channel(W)
    return chernoff_distance(_sequence_rows(W, x), _sequence_rows(W, x_prime)).value


def composition_log_ratio(W, x, x_prime) -> float:
    """``sum_y Q(y) ln(W_x(y) / W_x'(y))`` with ``Q`` the normalised ``sqrt(W_x W_x')``.

    Evaluated by enumerating every output sequence.
    """
    W = _as_channel(W)
    if len(x) != len(x_prime):
        raise InvalidInputError("sequences must have the same length")
    p = _sequence_rows(W, x)
    q = _sequence_rows(W, x_prime)
    g = np.sqrt(p * q)
    if g.sum() == 0:
        raise InvalidInputError("the two output distributions have disjoint supports")
    Q = g / g.sum()
    sup = Q > 0
    return float(np.sum(Q[sup] * np.log(p[sup] / q[sup])))


def blahut_counterexample(eps: float) -> float:
    """Same-composition codewords whose tilted log-likelihood ratio is ``3 ln((1-eps)/eps)``.

    With the channel of :func:`ternary_unilateral` the codeword that sends
    each symbol to the shared output with probability ``1 - eps`` is
    ``(1, 2, 0)``; the other is ``(0, 1, 2)``.
    """
    if not 0 < eps < 0.5:
        raise InvalidInputError("eps must lie in (0, 1/2)")
    return composition_log_ratio(ternary_unilateral(eps), (1, 2, 0), (0, 1, 2))


@dataclass
class ReliabilityCurve:
    """Upper bound on the reliability function ``E(R)``."""

    curve: BoundCurve
    distance: DistanceMatrix
    distance_kind: str
    pairwise_reversible: bool


def reliability_upper(W, R_grid, opts: SolverOptions = DEFAULT_OPTIONS, **kwargs) -> ReliabilityCurve:
    """Minimum-distance bound curve for the channel's additive distance.

    Uses the Bhattacharyya distance for pairwise reversible channels and the
    per-letter Chernoff distance otherwise; both make ``E(R) <= delta(R)``.
    """
    W = _as_channel(W)
    rev = pairwise_reversible(W)
    if rev:
        D, kind = build_bhattacharyya(W), "bhattacharyya"
    else:
        D, kind = additive_chernoff_matrix(W), "chernoff-additive"
    curve = best_curve(D, R_grid, opts=opts, **kwargs)
    curve.distance_id = f"reliability:{kind}"
    return ReliabilityCurve(curve, D, kind, rev)
