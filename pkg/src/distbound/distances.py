"""Symbol distances, similarity graphs, codes and channels.

A distance here is any symmetric, nonnegative function on a finite alphabet
with zero diagonal; ``+inf`` is allowed and marks pairs of symbols that can
never be confused.  Infinity is carried as IEEE ``inf`` so the usual
arithmetic (``inf + finite == inf``, ``exp(-inf) == 0``) comes for free.

All logarithms are natural, so rates are in nats per symbol.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidAlphabetError,
    InvalidChannelError,
    InvalidCompositionError,
    InvalidInputError,
    UndefinedMinDistanceError,
)

SYMMETRY_TOL = 1e-9
PROB_TOL = 1e-12
# relative tolerance used when snapping nearly circulant matrices
CIRCULANT_TOL = 1e-12


def _parse_number(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity", "+infinity"):
            return math.inf
        return float(s)
    return float(v)


def _circulant_row(d: np.ndarray, rtol: float) -> np.ndarray | None:
    """Return the generating row if ``d`` is circulant within ``rtol``."""
    K = d.shape[0]
    row = d[0]
    idx = (np.arange(K)[None, :] - np.arange(K)[:, None]) % K
    ref = row[idx]
    both_inf = np.isinf(ref) & np.isinf(d)
    if np.any(np.isinf(ref) != np.isinf(d)):
        return None
    fin = ~both_inf
    scale = max(1.0, float(np.max(np.abs(d[fin]), initial=0.0)))
    if np.all(np.abs(ref[fin] - d[fin]) <= rtol * scale):
        return row
    return None


class DistanceMatrix:
    """Symmetric ``K x K`` matrix of symbol distances, ``inf`` allowed.

    Asymmetry or nonzero diagonal up to ``tol`` is averaged away; anything
    larger is rejected.  ``circularly_symmetric`` is detected on construction
    (``d[x][x']`` depends only on ``(x' - x) mod K``).
    """

    __slots__ = ("_d", "circularly_symmetric", "name")

    def __init__(self, entries, *, name: str | None = None, tol: float = SYMMETRY_TOL):
        if isinstance(entries, DistanceMatrix):
            entries = entries.entries
        d = np.array([[_parse_number(v) for v in row] for row in entries], dtype=float) \
            if not isinstance(entries, np.ndarray) else np.array(entries, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise InvalidInputError(f"distance matrix must be square and nonempty, got shape {d.shape}")
        if np.any(np.isnan(d)):
            raise InvalidInputError("distance matrix contains NaN")
        if np.any(d < -tol) or np.any(d == -np.inf):
            raise InvalidInputError("distances must be nonnegative")
        d = np.where(d < 0, 0.0, d)
        diag = np.diag(d)
        if np.any(diag > tol):
            raise InvalidInputError("distance of a symbol to itself must be 0")
        inf_mask = np.isinf(d)
        if np.any(inf_mask != inf_mask.T):
            raise InvalidInputError("distance matrix is not symmetric (infinite entries)")
        fin = ~inf_mask
        if np.any(np.abs(d[fin] - d.T[fin]) > tol):
            raise InvalidInputError("distance matrix is not symmetric")
        d = np.where(inf_mask, np.inf, 0.5 * (np.where(fin, d, 0) + np.where(fin, d.T, 0)))
        np.fill_diagonal(d, 0.0)
        row = _circulant_row(d, CIRCULANT_TOL)
        if row is not None:
            K = d.shape[0]
            sym = np.array([row[k] if np.isinf(row[k]) else 0.5 * (row[k] + row[(K - k) % K])
                            for k in range(K)])
            idx = (np.arange(K)[None, :] - np.arange(K)[:, None]) % K
            d = sym[idx]
        d.flags.writeable = False
        self._d = d
        self.circularly_symmetric = row is not None
        self.name = name

    @property
    def entries(self) -> np.ndarray:
        return self._d

    @property
    def K(self) -> int:
        return self._d.shape[0]

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self._d)))

    def __getitem__(self, idx):
        return float(self._d[idx])

    def __eq__(self, other):
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self._d.shape == other._d.shape and bool(np.array_equal(self._d, other._d))

    def __hash__(self):
        return hash((self._d.shape, self._d.tobytes()))

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"DistanceMatrix{label}(K={self.K}, circ={self.circularly_symmetric})"

    def scaled(self, factor: float) -> "DistanceMatrix":
        return DistanceMatrix(self._d * factor, name=self.name)

    def similarity(self, rho: float = 1.0) -> np.ndarray:
        """Entries ``exp(-d/rho)``; ``rho = inf`` keeps only the zero pattern."""
        if math.isinf(rho):
            return np.where(np.isinf(self._d), 0.0, 1.0)
        g = np.exp(-self._d / rho)
        np.fill_diagonal(g, 1.0)
        return g

    def to_json(self) -> dict:
        return {"K": self.K,
                "entries": [["inf" if math.isinf(v) else float(v) for v in row] for row in self._d]}

    @classmethod
    def from_json(cls, obj: dict | str, name: str | None = None) -> "DistanceMatrix":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            K = int(obj["K"])
            entries = obj["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad distance JSON: {exc}") from exc
        D = cls(entries, name=name)
        if D.K != K:
            raise InvalidInputError(f"declared K={K} but matrix is {D.K}x{D.K}")
        return D


class WeightedGraph:
    """Similarity matrix ``g`` with unit diagonal and entries in ``[0, 1]``."""

    __slots__ = ("_g",)

    def __init__(self, entries, tol: float = SYMMETRY_TOL):
        g = np.array(entries, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise InvalidInputError(f"graph matrix must be square and nonempty, got shape {g.shape}")
        if np.any(np.isnan(g)) or np.any(g < -tol) or np.any(g > 1 + tol):
            raise InvalidInputError("graph weights must lie in [0, 1]")
        if np.any(np.abs(g - g.T) > tol):
            raise InvalidInputError("graph matrix is not symmetric")
        g = np.clip(0.5 * (g + g.T), 0.0, 1.0)
        np.fill_diagonal(g, 1.0)
        g.flags.writeable = False
        self._g = g

    @property
    def entries(self) -> np.ndarray:
        return self._g

    @property
    def K(self) -> int:
        return self._g.shape[0]

    def to_distance(self) -> DistanceMatrix:
        with np.errstate(divide="ignore"):
            d = -np.log(self._g)
        d = np.where(self._g == 0, np.inf, d)
        np.fill_diagonal(d, 0.0)
        return DistanceMatrix(np.abs(d))

    def __repr__(self):
        return f"WeightedGraph(K={self.K})"


@dataclass(frozen=True)
class Channel:
    """Discrete memoryless channel, ``W[x][y]`` = probability of output y given input x."""

    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.size == 0:
            raise InvalidChannelError("channel matrix must be 2-D and nonempty")
        if np.any(np.isnan(W)) or np.any(W < 0):
            raise InvalidChannelError("transition probabilities must be nonnegative")
        if np.any(np.abs(W.sum(axis=1) - 1.0) > PROB_TOL * W.shape[1] + PROB_TOL):
            raise InvalidChannelError("each channel row must sum to 1")
        W.flags.writeable = False
        object.__setattr__(self, "W", W)

    @property
    def X(self) -> int:
        return self.W.shape[0]

    @property
    def Y(self) -> int:
        return self.W.shape[1]

    def to_json(self) -> dict:
        return {"X": self.X, "Y": self.Y, "W": self.W.tolist()}

    @classmethod
    def from_json(cls, obj: dict | str) -> "Channel":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            ch = cls(np.array(obj["W"], dtype=float))
            X, Y = int(obj["X"]), int(obj["Y"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidChannelError(f"bad channel JSON: {exc}") from exc
        if (ch.X, ch.Y) != (X, Y):
            raise InvalidChannelError(f"declared shape {(X, Y)} but W is {ch.W.shape}")
        return ch


@dataclass(frozen=True)
class Code:
    """A block code: ``M`` codewords of common length ``n`` over ``Z_K``."""

    codewords: np.ndarray

    def __post_init__(self):
        try:
            C = np.array(self.codewords, dtype=np.int64)
        except ValueError as exc:
            raise InvalidInputError("codewords must all have the same length") from exc
        if C.ndim == 1:
            C = C[:, None]
        if C.ndim != 2 or C.shape[0] < 1 or C.shape[1] < 1:
            raise InvalidInputError("a code needs at least one codeword of length >= 1")
        if np.any(C < 0):
            raise InvalidInputError("symbols are labelled 0..K-1")
        C.flags.writeable = False
        object.__setattr__(self, "codewords", C)

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    @property
    def rate(self) -> float:
        return math.log(self.M) / self.n

    def compositions(self, K: int) -> np.ndarray:
        """``M x K`` array of symbol counts per codeword."""
        counts = np.zeros((self.M, K), dtype=np.int64)
        for x in range(K):
            counts[:, x] = np.sum(self.codewords == x, axis=1)
        return counts

    def is_constant_composition(self, K: int) -> bool:
        c = self.compositions(K)
        return bool(np.all(c == c[0]))


def as_distribution(p, size: int | None = None, name: str = "distribution") -> np.ndarray:
    """Validate a probability vector (comma string, list or array)."""
    if isinstance(p, str):
        p = [_parse_number(v) for v in p.split(",")]
    q = np.array(p, dtype=float).ravel()
    if size is not None and q.shape[0] != size:
        raise InvalidInputError(f"{name} has {q.shape[0]} entries, expected {size}")
    if q.size == 0 or np.any(np.isnan(q)) or np.any(q < 0):
        raise InvalidInputError(f"{name} must be a nonnegative vector")
    if abs(q.sum() - 1.0) > 1e-9:
        raise InvalidInputError(f"{name} must sum to 1 (got {q.sum()!r})")
    return q / q.sum()


def as_stochastic(V, cols: int | None = None, name: str = "stochastic matrix") -> np.ndarray:
    A = np.array(V, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if cols is not None and A.shape[1] != cols:
        raise InvalidInputError(f"{name} rows have {A.shape[1]} entries, expected {cols}")
    if np.any(np.isnan(A)) or np.any(A < 0) or np.any(np.abs(A.sum(axis=1) - 1) > 1e-9):
        raise InvalidInputError(f"every row of the {name} must be a distribution")
    return A / A.sum(axis=1, keepdims=True)


def check_composition(P, n: int, K: int | None = None) -> np.ndarray:
    """Return integer counts ``n P(x)``; raise if ``P`` is not an ``n``-type."""
    P = as_distribution(P, K, "composition")
    counts = P * n
    rounded = np.rint(counts)
    if np.any(np.abs(counts - rounded) > 1e-9):
        raise InvalidCompositionError(f"n*P is not integral for n={n}: {counts}")
    return rounded.astype(np.int64)


# --- constructors -----------------------------------------------------------

def _check_alphabet(K: int) -> int:
    if int(K) != K or K < 2:
        raise InvalidAlphabetError(f"alphabet size must be an integer >= 2, got {K}")
    return int(K)


def build_hamming(K: int) -> DistanceMatrix:
    K = _check_alphabet(K)
    return DistanceMatrix(1.0 - np.eye(K), name=f"hamming:{K}")


def build_lee(K: int) -> DistanceMatrix:
    K = _check_alphabet(K)
    x = np.arange(K)
    diff = (x[None, :] - x[:, None]) % K
    return DistanceMatrix(np.minimum(diff, K - diff).astype(float), name=f"lee:{K}")


def build_cycle(K: int) -> DistanceMatrix:
    """Distance 1 between neighbours on a ``K``-cycle, ``inf`` otherwise."""
    K = _check_alphabet(K)
    x = np.arange(K)
    diff = (x[None, :] - x[:, None]) % K
    d = np.where(diff == 0, 0.0, np.where((diff == 1) | (diff == K - 1), 1.0, np.inf))
    return DistanceMatrix(d, name=f"cycle:{K}")


def build_from_points(points: Sequence[Sequence[float]]) -> DistanceMatrix:
    """Squared Euclidean distances between the given points."""
    try:
        X = np.array(points, dtype=float)
    except ValueError as exc:
        raise InvalidInputError(f"points must share one dimension: {exc}") from exc
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidInputError("need a nonempty list of equal-length vectors")
    diff = X[:, None, :] - X[None, :, :]
    return DistanceMatrix(np.einsum("ijk,ijk->ij", diff, diff))


def build_psk(K: int) -> DistanceMatrix:
    """Squared Euclidean distance between ``K`` equally spaced unit-circle points."""
    K = _check_alphabet(K)
    ang = 2 * np.pi * np.arange(K) / K
    D = build_from_points(np.column_stack([np.cos(ang), np.sin(ang)]))
    D.name = f"psk:{K}"
    return D


def build_bhattacharyya(channel: Channel) -> DistanceMatrix:
    """``d_B(x, x') = -ln sum_y sqrt(W_x(y) W_x'(y))``; disjoint rows give ``inf``."""
    if not isinstance(channel, Channel):
        channel = Channel(channel)
    S = np.sqrt(channel.W)
    bc = np.clip(S @ S.T, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        d = -np.log(bc)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(np.abs(d), name="bhattacharyya")


def bsc(p: float) -> Channel:
    if not 0 <= p <= 1:
        raise InvalidChannelError("crossover probability must lie in [0, 1]")
    return Channel(np.array([[1 - p, p], [p, 1 - p]]))


def product_distance(D1: DistanceMatrix, D2: DistanceMatrix) -> DistanceMatrix:
    """Distance on pairs ``(a, b)`` (index ``a * K2 + b``): ``d1(a, a') + d2(b, b')``."""
    d = D1.entries[:, None, :, None] + D2.entries[None, :, None, :]
    K = D1.K * D2.K
    return DistanceMatrix(d.reshape(K, K))


def to_similarity(D: DistanceMatrix) -> WeightedGraph:
    return WeightedGraph(D.similarity(1.0))


# --- sequences and codes ----------------------------------------------------

def sequence_distance(x: Iterable[int], y: Iterable[int], D: DistanceMatrix) -> float:
    """Additive extension of ``D`` to sequences; one infinite term makes it infinite."""
    a = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=np.int64)
    b = np.asarray(list(y) if not isinstance(y, np.ndarray) else y, dtype=np.int64)
    if a.shape != b.shape:
        raise InvalidInputError(f"sequences have different lengths {a.shape} and {b.shape}")
    if a.size and (a.min() < 0 or b.min() < 0 or a.max() >= D.K or b.max() >= D.K):
        raise InvalidInputError("symbol out of range")
    return float(np.sum(D.entries[a, b]))


def pairwise_distances(codewords: np.ndarray, D: DistanceMatrix) -> np.ndarray:
    C = np.asarray(codewords, dtype=np.int64)
    if C.size and C.max() >= D.K:
        raise InvalidInputError("symbol out of range")
    out = np.zeros((C.shape[0], C.shape[0]))
    for k in range(C.shape[1]):
        out = out + D.entries[C[:, k][:, None], C[:, k][None, :]]
    return out


def code_min_distance(code: Code | np.ndarray, D: DistanceMatrix) -> float:
    if not isinstance(code, Code):
        code = Code(code)
    if code.M < 2:
        raise UndefinedMinDistanceError("minimum distance needs at least two codewords")
    pd = pairwise_distances(code.codewords, D)
    iu = np.triu_indices(code.M, 1)
    return float(pd[iu].min())


# --- built-in shorthands ----------------------------------------------------

def named_distance(spec: str) -> DistanceMatrix:
    """Parse shorthands such as ``hamming:3``, ``lee:5``, ``pentagon``, ``qpsk``."""
    name, _, arg = spec.strip().lower().partition(":")
    if name == "hamming":
        return build_hamming(int(arg))
    if name == "lee":
        return build_lee(int(arg))
    if name == "cycle":
        return build_cycle(int(arg))
    if name == "psk":
        return build_psk(int(arg))
    if name == "binary":
        return build_hamming(2)
    if name == "square":
        D = build_cycle(4)
        D.name = "square"
        return D
    if name == "pentagon":
        D = build_cycle(5)
        D.name = "pentagon"
        return D
    if name == "qpsk":
        D = build_psk(4)
        D.name = "qpsk"
        return D
    raise InvalidInputError(f"unknown distance shorthand {spec!r}")
