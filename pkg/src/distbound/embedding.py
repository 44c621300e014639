"""Tests for squared-Euclidean (negative type) distances.

For a finite distance the following are equivalent, and each is checked here
by its own route:

(a) ``exp(-d/rho)`` is positive semidefinite for every ``rho > 0``
    (infinite divisibility, sampled on a grid of ``rho``);
(b) ``sum c(x)c(x')d(x,x') <= 0`` for zero-sum ``c`` (eigenvalues of the
    double-centred matrix);
(c) ``Q -> sum Q(x)Q(x')d(x,x')`` is concave on the simplex (random
    zero-sum directions, each pushed uphill by power iteration);
(d) ``d(x,x') = |u_x - u_x'|^2`` for explicit vectors ``u_x``
    (reconstruction from the centred Gram matrix).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distances import DistanceMatrix, build_from_points
from .errors import InfiniteDistanceError, InvalidInputError, NotEmbeddableError

PSD_RTOL = 1e-9
DEFAULT_RHO_GRID = (0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0)
EMBED_TOL = 1e-8


@dataclass(frozen=True)
class CenteredMatrix:
    entries: np.ndarray
    row_means: np.ndarray
    grand_mean: float


@dataclass
class EmbeddingReport:
    """Outcome of all four checks.  ``None`` means not applicable (infinite entries)."""

    divisible: bool
    negative_type: bool | None
    concave_form: bool | None
    embeddable: bool | None
    witness_vectors: np.ndarray | None = None
    witness_violation: np.ndarray | None = None
    max_reconstruction_error: float | None = None
    rho_grid: tuple = field(default_factory=tuple)
    failing_rho: float | None = None

    @property
    def consistent(self) -> bool:
        flags = [self.divisible, self.negative_type, self.concave_form, self.embeddable]
        flags = [f for f in flags if f is not None]
        return len(set(flags)) <= 1

    def to_json(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()
        return {
            "divisible": self.divisible,
            "negative_type": self.negative_type,
            "concave_form": self.concave_form,
            "embeddable": self.embeddable,
            "witness_vectors": arr(self.witness_vectors),
            "witness_violation": arr(self.witness_violation),
            "max_reconstruction_error": self.max_reconstruction_error,
            "rho_grid": list(self.rho_grid),
            "failing_rho": self.failing_rho,
        }


def _finite_entries(D: DistanceMatrix) -> np.ndarray:
    if not D.is_finite:
        raise InfiniteDistanceError("centering is undefined with infinite distances")
    return D.entries


def center(D: DistanceMatrix) -> CenteredMatrix:
    """Double-centre ``-d``: ``-d(x,x') + s(x) + s(x') - s``."""
    d = _finite_entries(D)
    s_row = d.mean(axis=1)
    s = float(d.mean())
    dt = -d + s_row[:, None] + s_row[None, :] - s
    dt = 0.5 * (dt + dt.T)
    return CenteredMatrix(dt, s_row, s)


def _is_psd(A: np.ndarray, tol: float) -> tuple[bool, np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(A)
    scale = max(float(np.max(np.abs(w))), 1e-300)
    return bool(w[0] >= -tol * scale), w, v


def check_negative_type(D: DistanceMatrix, tol: float = PSD_RTOL) -> tuple[bool, np.ndarray | None]:
    """Return ``(ok, witness)``; the witness is a unit zero-sum vector with positive form."""
    dt = center(D).entries
    ok, w, v = _is_psd(dt, tol)
    if ok:
        return True, None
    c = v[:, 0]
    c = c - c.mean()
    return False, c / np.linalg.norm(c)


def check_divisible(D: DistanceMatrix, rho_grid=DEFAULT_RHO_GRID, tol: float = PSD_RTOL,
                    return_rho: bool = False):
    """PSD test of ``exp(-d/rho)`` on every ``rho`` of the grid.

    A finite grid can refute the condition but not prove it; for negative type
    inputs a pass is expected on any grid.
    """
    grid = tuple(float(r) for r in rho_grid)
    if not grid or any(r <= 0 for r in grid):
        raise InvalidInputError("rho grid must be nonempty and positive")
    for rho in grid:
        ok, _, _ = _is_psd(D.similarity(rho), tol)
        if not ok:
            return (False, rho) if return_rho else False
    return (True, None) if return_rho else True


def _quadratic_form(c: np.ndarray, d: np.ndarray) -> float:
    return float(c @ d @ c)


def check_concavity_sampled(D: DistanceMatrix, trials: int = 1000, seed: int = 0,
                            tol: float = PSD_RTOL, ascent_steps: int = 200,
                            return_witness: bool = False):
    """Search for a zero-sum ``c`` with ``sum c c' d > 0``.

    Such a ``c`` exists exactly when midpoint concavity fails somewhere on
    the simplex.  Each trial draws a random zero-sum direction and climbs
    the quadratic form by shifted power iteration restricted to zero-sum
    vectors.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    d = _finite_entries(D)
    K = d.shape[0]
    if K == 1:
        return (True, None) if return_witness else True
    scale = max(float(np.max(np.abs(d))), 1e-300)
    P = np.eye(K) - 1.0 / K
    A = P @ d @ P
    shift = float(np.linalg.norm(A)) + scale
    rng = np.random.default_rng(seed)
    # all trials climb together, one column each
    C = rng.standard_normal((K, trials))
    C -= C.mean(axis=0)
    C = C[:, np.linalg.norm(C, axis=0) > 0]
    C /= np.linalg.norm(C, axis=0)
    for _ in range(ascent_steps + 1):
        values = np.einsum("ij,ik,kj->j", C, d, C)
        hit = np.flatnonzero(values > tol * scale)
        if hit.size:
            c = C[:, hit[0]].copy()
            return (False, c) if return_witness else False
        C = A @ C + shift * C
        C -= C.mean(axis=0)
        C /= np.linalg.norm(C, axis=0)
    return (True, None) if return_witness else True


def _gram_vectors(dt: np.ndarray, tol: float) -> np.ndarray:
    w, v = np.linalg.eigh(dt)
    scale = max(float(np.max(np.abs(w))), 1e-300)
    keep = w > tol * scale
    return v[:, keep] * np.sqrt(w[keep])


def _reconstruction_error(U: np.ndarray, d: np.ndarray) -> float:
    rec = build_from_points(U if U.shape[1] else np.zeros((U.shape[0], 1))).entries
    return float(np.max(np.abs(rec - d)))


def euclidean_embed(D: DistanceMatrix, tol: float = EMBED_TOL) -> np.ndarray:
    """Vectors ``u_x`` with ``|u_x - u_x'|^2 = d(x, x')``, one row per symbol.

    Rows come from the nonnegative eigenpairs of the centred matrix, divided
    by ``sqrt(2)``.
    """
    ok, witness = check_negative_type(D)
    if not ok:
        raise NotEmbeddableError("distance is not of negative type", witness=witness)
    d = D.entries
    V = _gram_vectors(center(D).entries, PSD_RTOL)
    U = V / np.sqrt(2.0)
    if U.shape[1] == 0:
        U = np.zeros((D.K, 1))
    err = _reconstruction_error(U, d)
    if err > tol * max(1.0, float(np.max(d))):
        raise NotEmbeddableError(f"reconstruction error {err:.3e} exceeds tolerance", witness=None)
    return U


def classify(D: DistanceMatrix, rho_grid=None, trials: int = 1000, seed: int = 0,
             tol: float = PSD_RTOL, embed_tol: float = EMBED_TOL) -> EmbeddingReport:
    """Run all four checks.

    The default grid is the fixed one extended by multiples of the largest
    finite distance, since violations of small size only show at large rho.
    """
    d = D.entries
    finite = d[np.isfinite(d)]
    dmax = float(finite.max()) if finite.size else 0.0
    if rho_grid is None:
        extra = (dmax * 1e2, dmax * 1e3, dmax * 1e4) if dmax > 0 else ()
        rho_grid = tuple(sorted(set(DEFAULT_RHO_GRID) | set(extra)))
    divisible, failing = check_divisible(D, rho_grid, tol, return_rho=True)
    if not D.is_finite:
        return EmbeddingReport(divisible, None, None, None, rho_grid=tuple(rho_grid),
                               failing_rho=failing)
    neg, witness = check_negative_type(D, tol)
    concave, cwit = check_concavity_sampled(D, trials, seed, tol, return_witness=True)
    U = _gram_vectors(center(D).entries, tol) / np.sqrt(2.0)
    if U.shape[1] == 0:
        U = np.zeros((D.K, 1))
    err = _reconstruction_error(U, d)
    embeddable = err <= embed_tol * max(1.0, dmax)
    if witness is None and cwit is not None:
        witness = cwit
    return EmbeddingReport(
        divisible=divisible,
        negative_type=neg,
        concave_form=concave,
        embeddable=embeddable,
        witness_vectors=U if embeddable else None,
        witness_violation=witness,
        max_reconstruction_error=err,
        rho_grid=tuple(rho_grid),
        failing_rho=failing,
    )


def classify_blocks(D: DistanceMatrix, blocks, **kwargs) -> list[EmbeddingReport]:
    """Classify each user-supplied block of symbols separately.

    Useful when infinite distances separate the alphabet into groups that are
    mutually unreachable; the partition itself must be supplied.
    """
    reports = []
    for block in blocks:
        idx = np.asarray(block, dtype=np.int64)
        reports.append(classify(DistanceMatrix(D.entries[np.ix_(idx, idx)]), **kwargs))
    return reports
