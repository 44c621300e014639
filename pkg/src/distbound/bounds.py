"""Upper bounds on the normalised minimum distance of codes.

Every bound here is a statement "for rates above ``R`` the normalised
minimum distance is at most ``delta``", stored as a :class:`BoundPoint`.
Rates are in nats per symbol.  Bounds that only hold for constant
composition codes (composition ``P``) are marked with ``P`` in ``params``.

A point exactly at its rate threshold is flagged ``boundary``: the bounds
are stated for rates strictly above the threshold and extend to it by
continuity.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .distances import DistanceMatrix, WeightedGraph, as_distribution, as_stochastic
from .embedding import check_negative_type
from .errors import (ConditionNotMetError, InfiniteDistanceError, InvalidInputError,
                     WrongClassError, WrongSymmetryError)
from .theta import DEFAULT_OPTIONS, SolverOptions, solve_theta, solve_theta_P, solve_theta_VF

METHODS = ("elias_binary", "umbrella", "umbrella_P", "general_elias",
           "berlekamp", "piret", "blahut", "circ_sym")
RATE_TOL = 1e-9
CSV_HEADER = ("R", "delta", "method", "params_json")

# log2-spaced rho grid 2^-4 .. 2^20 used by best_curve
DEFAULT_RHO_GRID = tuple(2.0 ** k for k in range(-4, 21))


# --- information measures ---------------------------------------------------

def entropy(p) -> float:
    """Shannon entropy in nats with ``0 ln 0 = 0``."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def binary_entropy(lam: float) -> float:
    return entropy([lam, 1.0 - lam])


def inverse_binary_entropy(h: float) -> float:
    """The ``lam`` in ``[0, 1/2]`` with ``binary_entropy(lam) = h``."""
    if h <= 0:
        return 0.0
    if h >= math.log(2):
        return 0.5
    return brentq(lambda x: binary_entropy(x) - h, 0.0, 0.5, xtol=1e-15)


def mutual_information(F, V) -> float:
    """``I(F, V) = H(FV) - sum_a F(a) H(V_a)``."""
    V = as_stochastic(V, name="V")
    F = as_distribution(F, V.shape[0], "F")
    return max(0.0, entropy(F @ V) - float(sum(F[a] * entropy(V[a]) for a in range(len(F)))))


@dataclass(frozen=True)
class InfoMeasures:
    entropy: float
    output_entropy: float | None = None
    row_entropies: tuple | None = None
    mutual_information: float | None = None


def info_measures(P, V=None) -> InfoMeasures:
    """Entropy of ``P``; with ``V`` also ``H(PV)``, row entropies and ``I(P, V)``."""
    P = as_distribution(P)
    if V is None:
        return InfoMeasures(entropy(P))
    V = as_stochastic(V)
    if V.shape[0] != P.shape[0]:
        raise InvalidInputError(f"V has {V.shape[0]} rows but the distribution has {P.shape[0]} entries")
    rows = tuple(entropy(v) for v in V)
    return InfoMeasures(entropy(P), entropy(P @ V), rows, mutual_information(P, V))


# --- points and curves ------------------------------------------------------

@dataclass(frozen=True)
class BoundPoint:
    R: float
    delta_bound: float
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}")
        if not self.delta_bound >= 0 or not self.R >= 0:
            raise InvalidInputError("rate and distance bound must be nonnegative")

    @property
    def vacuous(self) -> bool:
        return math.isinf(self.delta_bound)

    @property
    def boundary(self) -> bool:
        return bool(self.params.get("boundary", False))


@dataclass
class BoundCurve:
    points: list
    distance_id: str = ""

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: p.R)

    def __len__(self):
        return len(self.points)

    @property
    def R(self) -> np.ndarray:
        return np.array([p.R for p in self.points])

    @property
    def delta(self) -> np.ndarray:
        return np.array([p.delta_bound for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for p in self.points:
            w.writerow([fmt(p.R), fmt(p.delta_bound), p.method, _dump_params(p.params)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, distance_id: str = "") -> "BoundCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_HEADER:
            raise InvalidInputError("missing or malformed CSV header")
        pts = [BoundPoint(float(r[0]), float(r[1]), r[2], json.loads(r[3], parse_constant=_inf_constant))
               for r in rows[1:] if r]
        return cls(pts, distance_id)


def fmt(v: float) -> str:
    """12 significant digits, ``inf`` for infinities."""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v) or math.isnan(v):
            return fmt(v)
        return float(fmt(v))
    return v


def _inf_constant(name):
    return {"Infinity": math.inf, "-Infinity": -math.inf}.get(name, math.nan)


def _dump_params(params: dict) -> str:
    return json.dumps(_jsonable(params), sort_keys=True, separators=(",", ":"))


def emit_curve(curve: BoundCurve, path) -> None:
    """Write ``curve`` as UTF-8 CSV with LF line endings."""
    text = curve.to_csv()
    if hasattr(path, "write"):
        path.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_curve(path) -> BoundCurve:
    with open(path, encoding="utf-8", newline="") as fh:
        return BoundCurve.from_csv(fh.read(), distance_id=os.fspath(path))


# --- helpers ----------------------------------------------------------------

def _as_distance(D) -> DistanceMatrix:
    if isinstance(D, WeightedGraph):
        return D.to_distance()
    if not isinstance(D, DistanceMatrix):
        return DistanceMatrix(D)
    return D


def _require_circular(D: DistanceMatrix) -> None:
    if not D.circularly_symmetric:
        raise WrongSymmetryError("distance is not circularly symmetric")


def _require_finite(D: DistanceMatrix) -> None:
    if not D.is_finite:
        raise InfiniteDistanceError("this bound needs finite distances")


def _require_euclidean(D: DistanceMatrix) -> None:
    _require_finite(D)
    ok, _ = check_negative_type(D)
    if not ok:
        raise WrongClassError("distance is not a squared Euclidean distance")


def _check_rate(R) -> float:
    R = float(R)
    if not R >= 0:
        raise InvalidInputError(f"rate must be nonnegative, got {R}")
    return R


def _rho_value(rho: float):
    return "inf" if math.isinf(rho) else float(rho)


def _scaled_theta(rho: float, theta: float) -> float:
    """``rho * theta``; on the ``rho = inf`` path only the rate threshold is informative."""
    if math.isinf(rho):
        return math.inf
    return rho * theta


def quadratic_form(D, Q) -> float:
    """``sum_{x,x'} Q(x) Q(x') d(x, x')``."""
    D = _as_distance(D)
    Q = as_distribution(Q, D.K, "Q")
    d = D.entries
    if not D.is_finite:
        mask = np.outer(Q > 0, Q > 0)
        if np.any(np.isinf(d[mask])):
            return math.inf
        d = np.where(mask, d, 0.0)
    return float(Q @ d @ Q)


def circulant_channel(Q) -> np.ndarray:
    """``V_x(x') = Q(x' - x mod K)``."""
    Q = np.asarray(Q, dtype=float)
    K = Q.shape[0]
    idx = (np.arange(K)[None, :] - np.arange(K)[:, None]) % K
    return Q[idx]


# --- finite length ----------------------------------------------------------

def plotkin_exponential(M: int, n: int, theta: float, rho: float) -> float:
    """Upper bound on the minimum distance of any ``M``-word code of length ``n``.

    Returns ``inf`` when ``M exp(-n theta) <= 1`` (no constraint).
    """
    if int(M) != M or M < 2:
        raise InvalidInputError("need M >= 2 codewords")
    if int(n) != n or n < 1:
        raise InvalidInputError("block length must be a positive integer")
    if theta < 0:
        raise InvalidInputError("theta must be nonnegative")
    excess = M * math.exp(-n * theta) - 1.0
    if excess <= 0:
        return math.inf
    ratio = excess / (M - 1.0)
    if ratio >= 1.0:
        return 0.0
    if math.isinf(rho):
        return math.inf
    return -rho * math.log(ratio)


# --- umbrella and Elias-type points ----------------------------------------

def umbrella_point(D, rho: float, opts: SolverOptions = DEFAULT_OPTIONS) -> BoundPoint:
    res = solve_theta(_as_distance(D), rho, opts)
    th = res.value
    return BoundPoint(th, _scaled_theta(float(rho), th), "umbrella",
                      {"rho": _rho_value(float(rho)), "boundary": True,
                       "solver_status": res.solver_status})


def umbrella_P_point(D, rho: float, P, opts: SolverOptions = DEFAULT_OPTIONS) -> BoundPoint:
    """Constant-composition version; holds for codes of composition ``P``."""
    D = _as_distance(D)
    P = as_distribution(P, D.K, "P")
    res = solve_theta_P(D, rho, P, opts)
    th = res.value
    return BoundPoint(th, _scaled_theta(float(rho), th), "umbrella_P",
                      {"rho": _rho_value(float(rho)), "P": P, "boundary": True,
                       "solver_status": res.solver_status})


def general_elias_point(D, rho: float, F, V, opts: SolverOptions = DEFAULT_OPTIONS) -> BoundPoint:
    """Point ``(I(F,V) + theta(rho, V|F), rho theta(rho, V|F))`` for composition ``P = FV``."""
    D = _as_distance(D)
    V = as_stochastic(V, D.K, "V")
    F = as_distribution(F, V.shape[0], "F")
    res = solve_theta_VF(D, rho, V, F, opts)
    info = mutual_information(F, V)
    return BoundPoint(info + res.value, _scaled_theta(float(rho), res.value), "general_elias",
                      {"rho": _rho_value(float(rho)), "F": F, "V": V, "P": F @ V,
                       "mutual_information": info, "boundary": True,
                       "solver_status": res.solver_status})


def circ_sym_point(D, Q, rho: float, opts: SolverOptions = DEFAULT_OPTIONS) -> BoundPoint:
    """Circularly symmetric point ``(ln K - H(Q) + theta(rho,Q), rho theta(rho,Q))``.

    Same as the general point with ``F`` uniform and ``V_x(x') = Q(x' - x)``,
    and valid for unrestricted codes.
    """
    D = _as_distance(D)
    _require_circular(D)
    Q = as_distribution(Q, D.K, "Q")
    res = solve_theta_P(D, rho, Q, opts)
    R = max(0.0, math.log(D.K) - entropy(Q)) + res.value
    return BoundPoint(R, _scaled_theta(float(rho), res.value), "circ_sym",
                      {"rho": _rho_value(float(rho)), "Q": Q, "boundary": True,
                       "solver_status": res.solver_status})


def elias_binary_point(lam: float, scale: float = 1.0) -> BoundPoint:
    if not 0 <= lam < 0.5:
        raise InvalidInputError(f"lambda must lie in [0, 1/2), got {lam}")
    R = max(0.0, math.log(2) - binary_entropy(lam))
    return BoundPoint(R, scale * 2 * lam * (1 - lam), "elias_binary",
                      {"lambda": float(lam), "boundary": True})


def elias_binary_curve(lambdas) -> BoundCurve:
    return BoundCurve([elias_binary_point(float(l)) for l in lambdas], "hamming:2")


def elias_binary_at(R: float, scale: float = 1.0) -> BoundPoint:
    """The Elias point whose threshold is exactly ``R`` (``R <= ln 2``)."""
    R = _check_rate(R)
    lam = inverse_binary_entropy(math.log(2) - R) if R < math.log(2) else 0.0
    lam = min(lam, 0.5 - 1e-16)
    p = elias_binary_point(lam, scale)
    return BoundPoint(R, p.delta_bound, "elias_binary", p.params)


# --- Berlekamp / Piret / Blahut --------------------------------------------

def _exp_family(d0: np.ndarray, mu: float) -> np.ndarray:
    w = -mu * d0
    w -= w.max()
    q = np.exp(w)
    return q / q.sum()


def berlekamp_distribution(D, R: float):
    """Exponential-family ``Q*(x) ~ exp(-mu d(0,x))`` with ``H(Q*) = ln K - R``.

    Returns ``(Q, mu)``; ``mu = inf`` when the constraint allows a point mass.
    """
    D = _as_distance(D)
    _require_circular(D)
    _require_finite(D)
    R = _check_rate(R)
    d0 = D.entries[0]
    K = D.K
    target = math.log(K) - R
    if target >= math.log(K):
        return np.full(K, 1.0 / K), 0.0
    zero = d0 <= d0.min()
    if target <= math.log(int(zero.sum())):
        return zero / zero.sum(), math.inf
    def gap(mu):
        return entropy(_exp_family(d0, mu)) - target
    hi = 1.0
    while gap(hi) > 0:
        hi *= 2.0
    mu = brentq(gap, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _exp_family(d0, mu), mu


def berlekamp_bound(D, R: float) -> BoundPoint:
    """``t (2 - t / d(U))`` with ``t`` the least mean distance at entropy ``ln K - R``."""
    D = _as_distance(D)
    Q, mu = berlekamp_distribution(D, R)
    d0 = D.entries[0]
    K = D.K
    t = float(Q @ d0)
    dU = float(d0.mean())
    delta = 0.0 if dU == 0 else max(0.0, t * (2.0 - t / dU))
    target = math.log(K) - R
    kkt_entropy = abs(entropy(Q) - target) if mu > 0 else max(0.0, target - entropy(Q))
    if math.isinf(mu) or mu == 0:
        kkt_stat = 0.0
    else:
        sup = Q > 0
        v = Q[sup] * np.exp(mu * (d0[sup] - d0[sup].min()))
        kkt_stat = float(np.ptp(v) / np.max(v))
    return BoundPoint(R, delta, "berlekamp",
                      {"mu": mu if math.isfinite(mu) else "inf", "t": t, "d_uniform": dU,
                       "Q": Q, "kkt_entropy": kkt_entropy, "kkt_stationarity": kkt_stat,
                       "boundary": True})


def piret_bound(D, Q, R: float, check: bool = True) -> BoundPoint:
    """Quadratic form of ``Q`` as a bound for rates with ``R >= ln K - H(Q)``."""
    D = _as_distance(D)
    _require_circular(D)
    _require_euclidean(D)
    R = _check_rate(R)
    Q = as_distribution(Q, D.K, "Q")
    need = math.log(D.K) - entropy(Q)
    if check and R < need - RATE_TOL:
        raise ConditionNotMetError(f"rate {R:.6g} is below ln K - H(Q) = {need:.6g}")
    return BoundPoint(R, quadratic_form(D, Q), "piret",
                      {"Q": Q, "rate_threshold": max(0.0, need),
                       "boundary": abs(R - need) <= RATE_TOL})


def _entropy_grad(Q):
    return -(np.log(np.clip(Q, 1e-300, None)) + 1.0)


def piret_search(D, R: float) -> BoundPoint:
    """Best Piret point found from the Berlekamp distribution plus local descent."""
    D = _as_distance(D)
    R = _check_rate(R)
    Q0, _ = berlekamp_distribution(D, R)
    best = piret_bound(D, Q0, R)
    target = math.log(D.K) - R
    if target <= 0:
        return best
    d = D.entries
    res = minimize(lambda q: float(q @ d @ q), Q0, jac=lambda q: 2.0 * d @ q, method="SLSQP",
                   bounds=[(0.0, 1.0)] * D.K,
                   constraints=[{"type": "eq", "fun": lambda q: q.sum() - 1.0},
                                {"type": "ineq", "fun": lambda q: entropy(np.clip(q, 0, None)) - target,
                                 "jac": _entropy_grad}],
                   options={"ftol": 1e-14, "maxiter": 500})
    q = np.clip(res.x, 0.0, None)
    q /= q.sum()
    if entropy(q) >= target - RATE_TOL:
        cand = piret_bound(D, q, R)
        if cand.delta_bound < best.delta_bound:
            best = cand
    return best


def blahut_eval(D, F, V, R: float) -> BoundPoint:
    """``sum_a F(a) V_a D V_a`` for rates ``R >= I(F, V)``; composition ``P = FV``."""
    D = _as_distance(D)
    _require_euclidean(D)
    R = _check_rate(R)
    V = as_stochastic(V, D.K, "V")
    F = as_distribution(F, V.shape[0], "F")
    info = mutual_information(F, V)
    if info > R + RATE_TOL:
        raise ConditionNotMetError(f"I(F,V) = {info:.6g} exceeds the rate {R:.6g}")
    d = D.entries
    delta = float(sum(F[a] * (V[a] @ d @ V[a]) for a in range(len(F)) if F[a] > 0))
    return BoundPoint(R, max(0.0, delta), "blahut",
                      {"F": F, "V": V, "P": F @ V, "mutual_information": info,
                       "boundary": abs(info - R) <= RATE_TOL})


def _joint_info(J: np.ndarray, P: np.ndarray) -> float:
    F = J.sum(axis=1)
    ratio = J / np.clip(np.outer(F, P), 1e-300, None)
    nz = J > 1e-300
    return float(np.sum(J[nz] * np.log(ratio[nz])))


def _rate_distortion_joint(P, d, slope, iters=400):
    """Blahut-Arimoto test channel at the given slope; joint over (a, x)."""
    K = len(P)
    q = np.full(K, 1.0 / K)
    A = np.exp(-slope * (d - d.min(axis=1, keepdims=True)))
    for _ in range(iters):
        W = q[None, :] * A
        W /= W.sum(axis=1, keepdims=True)
        q = P @ W
    return (P[:, None] * W).T


def _joint_to_FV(J):
    F = J.sum(axis=1)
    keep = F > 1e-15
    J = J[keep]
    F = F[keep]
    return F / F.sum(), J / F[:, None]


def _blahut_seeds(D: DistanceMatrix, P: np.ndarray, R: float):
    K = D.K
    d = D.entries
    seeds = [(np.ones(1), P[None, :])]
    if entropy(P) <= R + RATE_TOL:
        seeds.append((P.copy(), np.eye(K)))
    hp = entropy(P)
    if 0 < R < hp:
        lo, hi = 0.0, 1.0
        while _joint_info(_rate_distortion_joint(P, d, hi), P) < R and hi < 1e6:
            lo, hi = hi, hi * 2.0
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if _joint_info(_rate_distortion_joint(P, d, mid), P) <= R:
                lo = mid
            else:
                hi = mid
        seeds.append(_joint_to_FV(_rate_distortion_joint(P, d, lo)))
    if K == 2 and 0 < R:
        lim = min(P)
        def flip(lam):
            F0 = (P[0] - lam) / (1 - 2 * lam) if lam < 0.5 else 0.5
            F = np.array([F0, 1 - F0])
            V = np.array([[1 - lam, lam], [lam, 1 - lam]])
            return F, V
        if mutual_information(*flip(0.0)) <= R:
            seeds.append(flip(0.0))
        elif lim > 0:
            lam = brentq(lambda l: mutual_information(*flip(l)) - R, 0.0, lim * (1 - 1e-12), xtol=1e-15)
            lam = min(lim, lam * (1 + 1e-12))
            seeds.append(flip(lam))
    if D.circularly_symmetric and np.allclose(P, 1.0 / K, atol=1e-12, rtol=0):
        for Q in (berlekamp_distribution(D, R)[0], piret_search(D, R).params["Q"]):
            seeds.append((np.full(K, 1.0 / K), circulant_channel(Q)))
    return seeds


def _feasible_eval(D, F, V, R):
    try:
        return blahut_eval(D, F, V, R)
    except ConditionNotMetError:
        return None


def blahut_search(D, P, R: float, starts: int = 4, seed: int = 0) -> BoundPoint:
    """Heuristic minimisation of the Blahut-type bound over ``(F, V)`` with ``FV = P``.

    Seeds: the single-row choice ``V = P``, the deterministic channel,
    Blahut-Arimoto test channels with ``I = R``, the binary flip family and,
    for circularly symmetric distances with uniform ``P``, circulant
    channels.  The best seeds are refined by SLSQP on the joint
    distribution; every candidate is re-evaluated for feasibility.
    """
    D = _as_distance(D)
    _require_euclidean(D)
    R = _check_rate(R)
    P = as_distribution(P, D.K, "P")
    K = D.K
    d = D.entries
    best = None
    starts_J = []
    for F, V in _blahut_seeds(D, P, R):
        pt = _feasible_eval(D, F, V, R)
        if pt is None:
            continue
        if best is None or pt.delta_bound < best.delta_bound:
            best = pt
        if len(F) == K:
            starts_J.append((pt.delta_bound, F[:, None] * V))
    starts_J.sort(key=lambda s: s[0])
    rng = np.random.default_rng(seed)
    inits = [J for _, J in starts_J[:2]]
    if inits:
        for _ in range(max(0, starts - len(inits))):
            J = inits[0] * rng.uniform(0.8, 1.2, inits[0].shape)
            inits.append(J * (P / J.sum(axis=0))[None, :])

    def objective(x):
        J = x.reshape(K, K)
        F = J.sum(axis=1)
        return float(sum(J[a] @ d @ J[a] / F[a] for a in range(K) if F[a] > 1e-14))

    cons = [{"type": "eq", "fun": lambda x: x.reshape(K, K).sum(axis=0) - P},
            {"type": "ineq", "fun": lambda x: R - _joint_info(np.clip(x.reshape(K, K), 0, None), P)}]
    for J0 in inits:
        res = minimize(objective, J0.ravel(), method="SLSQP", bounds=[(0.0, 1.0)] * (K * K),
                       constraints=cons, options={"ftol": 1e-13, "maxiter": 300})
        J = np.clip(res.x.reshape(K, K), 0.0, None)
        col = J.sum(axis=0)
        if np.any(col <= 0):
            continue
        J *= (P / col)[None, :]
        F, V = _joint_to_FV(J)
        pt = _feasible_eval(D, F, V, R)
        if pt is not None and (best is None or pt.delta_bound < best.delta_bound):
            best = pt
    return best


# --- epsilon-capacity -------------------------------------------------------

@dataclass(frozen=True)
class EpsCapacityBound:
    alpha_bound: float
    capacity_bound: float
    theta: float
    rho: float
    eps: float
    n: int
    vacuous: bool

    def to_json(self) -> dict:
        return {"alpha_bound": self.alpha_bound, "capacity_bound": self.capacity_bound,
                "theta": self.theta, "rho": _rho_value(self.rho), "eps": self.eps,
                "n": self.n, "vacuous": self.vacuous}


def eps_capacity_bound(G, eps: float, rho: float, opts: SolverOptions = DEFAULT_OPTIONS,
                       n: int = 1) -> EpsCapacityBound:
    """Bound on the largest ``eps^n``-stable set of the ``n``-th Kronecker power.

    ``alpha <= (1 - e) / (exp(-n theta) - e)`` with ``e = eps^(n/rho)``,
    finite when ``e < exp(-n theta)``; the capacity bound ``theta`` needs the
    same condition at ``n = 1``.
    """
    eps = float(eps)
    if not 0 <= eps < 1:
        raise InvalidInputError("eps must lie in [0, 1)")
    rho = float(rho)
    th = solve_theta(_as_distance(G), rho, opts).value
    e1 = 0.0 if eps == 0 else eps ** (1.0 / rho)
    en = e1 ** n
    lead = math.exp(-n * th)
    if en < lead:
        alpha = (1.0 - en) / (lead - en)
    else:
        alpha = math.inf
    cap = th if e1 < math.exp(-th) else math.inf
    return EpsCapacityBound(alpha, cap, th, rho, eps, n, math.isinf(alpha))


# --- best-of curves ---------------------------------------------------------

def _is_uniform(P, K) -> bool:
    return P is None or np.allclose(P, 1.0 / K, atol=1e-12, rtol=0)


def _q_families(D: DistanceMatrix, lambdas=(0.05, 0.1, 0.2, 0.3, 0.4)):
    """Candidate ``Q`` for circularly symmetric points."""
    K = D.K
    d0 = D.entries[0]
    out = [np.full(K, 1.0 / K), np.eye(K)[0]]
    finite = [x for x in range(1, K) if np.isfinite(d0[x])]
    for x in finite:
        for lam in lambdas:
            q = np.zeros(K)
            q[0] = 1 - lam
            q[x] += lam
            out.append(q)
            if (K - x) % K != x:
                q = np.zeros(K)
                q[0] = 1 - lam
                q[x] += lam / 2
                q[(K - x) % K] += lam / 2
                out.append(q)
    if D.is_finite:
        for mu in (0.5, 2.0):
            out.append(_exp_family(d0 / max(d0.max(), 1e-300), mu))
    uniq = {}
    for q in out:
        uniq.setdefault(tuple(np.round(q, 15)), q)
    return list(uniq.values())


def applicable_methods(D: DistanceMatrix, P=None) -> tuple:
    """Methods whose bound is valid for ``D`` (and composition ``P``)."""
    K = D.K
    circ = D.circularly_symmetric
    unif = _is_uniform(P, K)
    out = ["umbrella"]
    if K == 2 and D.is_finite:
        out.append("elias_binary")
    if P is not None or (circ and unif):
        out += ["umbrella_P", "general_elias"]
    if circ and unif:
        out.append("circ_sym")
        if D.is_finite:
            out.append("berlekamp")
            if check_negative_type(D)[0]:
                out.append("piret")
    if D.is_finite and check_negative_type(D)[0] and (P is not None or (circ and unif)):
        out.append("blahut")
    return tuple(m for m in METHODS if m in out)


def _threads(workers) -> int:
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get("DISTBOUND_THREADS", "1")))
    except ValueError:
        return 1


def _refine_rho(make, lo, hi, R, steps=12):
    """Bisect ``log rho`` between a rho with threshold above ``R`` and one at or below."""
    best = None
    for _ in range(steps):
        mid = math.sqrt(lo * hi)
        pt = make(mid)
        if pt.R <= R:
            hi = mid
            if best is None or pt.delta_bound < best.delta_bound:
                best = pt
        else:
            lo = mid
    return best


def best_curve(D, R_grid, methods=None, opts: SolverOptions = DEFAULT_OPTIONS, P=None,
               rho_grid=DEFAULT_RHO_GRID, workers=None, refine: bool = True) -> BoundCurve:
    """Smallest valid bound at each rate of ``R_grid``.

    With ``P`` the curve bounds constant-composition codes of composition
    ``P``; without it, unrestricted codes.  Requested methods that are not
    valid for the input are skipped.  A running minimum over increasing rate
    is applied at the end (more rate never loosens the optimum), so the
    curve is nonincreasing.  Rates that no method covers get ``inf`` with
    ``vacuous`` set in ``params``.
    """
    D = _as_distance(D)
    grid = sorted(float(r) for r in R_grid)
    if not grid:
        raise InvalidInputError("rate grid must be nonempty")
    if P is not None:
        P = as_distribution(P, D.K, "P")
    allowed = applicable_methods(D, P)
    wanted = METHODS if methods is None else tuple(m.replace("-", "_") for m in methods)
    for m in wanted:
        if m not in METHODS:
            raise InvalidInputError(f"unknown method {m!r}")
    use = [m for m in wanted if m in allowed]
    Pc = np.full(D.K, 1.0 / D.K) if P is None else P
    rhos = tuple(sorted(set(float(r) for r in rho_grid)))
    K = D.K

    # rho-parametrised families: (rho -> BoundPoint, rho grid); the large
    # circularly symmetric family is scanned on every other grid point
    families = []
    coarse = rhos[::2]
    if "umbrella" in use:
        families.append((lambda rho: umbrella_point(D, rho, opts), rhos))
    if "umbrella_P" in use:
        families.append((lambda rho: umbrella_P_point(D, rho, Pc, opts), rhos))
    if "circ_sym" in use:
        for Q in _q_families(D):
            families.append((lambda rho, Q=Q: circ_sym_point(D, Q, rho, opts), coarse))
    if "general_elias" in use and K == 2 and _is_uniform(Pc, K):
        for lam in (0.05, 0.1, 0.2, 0.3, 0.4):
            V = np.array([[1 - lam, lam], [lam, 1 - lam]])
            families.append((lambda rho, V=V: general_elias_point(D, rho, [0.5, 0.5], V, opts), coarse))
    elif "general_elias" in use:
        families.append((lambda rho: general_elias_point(D, rho, [1.0], Pc[None, :], opts), coarse))

    def cloud(fam):
        make, rs = fam
        return [make(r) for r in rs]

    nthreads = _threads(workers)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            clouds = list(ex.map(cloud, families))
    else:
        clouds = [cloud(f) for f in families]

    scale01 = float(D.entries[0, 1]) if K == 2 else 1.0

    def at_rate(R):
        cands = []
        best_k = None
        for k, pts in enumerate(clouds):
            for j, pt in enumerate(pts):
                if pt.R <= R + RATE_TOL and math.isfinite(pt.delta_bound):
                    cands.append(pt)
                    if best_k is None or pt.delta_bound < best_k[0]:
                        best_k = (pt.delta_bound, k, j)
        if refine and best_k is not None and best_k[2] > 0:
            _, k, j = best_k
            pts = clouds[k]
            make, rs = families[k]
            if pts[j - 1].R > R:
                pt = _refine_rho(make, rs[j - 1], rs[j], R)
                if pt is not None and math.isfinite(pt.delta_bound):
                    cands.append(pt)
        if "elias_binary" in use:
            cands.append(elias_binary_at(min(R, math.log(2)), scale01))
        if "berlekamp" in use:
            cands.append(berlekamp_bound(D, R))
        if "piret" in use:
            cands.append(piret_search(D, R))
        if "blahut" in use:
            cands.append(blahut_search(D, Pc, R, starts=2))
        cands = [c for c in cands if math.isfinite(c.delta_bound)]
        if not cands:
            return BoundPoint(R, math.inf, use[0] if use else "umbrella", {"vacuous": True})
        b = min(cands, key=lambda c: c.delta_bound)
        params = dict(b.params)
        params["threshold"] = b.R
        params["boundary"] = abs(b.R - R) <= RATE_TOL
        return BoundPoint(R, b.delta_bound, b.method, params)

    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            pts = list(ex.map(at_rate, grid))
    else:
        pts = [at_rate(R) for R in grid]

    out = []
    run = None
    for pt in pts:
        if run is not None and run.delta_bound < pt.delta_bound:
            params = dict(run.params)
            params["from_R"] = run.R
            pt = BoundPoint(pt.R, run.delta_bound, run.method, params)
        else:
            run = pt
        out.append(pt)
    return BoundCurve(out, D.name or "")
