"""Command-line front end.

Every subcommand writes JSON (or CSV for curves) to stdout or ``--output``.
Exit status: 0 on success, 1 on domain errors, 2 when an enumeration budget
is exceeded, 64 on usage errors.  Numbers carry 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bounds, channels, embedding, oracle, theta
from .distances import (Channel, Code, DistanceMatrix, WeightedGraph, bsc, named_distance,
                        sequence_distance)
from .errors import BudgetError, DomainError, InvalidInputError

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_BUDGET = 2
EXIT_USAGE = 64
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --- parsing helpers ----------------------------------------------------------

def _number(s: str) -> float:
    t = s.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    return float(t)


def _numbers(s: str) -> list:
    return [_number(v) for v in s.split(",") if v.strip()]


def _grid(s: str) -> list:
    """``start:stop:count`` (inclusive linspace) or a comma list."""
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise InvalidInputError(f"bad grid {s!r}; use start:stop:count")
        a, b, n = _number(parts[0]), _number(parts[1]), int(parts[2])
        return np.linspace(a, b, n).tolist()
    return _numbers(s)


def _matrix(s: str) -> np.ndarray:
    """Rows separated by ``;`` and entries by ``,``, or a JSON nested list."""
    s = s.strip()
    if s.startswith("["):
        return np.array(json.loads(s), dtype=float)
    return np.array([_numbers(r) for r in s.split(";")], dtype=float)


def _load_json(spec: str):
    if spec.lstrip().startswith("{") or spec.lstrip().startswith("["):
        return json.loads(spec)
    if os.path.exists(spec):
        with open(spec, encoding="utf-8") as fh:
            return json.load(fh)
    return None


def load_distance(spec: str) -> DistanceMatrix:
    obj = _load_json(spec)
    if obj is None:
        return named_distance(spec)
    if isinstance(obj, dict) and "similarity" in obj:
        return WeightedGraph(obj["similarity"]).to_distance()
    if isinstance(obj, dict):
        return DistanceMatrix.from_json(obj)
    return DistanceMatrix(obj)


def load_channel(spec: str) -> Channel:
    name, _, arg = spec.strip().lower().partition(":")
    if name == "bsc":
        return bsc(_number(arg))
    if name == "ternary-unilateral":
        return channels.ternary_unilateral(_number(arg))
    obj = _load_json(spec)
    if obj is None:
        raise InvalidInputError(f"unknown channel {spec!r}")
    if isinstance(obj, dict):
        return Channel.from_json(obj)
    return Channel(np.array(obj, dtype=float))


def load_code(spec: str) -> Code:
    obj = _load_json(spec)
    if obj is None:
        obj = [[int(v) for v in row.split(",")] for row in spec.split(";")]
    if isinstance(obj, dict):
        obj = obj.get("codewords")
    return Code(np.array(obj, dtype=np.int64))


# --- output -------------------------------------------------------------------

def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v) or math.isnan(v):
            return bounds.fmt(v)
        return float(bounds.fmt(v))
    return v


def _emit_json(obj, out) -> None:
    out.write(json.dumps(_clean(obj), sort_keys=True) + "\n")


def _emit_text(text: str, path) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_json(obj, path) -> None:
    if path is None or path == "-":
        _emit_json(obj, sys.stdout)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _emit_json(obj, fh)


def _opts(args) -> theta.SolverOptions:
    return theta.SolverOptions(gap_tol=args.gap_tol, max_iter=args.max_iter, starts=args.starts,
                               seed=args.seed)


# --- subcommands --------------------------------------------------------------

def cmd_distance(args):
    D = load_distance(args.distance)
    out = {"name": D.name, "K": D.K, "entries": D.entries.tolist(),
           "circularly_symmetric": D.circularly_symmetric, "finite": D.is_finite}
    if args.x is not None and args.y is not None:
        x = [int(v) for v in args.x.split(",")]
        y = [int(v) for v in args.y.split(",")]
        out["sequence_distance"] = sequence_distance(x, y, D)
    _write_json(out, args.output)


def cmd_check_embedding(args):
    D = load_distance(args.distance)
    grid = _numbers(args.rho_grid) if args.rho_grid else None
    rep = embedding.classify(D, rho_grid=grid, trials=args.trials, seed=args.seed)
    _write_json(rep.to_json(), args.output)


def cmd_theta(args):
    D = load_distance(args.distance)
    opts = _opts(args)
    rho = _number(args.rho)
    if args.V is not None:
        V = _matrix(args.V)
        F = _numbers(args.F) if args.F else [1.0 / V.shape[0]] * V.shape[0]
        res = theta.solve_theta_VF(D, rho, V, F, opts)
        out = {"value": res.value, "rho": rho, "solver_status": res.solver_status,
               "parts": [p.value for p in res.parts]}
    elif args.P is not None:
        out = theta.solve_theta_P(D, rho, _numbers(args.P), opts).to_json()
    else:
        out = theta.solve_theta(D, rho, opts).to_json()
    _write_json(out, args.output)


def _bound_points(args):
    m = args.method.replace("-", "_")
    opts = _opts(args)
    need = lambda name: _require(args, name, m)  # noqa: E731
    if m == "elias_binary":
        return [bounds.elias_binary_point(l) for l in _numbers(need("lambda_"))]
    D = load_distance(need("distance"))
    rates = _grid(args.R) if args.R else []
    if m == "umbrella":
        return [bounds.umbrella_point(D, r, opts) for r in _numbers(need("rho"))]
    if m == "umbrella_P":
        return [bounds.umbrella_P_point(D, r, _numbers(need("P")), opts) for r in _numbers(need("rho"))]
    if m == "general_elias":
        V = _matrix(need("V"))
        F = _numbers(args.F) if args.F else [1.0 / V.shape[0]] * V.shape[0]
        return [bounds.general_elias_point(D, r, F, V, opts) for r in _numbers(need("rho"))]
    if m == "circ_sym":
        return [bounds.circ_sym_point(D, _numbers(need("Q")), r, opts) for r in _numbers(need("rho"))]
    if m == "berlekamp":
        need("R")
        return [bounds.berlekamp_bound(D, R) for R in rates]
    if m == "piret":
        need("R")
        if args.Q:
            return [bounds.piret_bound(D, _numbers(args.Q), R) for R in rates]
        return [bounds.piret_search(D, R) for R in rates]
    if m == "blahut":
        need("R")
        if args.V:
            V = _matrix(args.V)
            F = _numbers(args.F) if args.F else [1.0 / V.shape[0]] * V.shape[0]
            return [bounds.blahut_eval(D, F, V, R) for R in rates]
        P = _numbers(args.P) if args.P else [1.0 / D.K] * D.K
        return [bounds.blahut_search(D, P, R, seed=args.seed) for R in rates]
    raise InvalidInputError(f"unknown method {args.method!r}")


def _require(args, name, method):
    v = getattr(args, name)
    if v is None:
        flag = "--" + name.rstrip("_").replace("_", "-")
        raise UsageError(f"method {method} needs {flag}")
    return v


def cmd_bound(args):
    m = args.method.replace("-", "_")
    if m == "plotkin":
        th = _number(args.theta) if args.theta is not None else None
        D = load_distance(args.distance) if args.distance else None
        if th is None:
            if D is None:
                raise UsageError("plotkin needs --theta or --distance")
            th = theta.solve_theta(D, _number(_require(args, "rho", m)), _opts(args)).value
        rho = _number(_require(args, "rho", m))
        M, n = int(_require(args, "M", m)), int(_require(args, "n", m))
        _write_json({"bound": bounds.plotkin_exponential(M, n, th, rho), "theta": th,
                     "M": M, "n": n, "rho": rho}, args.output)
        return
    if m == "eps_capacity":
        D = load_distance(_require(args, "distance", m))
        res = bounds.eps_capacity_bound(D, _number(_require(args, "eps", m)),
                                        _number(_require(args, "rho", m)), _opts(args), n=args.n or 1)
        _write_json(res.to_json(), args.output)
        return
    pts = _bound_points(args)
    _emit_text(bounds.BoundCurve(pts, args.distance or "").to_csv(), args.output)


def cmd_curve(args):
    D = load_distance(args.distance)
    grid = _grid(args.R_grid) if args.R_grid else np.linspace(0, math.log(D.K), 21).tolist()
    methods = args.methods.split(",") if args.methods else None
    P = _numbers(args.P) if args.P else None
    rho_grid = _numbers(args.rho_grid) if args.rho_grid else bounds.DEFAULT_RHO_GRID
    curve = bounds.best_curve(D, grid, methods, _opts(args), P=P, rho_grid=rho_grid)
    _emit_text(curve.to_csv(), args.output)


def cmd_oracle(args):
    sub = args.oracle_cmd
    if sub == "stable":
        G = load_distance(args.graph)
        g = oracle.kronecker_power(G, args.n, _numbers(args.P) if args.P else None, args.budget)
        out = oracle.max_stable_set(g, _number(args.eps)).to_json()
    elif sub == "min-distance":
        D = load_distance(args.distance)
        res = oracle.optimal_min_distance(args.n, args.M, D, _numbers(args.P) if args.P else None,
                                          args.budget)
        out = res.to_json()
    elif sub == "shift":
        code = load_code(args.code)
        D = load_distance(args.distance) if args.distance else None
        K = args.K if args.K is not None else (D.K if D is not None else int(code.codewords.max()) + 1)
        res = oracle.shift_to_constant_composition(code, K, seed=args.seed, D=D)
        out = {"size": res.code.M, "shift": res.shift.tolist(), "composition": res.composition.tolist(),
               "witness": res.code.codewords.tolist()}
    else:
        code = load_code(args.code)
        V = _matrix(args.Vhat)
        res = oracle.best_covered_subcode(code, V)
        out = {"size": res.code.M, "sequence": res.sequence.tolist(), "floor": res.floor,
               "witness": res.code.codewords.tolist()}
    _write_json(out, args.output)


def cmd_channel(args):
    sub = args.channel_cmd
    if sub == "chernoff":
        if args.channel:
            W = load_channel(args.channel)
            D = channels.additive_chernoff_matrix(W)
            out = {"entries": D.entries.tolist()}
        else:
            res = channels.chernoff_distance(_numbers(_require(args, "Q1", sub)),
                                             _numbers(_require(args, "Q2", sub)))
            out = res.to_json()
    elif sub == "bhattacharyya":
        from .distances import build_bhattacharyya
        D = build_bhattacharyya(load_channel(args.channel))
        out = {"entries": D.entries.tolist()}
    elif sub == "reversible":
        out = {"pairwise_reversible": channels.pairwise_reversible(load_channel(args.channel))}
    else:
        W = load_channel(args.channel)
        grid = _grid(args.R_grid) if args.R_grid else np.linspace(0, math.log(W.X), 11).tolist()
        res = channels.reliability_upper(W, grid, _opts(args))
        _emit_text(res.curve.to_csv(), args.output)
        return
    _write_json(out, args.output)


# --- parser -------------------------------------------------------------------

def _common(p):
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")


def _solver(p):
    p.add_argument("--gap-tol", type=float, default=theta.DEFAULT_OPTIONS.gap_tol)
    p.add_argument("--starts", type=int, default=theta.DEFAULT_OPTIONS.starts)
    p.add_argument("--max-iter", type=int, default=theta.DEFAULT_OPTIONS.max_iter)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="distbound", description="Minimum-distance bounds for codes under general symbol distances.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("distance", help="show a distance matrix")
    p.add_argument("--distance", required=True, help="shorthand (hamming:K, lee:K, ...), JSON or file")
    p.add_argument("--x", help="first sequence, comma separated")
    p.add_argument("--y", help="second sequence, comma separated")
    _common(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("check-embedding", help="squared-Euclidean tests")
    p.add_argument("--distance", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--rho-grid")
    _common(p)
    p.set_defaults(func=cmd_check_embedding)

    p = sub.add_parser("theta", help="theta functions")
    p.add_argument("--distance", required=True)
    p.add_argument("--rho", required=True, help="positive number or inf")
    p.add_argument("--P", help="composition, comma separated")
    p.add_argument("--V", help="conditional rows 'a,b;c,d'")
    p.add_argument("--F", help="row weights for --V")
    _solver(p)
    _common(p)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("bound", help="single bound family")
    p.add_argument("--method", required=True,
                   choices=["elias-binary", "umbrella", "umbrella-P", "general-elias", "circ-sym",
                            "berlekamp", "piret", "blahut", "plotkin", "eps-capacity"])
    p.add_argument("--distance")
    p.add_argument("--lambda", dest="lambda_", help="comma list of lambdas")
    p.add_argument("--rho", help="comma list of rho values")
    p.add_argument("--R", help="rate list or start:stop:count")
    p.add_argument("--P")
    p.add_argument("--Q")
    p.add_argument("--F")
    p.add_argument("--V")
    p.add_argument("--M", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--theta")
    p.add_argument("--eps")
    _solver(p)
    _common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("curve", help="best-of bound curve as CSV")
    p.add_argument("--distance", required=True)
    p.add_argument("--R-grid", help="rate list or start:stop:count")
    p.add_argument("--methods", help="comma list of methods")
    p.add_argument("--P")
    p.add_argument("--rho-grid")
    _solver(p)
    _common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("oracle", help="exact small-scale computations")
    osub = p.add_subparsers(dest="oracle_cmd", required=True, parser_class=_Parser)
    q = osub.add_parser("stable", help="largest eps-stable set of a Kronecker power")
    q.add_argument("--graph", required=True)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--eps", default="0")
    q.add_argument("--P")
    q.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    _common(q)
    q = osub.add_parser("min-distance", help="optimal minimum distance")
    q.add_argument("--distance", required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--M", type=int, required=True)
    q.add_argument("--P")
    q.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    _common(q)
    q = osub.add_parser("shift", help="constant-composition subcode by shifting")
    q.add_argument("--code", required=True, help="JSON, file or rows '0,1;1,0'")
    q.add_argument("--K", type=int)
    q.add_argument("--distance")
    _common(q)
    q = osub.add_parser("cover", help="covering subcode for a conditional type")
    q.add_argument("--code", required=True)
    q.add_argument("--Vhat", required=True)
    _common(q)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("channel", help="channel distances and reliability bounds")
    csub = p.add_subparsers(dest="channel_cmd", required=True, parser_class=_Parser)
    q = csub.add_parser("chernoff", help="Chernoff distance")
    q.add_argument("--Q1")
    q.add_argument("--Q2")
    q.add_argument("--channel", help="per-letter matrix for a whole channel")
    _common(q)
    q = csub.add_parser("bhattacharyya", help="Bhattacharyya distance matrix")
    q.add_argument("--channel", required=True)
    _common(q)
    q = csub.add_parser("reversible", help="pairwise reversibility")
    q.add_argument("--channel", required=True)
    _common(q)
    q = csub.add_parser("reliability", help="upper bound on E(R) as CSV")
    q.add_argument("--channel", required=True)
    q.add_argument("--R-grid")
    _solver(q)
    _common(q)
    p.set_defaults(func=cmd_channel)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DomainError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
