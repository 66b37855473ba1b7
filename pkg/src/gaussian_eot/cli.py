"""Command-line interface.

Every subcommand reads a JSON problem file::

    {
      "epsilon": 2.0,
      "p": {"mean": [0, 0], "cov": [[1, 0], [0, 1]]},
      "q": {"mean": [0, 0], "cov": [[2, 0], [0, 2]]},
      "lambda": 1.0,                                   # optional
      "oracle": {"points_per_axis": 400, "extent_std": 6},  # optional
      "epsilons": [0.5, 1, 2]                          # optional, for sweep
    }

or, for ``barycenter``, ``components`` (list of ``{"mean", "cov"}``) and
optional ``weights`` in place of ``p``/``q``. Results go to standard output
(or ``--output``) as JSON, except ``sweep`` which writes CSV. Floats are
printed with 17 significant digits so they re-read bit-identically.

Exit codes: 0 success, 1 usage or parse error, 2 validation error,
3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import barycenter as bary
from . import oracle
from .cost import ReferenceMeasure, best_approximation, entropic_cost, gelbrich_lower_bound, relative_entropic_cost
from .exceptions import ConvergenceError, GaussianOTError, ResourceError, ValidationError
from .riccati import assemble_plan
from .spd import Gaussian, validate_gaussian

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2, 3

COMMANDS = ("cost", "plan", "bound", "best-approx", "barycenter", "oracle", "sweep")


class UsageError(Exception):
    """Bad command line or malformed problem file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- problem files


@dataclass
class ProblemFile:
    epsilon: float | None
    p: Gaussian | None = None
    q: Gaussian | None = None
    components: list | None = None
    weights: list | None = None
    points_per_axis: int = oracle.DEFAULT_POINTS
    extent_std: float = oracle.DEFAULT_EXTENT
    lam: float | None = None
    epsilons: list | None = None


def _number_array(value, what):
    try:
        return np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{what}: expected a numeric array ({exc})") from None


def _gaussian(obj, what) -> Gaussian:
    if not isinstance(obj, dict) or "mean" not in obj or "cov" not in obj:
        raise UsageError(f"{what}: expected an object with 'mean' and 'cov'")
    mean = _number_array(obj["mean"], f"{what}.mean")
    cov = _number_array(obj["cov"], f"{what}.cov")
    return validate_gaussian(mean, cov)


def _float(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"{what}: expected a number, got {value!r}")
    return float(value)


def parse_problem(data: dict) -> ProblemFile:
    """Turn decoded JSON into a :class:`ProblemFile`.

    Raises :class:`UsageError` for structural problems and
    :class:`~gaussian_eot.exceptions.ValidationError` for mathematically
    invalid content (non-SPD covariance, dimension mismatch).
    """
    if not isinstance(data, dict):
        raise UsageError("problem file must contain a JSON object")
    pairwise = "p" in data or "q" in data
    barycentric = "components" in data
    if pairwise == barycentric:
        raise UsageError("problem file needs exactly one of a pairwise problem (p, q) or a barycenter problem (components)")

    eps = data.get("epsilon")
    prob = ProblemFile(epsilon=None if eps is None else _float(eps, "epsilon"))
    if pairwise:
        if "p" not in data:
            raise UsageError("pairwise problem needs 'p'")
        prob.p = _gaussian(data["p"], "p")
        if "q" in data:
            prob.q = _gaussian(data["q"], "q")
    else:
        comps = data["components"]
        if not isinstance(comps, list) or not comps:
            raise UsageError("'components' must be a non-empty list")
        prob.components = [_gaussian(c, f"components[{i}]") for i, c in enumerate(comps)]
        if "weights" in data:
            prob.weights = [_float(w, "weights[]") for w in data["weights"]]

    settings = data.get("oracle", {})
    if not isinstance(settings, dict):
        raise UsageError("'oracle' must be an object")
    if "points_per_axis" in settings:
        prob.points_per_axis = int(_float(settings["points_per_axis"], "oracle.points_per_axis"))
    if "extent_std" in settings:
        prob.extent_std = _float(settings["extent_std"], "oracle.extent_std")
    if "lambda" in data:
        prob.lam = _float(data["lambda"], "lambda")
    if "epsilons" in data:
        if not isinstance(data["epsilons"], list):
            raise UsageError("'epsilons' must be a list")
        prob.epsilons = [_float(e, "epsilons[]") for e in data["epsilons"]]
    return prob


def load_problem(path: str) -> ProblemFile:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    return parse_problem(data)


# ---------------------------------------------------------------- output


def _fmt_float(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v, indent) for v in obj) + "]"
    if obj is None:
        return "null"
    return json.dumps(obj)


def _gaussian_out(g: Gaussian) -> dict:
    return {"mean": g.mean, "cov": g.cov.values}


# ---------------------------------------------------------------- commands


def _eps(prob: ProblemFile, args) -> float:
    eps = args.eps if args.eps is not None else prob.epsilon
    if eps is None:
        raise UsageError("epsilon missing: give it in the problem file or with --eps")
    return eps


def _pair(prob):
    if prob.p is None or prob.q is None:
        raise UsageError("this command needs a pairwise problem with both 'p' and 'q'")
    return prob.p, prob.q


def _grid(prob, args):
    n = args.grid if args.grid is not None else prob.points_per_axis
    extent = args.extent if args.extent is not None else prob.extent_std
    return n, extent


def cmd_cost(prob, args):
    p, q = _pair(prob)
    eps = _eps(prob, args)
    lam = args.lam if args.lam is not None else prob.lam
    if lam is None:
        out = entropic_cost(p, q, eps).as_dict()
    else:
        out = relative_entropic_cost(p, q, eps, ReferenceMeasure(lam)).as_dict()
        out["lambda"] = lam
    out["epsilon"] = eps
    return out, EXIT_OK


def cmd_plan(prob, args):
    p, q = _pair(prob)
    plan = assemble_plan(p, q, _eps(prob, args))
    out = {
        "epsilon": plan.eps,
        "mean": plan.mean,
        "sigma_eps": plan.sigma_eps,
        "x_eps": plan.x_eps.values,
        "f0": {"matrix": plan.f0.matrix, "constant": plan.f0.constant},
        "g0": {"matrix": plan.g0.matrix, "constant": plan.g0.constant},
    }
    return out, EXIT_OK


def cmd_bound(prob, args):
    p, q = _pair(prob)
    eps = _eps(prob, args)
    value = gelbrich_lower_bound(p.mean, p.cov.values, q.mean, q.cov.values, eps)
    return {"epsilon": eps, "bound": value}, EXIT_OK


def cmd_best_approx(prob, args):
    if prob.p is None:
        raise UsageError("best-approx needs 'p'")
    eps = _eps(prob, args)
    best, value = best_approximation(prob.p, eps)
    out = _gaussian_out(best)
    out["value"] = value
    out["epsilon"] = eps
    return out, EXIT_OK


def cmd_barycenter(prob, args):
    if prob.components is None:
        raise UsageError("barycenter needs 'components'")
    problem = bary.make_problem(prob.components, prob.weights, _eps(prob, args))
    tol = args.tol if args.tol is not None else bary.DEFAULT_TOL
    max_iter = args.max_iter if args.max_iter is not None else bary.DEFAULT_MAX_ITER
    sol = bary.solve_barycenter(problem, tol=tol, max_iter=max_iter)
    out = _gaussian_out(sol.barycenter)
    out.update(residual=sol.residual, iterations=sol.iterations, converged=sol.converged, epsilon=problem.eps)
    if not sol.converged:
        print(
            f"error: barycenter did not converge in {sol.iterations} iterations "
            f"(residual {sol.residual:.6e} > tol {tol:.1e})",
            file=sys.stderr,
        )
        return out, EXIT_NONCONVERGED
    return out, EXIT_OK


def cmd_oracle(prob, args):
    p, q = _pair(prob)
    eps = _eps(prob, args)
    n, extent = _grid(prob, args)
    tol = args.tol if args.tol is not None else oracle.DEFAULT_TOL
    max_iter = args.max_iter if args.max_iter is not None else oracle.DEFAULT_MAX_ITER
    res = oracle.oracle_solve(p, q, eps, n, extent, tol, max_iter)
    out = {
        "epsilon": eps,
        "corrected_objective": res.corrected_objective,
        "discrete_objective": res.discrete_objective,
        "marginal_error": res.marginal_error,
        "iterations": res.iterations,
        "converged": res.converged,
    }
    if not res.converged:
        print(f"error: Sinkhorn did not converge (marginal error {res.marginal_error:.6e})", file=sys.stderr)
        return out, EXIT_NONCONVERGED
    return out, EXIT_OK


def cmd_sweep(prob, args):
    p, q = _pair(prob)
    if args.eps_list is not None:
        epsilons = args.eps_list
    elif prob.epsilons is not None:
        epsilons = prob.epsilons
    else:
        raise UsageError("sweep needs --eps-list or 'epsilons' in the problem file")
    n, extent = _grid(prob, args)
    tol = args.tol if args.tol is not None else oracle.DEFAULT_TOL
    max_iter = args.max_iter if args.max_iter is not None else oracle.DEFAULT_MAX_ITER
    lines = ["epsilon,closed_form,oracle,abs_gap"]
    for eps in epsilons:
        closed = entropic_cost(p, q, eps).total
        est = oracle.oracle_cost(p, q, eps, n, extent, tol, max_iter)
        lines.append(",".join(_fmt_float(v) for v in (eps, closed, est, abs(est - closed))))
    return "\n".join(lines), EXIT_OK


HANDLERS = {
    "cost": cmd_cost,
    "plan": cmd_plan,
    "bound": cmd_bound,
    "best-approx": cmd_best_approx,
    "barycenter": cmd_barycenter,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
}


def _eps_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", required=True, metavar="PATH", help="JSON problem file")
    common.add_argument("--eps", type=float, help="regularization strength (overrides the file)")
    common.add_argument("--tol", type=float, help="convergence tolerance")
    common.add_argument("--max-iter", type=int, help="iteration cap")
    common.add_argument("--grid", type=int, help="oracle grid points per axis")
    common.add_argument("--extent", type=float, help="oracle grid half-width in standard deviations")
    common.add_argument("--lambda", dest="lam", type=float, help="reference variance for the relative-entropy cost")
    common.add_argument("--output", metavar="PATH", help="write result here instead of standard output")

    parser = _Parser(prog="gaussian-eot", description="Entropic optimal transport between Gaussian measures.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "cost": "entropic transport cost and its three-term breakdown",
        "plan": "optimal Gaussian coupling and dual potentials",
        "bound": "moment-based lower bound on the entropic cost",
        "best-approx": "closest measure to p in entropic cost",
        "barycenter": "regularized barycenter of Gaussian components",
        "oracle": "discretized Sinkhorn estimate of the cost",
        "sweep": "CSV of closed form vs oracle over several eps values",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "sweep":
            sp.add_argument("--eps-list", type=_eps_list, help="comma-separated eps values")
    return parser


def run_command(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run one subcommand, write its output, return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(f"missing command, expected one of: {', '.join(COMMANDS)}")
        prob = load_problem(args.input)
        result, code = HANDLERS[args.command](prob, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ResourceError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except GaussianOTError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED

    text = result if isinstance(result, str) else dumps(result)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return code


def main():
    sys.exit(run_command())
