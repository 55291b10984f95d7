"""Command-line surface: JSON in, JSON out, deterministic bytes.

Every subcommand reads measures (and couplings, lifts, costs) from JSON
files, runs one computation, and prints a single JSON object to standard
output.  Numbers are serialized with 17 significant digits so that every
printed value re-parses to the exact float that produced it; identical
inputs therefore give byte-identical output.

Exit codes: 0 on success, 1 on validation or input errors (with a
one-line {"error": code, "detail": text} object), 2 when an internal
consistency guard fires.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections.abc import Sequence

import numpy as np

from .couplings import (
    MonotonicityKind,
    MonotonicityTag,
    check_monotonicity,
    cost_integral,
    coupling_from_json_dict,
    extremal_covariance,
)
from .errors import (
    InternalInconsistency,
    MarginalMismatch,
    NumericalFailure,
    OutOfRange,
    ValidationError,
)
from .lp_oracle import Sense, constrained_ot_lp, min_target_lp, wot_value_lp
from .measure_core import (
    DiscreteMeasure,
    measure_from_json_dict,
    measures_close,
)
from .projection import (
    ConvexCost,
    CostKind,
    absolute_cost,
    displacement_profile,
    optimal_map,
    power_cost,
    pushforward_map,
    pwl_cost,
)
from .pwl_convex import (
    PwlFunction,
    call_potential,
    evaluate,
    put_potential,
    pwl_from_json_dict,
    u_potential,
)
from .shadow import LiftKind, lift_from_json_dict, make_lift, shadow, shadow_coupling
from .tolerances import EPS, TOL_GRID
from .wot_solver import (
    decompose,
    is_pistar_member,
    pistar_violation,
    wot_value,
    wot_value_general,
)

__all__ = ["main", "run"]


# ==== deterministic JSON output ============================================


def _format_float(v: float) -> str:
    if not math.isfinite(v):
        raise InternalInconsistency(f"non-finite number {v!r} in output")
    text = "%.17g" % (v + 0.0)
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def _emit(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        parts = (f"{json.dumps(k)}: {_emit(v)}" for k, v in obj.items())
        return "{" + ", ".join(parts) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_emit(v) for v in obj) + "]"
    raise InternalInconsistency(f"unserializable object of type {type(obj)!r}")


def _print_json(obj: dict) -> None:
    sys.stdout.write(_emit(obj) + "\n")


# ==== input loading ========================================================


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _load_measure(path: str) -> DiscreteMeasure:
    return measure_from_json_dict(_load_json(path))


def _parse_cost(text: str) -> ConvexCost:
    """Parse a cost spec: "abs", "pow:<exponent>", or "pwl:<file.json>"."""
    if text == "abs":
        return absolute_cost()
    if text.startswith("pow:"):
        try:
            exponent = float(text[len("pow:"):])
        except ValueError as exc:
            raise OutOfRange(f"bad power exponent in cost spec {text!r}") from exc
        return power_cost(exponent)
    if text.startswith("pwl:"):
        return pwl_cost(pwl_from_json_dict(_load_json(text[len("pwl:"):])))
    raise OutOfRange(
        f"unrecognized cost spec {text!r}; expected abs, pow:<p>, or pwl:<file>"
    )


def _parse_lift(spec: str, mu: DiscreteMeasure, eps: float):
    """Parse --lift: asc, desc, or a lift JSON file over mu."""
    if spec == "asc":
        return make_lift(mu, LiftKind.Ascending)
    if spec == "desc":
        return make_lift(mu, LiftKind.Descending)
    lift = lift_from_json_dict(_load_json(spec))
    if not measures_close(lift.flatten(), mu, mass_tol=max(eps, EPS)):
        raise MarginalMismatch(
            f"lift in {spec!r} does not flatten to the --mu measure"
        )
    return lift


# ==== subcommand handlers ==================================================


def _cmd_value(args: argparse.Namespace) -> dict:
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    cost = _parse_cost(args.cost)
    if cost.kind is CostKind.AbsoluteValue:
        value = wot_value(mu, nu, eps=args.eps)
    else:
        value = wot_value_general(mu, nu, cost, eps=args.eps)
    return {"value": value}


def _cmd_decompose(args: argparse.Namespace) -> dict:
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    return decompose(mu, nu, eps=args.eps).to_json_dict()


def _cmd_shadow(args: argparse.Namespace) -> dict:
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    return shadow(mu, nu, eps=args.eps).to_json_dict()


def _cmd_project(args: argparse.Namespace) -> dict:
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    d = decompose(mu, nu, eps=args.eps)
    tmap = optimal_map(mu, nu, grid_size=args.grid_size, eps=args.eps)
    projected = pushforward_map(tmap, mu)
    profile, ok = displacement_profile(
        tmap, d.x_minus, d.x_plus, tol=args.tol_grid
    )
    return {
        "projection": projected.to_json_dict(),
        "map": tmap.to_json_dict(),
        "displacement": {
            "samples": [{"x": x, "d": dv} for x, dv in profile],
            "ok": ok,
        },
    }


def _cmd_couple(args: argparse.Namespace) -> dict:
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    if args.kind == "pimin":
        pi = extremal_covariance(mu, nu, Sense.Min, eps=args.eps)
    elif args.kind == "pimax":
        pi = extremal_covariance(mu, nu, Sense.Max, eps=args.eps)
    else:
        lift = _parse_lift(args.lift, mu, args.eps)
        pi = shadow_coupling(lift, nu, eps=args.eps).flattened
    return pi.to_json_dict()


def _cmd_check(args: argparse.Namespace) -> dict:
    pi = coupling_from_json_dict(_load_json(args.coupling))
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    violation = pistar_violation(pi, mu, nu, eps=args.eps)
    diagnostics = {
        tag.value: check_monotonicity(pi, MonotonicityKind(tag), eps=args.eps)
        for tag in MonotonicityTag
    }
    return {
        "pistar": is_pistar_member(pi, mu, nu, eps=args.eps),
        "violation": violation,
        "monotonicity": diagnostics,
    }


def _cmd_oracle(args: argparse.Namespace) -> dict:
    mu = _load_measure(args.mu)
    nu = _load_measure(args.nu)
    if args.which == "value":
        lp_value, _ = wot_value_lp(mu, nu)
        closed = wot_value(mu, nu, eps=args.eps)
    elif args.which == "target":
        lp_value, _ = min_target_lp(mu, nu)
        closed = wot_value(mu, shadow(mu, nu, eps=args.eps), eps=args.eps)
    else:
        sense = Sense.Min if args.sense == "min" else Sense.Max
        cost = np.outer(mu.positions, nu.positions)
        lp_value, _ = constrained_ot_lp(mu, nu, cost, sense, eps=args.eps)
        pi = extremal_covariance(mu, nu, sense, eps=args.eps)
        closed = cost_integral(pi, np.outer(pi.source.positions, pi.target.positions))
    return {
        "which": args.which,
        "lp_value": lp_value,
        "closed_form": closed,
        "gap": abs(lp_value - closed),
    }


def _potential_rows(f: PwlFunction) -> list[tuple[float, float]]:
    """Breakpoint rows plus one guard point on each side for the rays."""
    if not f.breakpoints:
        ks = [-1.0, 0.0, 1.0]
    else:
        ks = [f.breakpoints[0] - 1.0, *f.breakpoints, f.breakpoints[-1] + 1.0]
    return [(k, evaluate(f, k)) for k in ks]


def _cmd_potentials(args: argparse.Namespace) -> dict:
    measure = _load_measure(args.measure)
    builder = {
        "put": put_potential,
        "call": call_potential,
        "u": u_potential,
    }[args.potential]
    rows = _potential_rows(builder(measure))
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write("k,value\n")
        for k, v in rows:
            handle.write(f"{_format_float(k)},{_format_float(v)}\n")
    return {"written": args.out, "potential": args.potential, "rows": len(rows)}


# ==== parser and dispatch ==================================================


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise _UsageError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument(
        "--eps", type=float, default=EPS, help="comparison tolerance (default 1e-9)"
    )
    common.add_argument(
        "--tol-grid",
        type=float,
        default=TOL_GRID,
        dest="tol_grid",
        help="grid-level tolerance (default 1e-6)",
    )

    parser = _Parser(prog="wotline", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name: str, handler, help_text: str) -> _Parser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = add("value", _cmd_value, "weak transport value between two measures")
    p.add_argument("--mu", required=True, help="source measure JSON")
    p.add_argument("--nu", required=True, help="target measure JSON")
    p.add_argument(
        "--cost", default="abs", help="displacement cost: abs, pow:<p>, pwl:<file>"
    )

    p = add("decompose", _cmd_decompose, "cut points and the six-block split")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)

    p = add("shadow", _cmd_shadow, "shadow of mu inside a dominating nu")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)

    p = add("project", _cmd_project, "projection of mu and the optimal map")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument("--grid-size", type=int, default=64, dest="grid_size")

    p = add("couple", _cmd_couple, "an optimizer coupling of the chosen build")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument(
        "--kind", required=True, choices=["pimin", "pimax", "shadow"]
    )
    p.add_argument(
        "--lift",
        default="asc",
        help="slice order for --kind shadow: asc, desc, or a lift JSON file",
    )

    p = add("check", _cmd_check, "optimizer membership and monotonicity")
    p.add_argument("--coupling", required=True, help="coupling JSON")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)

    p = add("oracle", _cmd_oracle, "LP value against the closed form")
    p.add_argument("--mu", required=True)
    p.add_argument("--nu", required=True)
    p.add_argument(
        "--which", default="value", choices=["value", "target", "cov"]
    )
    p.add_argument("--sense", default="min", choices=["min", "max"])

    p = add("potentials", _cmd_potentials, "CSV export of a potential function")
    p.add_argument("--measure", required=True, help="measure JSON")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument(
        "--potential", default="put", choices=["put", "call", "u"]
    )

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse argv, execute one subcommand, print one JSON object."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        payload = args.handler(args)
    except _UsageError as exc:
        _print_json({"error": "Usage", "detail": str(exc)})
        return 1
    except json.JSONDecodeError as exc:
        _print_json({"error": "BadJson", "detail": str(exc)})
        return 1
    except OSError as exc:
        _print_json({"error": "IOError", "detail": str(exc)})
        return 1
    except ValidationError as exc:
        _print_json({"error": exc.code, "detail": str(exc)})
        return 1
    except (InternalInconsistency, NumericalFailure) as exc:
        _print_json({"error": exc.code, "detail": str(exc)})
        return 2
    _print_json(payload)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
