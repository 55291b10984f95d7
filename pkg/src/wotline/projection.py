"""Wasserstein projection onto a convex-order cone and the optimal map.

The weak transport value with absolute-value penalty equals the W1
distance from mu to the set {mu_hat : mu_hat <= nu in convex order}, and
the projection mu* is the image of mu under a monotone, 1-Lipschitz map
T*.  That map is one and the same for every convex penalty, so it is
found here by minimizing the strictly convex squared displacement over
map values at the source atoms, subject to monotonicity, the Lipschitz
increments, mean equality with nu, and the put-potential constraints that
encode convex domination (imposed at nu's kinks, which suffices: a convex
function below an affine one at both segment endpoints stays below it on
the segment).

The solver result is polished by re-solving the active equality system
exactly and verified before use; the returned map is exact to machine
precision on well-posed instances.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import cvxpy as cp
import numpy as np

from .errors import (
    InternalInconsistency,
    LpInfeasible,
    MassMismatch,
    OutOfRange,
)
from .measure_core import DiscreteMeasure, make_measure, quantile
from .pwl_convex import PwlFunction, evaluate, put_potential
from .tolerances import EPS, EPS_MASS, TOL_GRID
from .wot_solver import decompose

__all__ = [
    "MonotoneMap",
    "CostKind",
    "ConvexCost",
    "absolute_cost",
    "power_cost",
    "pwl_cost",
    "evaluate_cost",
    "project_convex_order",
    "optimal_map",
    "evaluate_map",
    "pushforward_map",
    "displacement_profile",
    "map_from_json_dict",
]

# Constraint-activity detection threshold for the polish step.
_ACTIVE_TOL = 1e-6
# Accept a polished solution only if it stays feasible this tightly.
_POLISH_TOL = 1e-9


# ==== map and cost types ===================================================


@dataclass(frozen=True)
class MonotoneMap:
    """A non-decreasing, 1-Lipschitz map sampled at source atoms.

    Between samples the map interpolates linearly; outside it extends as a
    constant.  Both defining properties are validated on construction,
    with an eps of slack on the Lipschitz side.
    """

    samples: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = self.samples
        for (x1, t1), (x2, t2) in zip(pts, pts[1:]):
            if not x2 > x1:
                raise OutOfRange(
                    f"map sample positions not increasing: {x1} then {x2}"
                )
            if t2 < t1:
                raise OutOfRange(
                    f"map values decrease: t({x1})={t1}, t({x2})={t2}"
                )
            if (t2 - t1) - (x2 - x1) > EPS:
                raise OutOfRange(
                    f"map expands the gap [{x1}, {x2}] beyond 1-Lipschitz"
                )

    def to_json_dict(self) -> dict:
        return {"samples": [{"x": x, "t": t} for x, t in self.samples]}


def evaluate_map(tmap: MonotoneMap, x: float) -> float:
    """Value at x: linear between samples, constant outside."""
    pts = tmap.samples
    if not pts:
        return x
    xs = [p for p, _ in pts]
    ts = [t for _, t in pts]
    if x <= xs[0]:
        return ts[0]
    if x >= xs[-1]:
        return ts[-1]
    return float(np.interp(x, xs, ts))


def pushforward_map(tmap: MonotoneMap, mu: DiscreteMeasure) -> DiscreteMeasure:
    """The image measure of mu under the map."""
    return make_measure([(evaluate_map(tmap, x), w) for x, w in mu.atoms])


class CostKind(Enum):
    AbsoluteValue = "abs"
    Power = "pow"
    PiecewiseLinearConvex = "pwl"


@dataclass(frozen=True)
class ConvexCost:
    """A convex displacement penalty h with h(0) = 0 and h >= 0."""

    kind: CostKind
    exponent: float | None = None
    function: PwlFunction | None = None


def absolute_cost() -> ConvexCost:
    """h(v) = |v|."""
    return ConvexCost(CostKind.AbsoluteValue)


def power_cost(exponent: float) -> ConvexCost:
    """h(v) = |v| ** exponent, convex for exponent >= 1.

    Raises
    ------
    OutOfRange
        If the exponent is below 1 or not finite.
    """
    if not math.isfinite(exponent) or exponent < 1.0:
        raise OutOfRange(f"power cost needs exponent >= 1, got {exponent}")
    return ConvexCost(CostKind.Power, exponent=exponent)


def pwl_cost(f: PwlFunction) -> ConvexCost:
    """A piecewise-linear convex penalty.

    Raises
    ------
    OutOfRange
        If f is not convex, f(0) differs from 0, or f dips below 0.
    """
    if not f.is_convex():
        raise OutOfRange("piecewise-linear cost is not convex")
    if abs(evaluate(f, 0.0)) > EPS:
        raise OutOfRange(f"cost at 0 is {evaluate(f, 0.0)}, expected 0")
    if f.slope_left > EPS or f.slope_right < -EPS:
        raise OutOfRange("cost decreases along a ray and cannot stay >= 0")
    if f.breakpoints and min(f.values) < -EPS:
        raise OutOfRange("cost takes negative values")
    return ConvexCost(CostKind.PiecewiseLinearConvex, function=f)


def evaluate_cost(cost: ConvexCost, v: float) -> float:
    """h(v)."""
    if cost.kind is CostKind.AbsoluteValue:
        return abs(v)
    if cost.kind is CostKind.Power:
        return abs(v) ** cost.exponent
    return evaluate(cost.function, v)


# ==== projection ===========================================================


def _put_value(nu: DiscreteMeasure, k: float) -> float:
    return float(sum(w * max(0.0, k - x) for x, w in nu.atoms))


def _solve_map_qp(
    xs: np.ndarray, ws: np.ndarray, nu: DiscreteMeasure
) -> np.ndarray:
    """Map values minimizing squared displacement under convex domination."""
    n = len(xs)
    kinks = nu.positions
    put_rhs = np.array([_put_value(nu, k) for k in kinks])
    t = cp.Variable(n)
    constraints = [ws @ t == nu.mean]
    if n >= 2:
        steps = cp.diff(t)
        constraints.append(steps >= 0)
        constraints.append(steps <= np.diff(xs))
    for k, rhs in zip(kinks, put_rhs):
        constraints.append(ws @ cp.pos(k - t) <= rhs)
    problem = cp.Problem(
        cp.Minimize(cp.sum(cp.multiply(ws, cp.square(t - xs)))), constraints
    )
    # Default interior-point tolerances leave put-constraint violations
    # near 1e-8, the same order as the downstream feasibility check, so
    # request full precision; these problems are tiny.  Accuracy warnings
    # against the tightened targets are superseded by the exact
    # feasibility verification below.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        problem.solve(
            solver=cp.CLARABEL,
            tol_feas=1e-12,
            tol_gap_abs=1e-12,
            tol_gap_rel=1e-12,
        )
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise LpInfeasible(
            f"projection subproblem ended with status {problem.status}"
        )
    raw = np.asarray(t.value, dtype=float).reshape(n)
    polished = _polish(raw, xs, ws, nu, kinks, put_rhs)
    best = polished if polished is not None else raw
    if n >= 2:
        # Snap residual solver noise so the increments are exactly within
        # [0, dx]; the perturbation is below the verification tolerance.
        steps = np.clip(np.diff(best), 0.0, np.diff(xs))
        best = np.concatenate(([best[0]], best[0] + np.cumsum(steps)))
    return best


def _polish(
    raw: np.ndarray,
    xs: np.ndarray,
    ws: np.ndarray,
    nu: DiscreteMeasure,
    kinks: np.ndarray,
    put_rhs: np.ndarray,
) -> np.ndarray | None:
    """Re-solve the active equality system exactly; None if it fails."""
    n = len(xs)
    rows: list[np.ndarray] = []
    rhs: list[float] = []

    mean_row = ws.astype(float)
    rows.append(mean_row)
    rhs.append(nu.mean)
    dx = np.diff(xs)
    for i in range(n - 1):
        step = raw[i + 1] - raw[i]
        if step <= _ACTIVE_TOL:
            row = np.zeros(n)
            row[i], row[i + 1] = -1.0, 1.0
            rows.append(row)
            rhs.append(0.0)
        elif dx[i] - step <= _ACTIVE_TOL:
            row = np.zeros(n)
            row[i], row[i + 1] = -1.0, 1.0
            rows.append(row)
            rhs.append(float(dx[i]))
    for k, bound in zip(kinks, put_rhs):
        slack = bound - float(ws @ np.maximum(0.0, k - raw))
        if abs(slack) <= _ACTIVE_TOL:
            below = raw < k - 10 * _ACTIVE_TOL
            if not np.any(below):
                continue
            row = np.where(below, -ws, 0.0)
            rows.append(row)
            rhs.append(float(bound - k * ws[below].sum()))
    A = np.vstack(rows)
    b = np.asarray(rhs)
    # KKT system of min sum w (t - x)^2 subject to A t = b.
    m = len(rows)
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = np.diag(2.0 * ws)
    kkt[:n, n:] = A.T
    kkt[n:, :n] = A
    target = np.concatenate([2.0 * ws * xs, b])
    solution, *_ = np.linalg.lstsq(kkt, target, rcond=None)
    t = solution[:n]
    if not np.all(np.isfinite(t)):
        return None
    if n >= 2:
        steps = np.diff(t)
        if np.min(steps) < -_POLISH_TOL or np.max(steps - dx) > _POLISH_TOL:
            return None
    if abs(float(ws @ t) - nu.mean) > _POLISH_TOL:
        return None
    for k, bound in zip(kinks, put_rhs):
        if float(ws @ np.maximum(0.0, k - t)) > bound + _POLISH_TOL:
            return None
    raw_obj = float(ws @ (raw - xs) ** 2)
    new_obj = float(ws @ (t - xs) ** 2)
    if new_obj > raw_obj + _POLISH_TOL:
        return None
    return t


def project_convex_order(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    grid_size: int = 64,
    eps: float = EPS,
) -> DiscreteMeasure:
    """The W1-closest measure to mu among those convex-dominated by nu.

    The projection is the image of mu under a monotone 1-Lipschitz map, so
    the map values at mu's atoms are the variables of a small quadratic
    program; the squared objective selects the same canonical map as every
    other convex penalty and makes the optimum unique.  Feasibility of the
    result is re-verified on a grid of grid_size points spanning nu's
    support plus both supports' atoms.

    Raises
    ------
    MassMismatch
        If the masses differ.
    OutOfRange
        If grid_size is smaller than the combined support size.
    LpInfeasible
        If the solver fails, which cannot happen for valid inputs.
    """
    if abs(mu.mass - nu.mass) > EPS_MASS:
        raise MassMismatch(f"total masses differ: {mu.mass} vs {nu.mass}")
    if grid_size < len(mu.atoms) + len(nu.atoms):
        raise OutOfRange(
            f"grid_size {grid_size} below combined support size "
            f"{len(mu.atoms) + len(nu.atoms)}"
        )
    if mu.is_zero:
        return make_measure([])
    xs = mu.positions.astype(float)
    ws = mu.masses.astype(float)
    t = _solve_map_qp(xs, ws, nu)
    projected = make_measure([(float(ti), float(wi)) for ti, wi in zip(t, ws)])
    _verify_on_grid(projected, nu, grid_size, eps)
    return projected


def _verify_on_grid(
    projected: DiscreteMeasure, nu: DiscreteMeasure, grid_size: int, eps: float
) -> None:
    lo = float(nu.positions[0])
    hi = float(nu.positions[-1])
    grid = np.unique(
        np.concatenate(
            [
                np.linspace(lo, hi, max(grid_size, 2)),
                nu.positions,
                projected.positions,
            ]
        )
    )
    p_proj = put_potential(projected)
    p_nu = put_potential(nu)
    worst = max(
        evaluate(p_proj, float(k)) - evaluate(p_nu, float(k)) for k in grid
    )
    if worst > max(eps, 1e-8):
        raise InternalInconsistency(
            f"projection violates convex domination by {worst} on the grid"
        )
    if abs(projected.mean - nu.mean) > max(eps, 1e-8):
        raise InternalInconsistency(
            f"projection mean {projected.mean} differs from target {nu.mean}"
        )


# ==== the optimal map ======================================================


def _tail_map_values(
    eta: DiscreteMeasure, proj: DiscreteMeasure
) -> list[tuple[float, float]]:
    """Map values at eta's atoms via quantile composition with proj.

    Each atom occupies a block of mass in eta's quantile scale; reading
    proj's quantile at the block midpoint recovers the (monotone) map that
    pushes eta to proj, exactly, because proj is such an image measure.
    """
    out = []
    acc = 0.0
    for x, w in eta.atoms:
        out.append((x, quantile(proj, acc + 0.5 * w)))
        acc += w
    return out


def optimal_map(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    grid_size: int = 64,
    eps: float = EPS,
) -> MonotoneMap:
    """The admissible map T* realizing the weak transport value.

    Identity inside [x_minus, x_plus]; on each tail, the projection of the
    tail source onto its block target composed back through quantiles.
    The displacement T*(x) - x is positive left of x_minus, zero on the
    core, negative right of x_plus, and non-increasing overall.  (The core
    block is a martingale block, so identity is optimal there; each tail
    contributes exactly its block mean gap.)

    Raises
    ------
    MassMismatch
        If the masses differ.
    """
    d = decompose(mu, nu, eps=eps)
    samples: list[tuple[float, float]] = []
    if not d.eta_minus.is_zero:
        proj = project_convex_order(d.eta_minus, d.chi_minus, grid_size, eps=eps)
        # The left-tail map must satisfy x <= t <= x_minus; clip off the
        # sub-eps solver noise so the stored map is exactly admissible.
        samples.extend(
            (x, min(max(t, x), d.x_minus))
            for x, t in _tail_map_values(d.eta_minus, proj)
        )
    samples.extend((x, x) for x, _ in d.eta_zero.atoms)
    if not d.eta_plus.is_zero:
        proj = project_convex_order(d.eta_plus, d.chi_plus, grid_size, eps=eps)
        samples.extend(
            (x, min(max(t, d.x_plus), x))
            for x, t in _tail_map_values(d.eta_plus, proj)
        )
    return MonotoneMap(tuple(samples))


def displacement_profile(
    tmap: MonotoneMap,
    x_minus: float | None = None,
    x_plus: float | None = None,
    tol: float = TOL_GRID,
) -> tuple[list[tuple[float, float]], bool]:
    """Displacement samples (x, T(x) - x) plus a shape verdict.

    The verdict is True when the displacement is non-increasing within
    tol.  When either cut point is given, the sign pattern is checked as
    well: positive left of x_minus, zero on [x_minus, x_plus], negative
    right of x_plus, each within tol (a missing cut point leaves its tail
    region empty).
    """
    profile = [(x, t - x) for x, t in tmap.samples]
    ok = True
    for (_, d1), (_, d2) in zip(profile, profile[1:]):
        if d2 > d1 + tol:
            ok = False
    if x_minus is None and x_plus is None:
        return profile, ok
    lo = -math.inf if x_minus is None else x_minus
    hi = math.inf if x_plus is None else x_plus
    for x, dv in profile:
        if x < lo - tol:
            if dv < -tol:
                ok = False
        elif x > hi + tol:
            if dv > tol:
                ok = False
        elif abs(dv) > tol:
            ok = False
    return profile, ok


# ==== serialization ========================================================


def map_from_json_dict(data: dict) -> MonotoneMap:
    """Parse the {"samples": [{"x": .., "t": ..}]} schema."""
    try:
        samples = tuple(
            (float(s["x"]), float(s["t"])) for s in data["samples"]
        )
    except (KeyError, TypeError) as exc:
        raise OutOfRange(f"malformed map JSON: {exc}") from exc
    return MonotoneMap(samples)
