"""Self-contained linear programming oracle for cross-checking values.

The solver is a dense two-phase simplex with Bland's anti-cycling rule.
It is deliberately independent of the closed-form machinery (and of any
external solver) so that agreement between the two routes is meaningful
evidence rather than a shared-code tautology.  Problem sizes here are tiny
(tens of variables), so clarity and determinism win over speed.

Three ready-made formulations cover the needs of the test suite and CLI:
the weak transport value as an LP in (plan, row displacement) variables,
optimal transport restricted to the optimizer polytope of the weak
problem, and the minimal-value sub-target selection for unequal masses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._coupling import Coupling, Sense, make_coupling
from .errors import (
    DimensionMismatch,
    InternalInconsistency,
    LpInfeasible,
    MassMismatch,
    MassOrder,
    NumericalFailure,
)
from .measure_core import DiscreteMeasure, make_measure
from .tolerances import EPS, EPS_MASS
from .wot_solver import compute_cutpoints, region_of

__all__ = [
    "LinearProgram",
    "LpStatus",
    "LpSolution",
    "solve",
    "verify_solution",
    "wot_value_lp",
    "constrained_ot_lp",
    "min_target_lp",
]

# Tableau entries below this magnitude are treated as exact zeros.
_PIVOT_TOL = 1e-11
# Reduced costs above -_COST_TOL count as optimal.
_COST_TOL = 1e-9
# Post-solve feasibility must hold to this absolute tolerance.
_FEAS_TOL = 1e-9
# Coupling entries below this are dropped when reading off a plan.
_ENTRY_TOL = 1e-12

_SENSES = ("<=", ">=", "=")


class LpStatus(Enum):
    Optimal = "optimal"
    Infeasible = "infeasible"
    Unbounded = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """min c.x  subject to  A x (sense_i) b  per row,  x >= 0."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        m, n = A.shape
        if c.shape != (n,) or b.shape != (m,) or len(self.senses) != m:
            raise DimensionMismatch(
                f"inconsistent LP shapes: A {A.shape}, c {c.shape}, "
                f"b {b.shape}, {len(self.senses)} senses"
            )
        for s in self.senses:
            if s not in _SENSES:
                raise DimensionMismatch(f"unknown row sense {s!r}")


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    objective: float
    x: np.ndarray


def verify_solution(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest constraint violation of x, including nonnegativity."""
    x = np.asarray(x, dtype=float)
    worst = float(max(0.0, -np.min(x))) if x.size else 0.0
    ax = lp.A @ x if x.size else np.zeros(len(lp.b))
    for i, sense in enumerate(lp.senses):
        gap = ax[i] - lp.b[i]
        if sense == "=":
            worst = max(worst, abs(gap))
        elif sense == "<=":
            worst = max(worst, gap)
        else:
            worst = max(worst, -gap)
    return worst


# ==== two-phase simplex ====================================================


def _pivot(T: np.ndarray, b: np.ndarray, r: np.ndarray, pr: int, pc: int) -> None:
    """Gauss-Jordan pivot on (pr, pc), updating the reduced-cost row."""
    piv = T[pr, pc]
    T[pr] /= piv
    b[pr] /= piv
    col = T[:, pc].copy()
    col[pr] = 0.0
    T -= np.outer(col, T[pr])
    b -= col * b[pr]
    T[:, pc] = 0.0
    T[pr, pc] = 1.0
    factor = r[pc]
    if factor != 0.0:
        r -= factor * T[pr]
        r[pc] = 0.0


def _iterate(
    T: np.ndarray,
    b: np.ndarray,
    r: np.ndarray,
    basis: list[int],
    ncols: int,
    max_iter: int,
) -> str:
    """Run simplex iterations under Bland's rule.

    Returns "optimal" or "unbounded"; raises NumericalFailure on the
    iteration cap.
    """
    for _ in range(max_iter):
        entering = -1
        for j in range(ncols):
            if r[j] < -_COST_TOL:
                entering = j
                break
        if entering < 0:
            return "optimal"
        best_ratio = math.inf
        leaving = -1
        for i in range(T.shape[0]):
            if T[i, entering] > _PIVOT_TOL:
                ratio = b[i] / T[i, entering]
                if ratio < best_ratio - _PIVOT_TOL or (
                    ratio < best_ratio + _PIVOT_TOL
                    and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best_ratio = min(ratio, best_ratio)
                    leaving = i
        if leaving < 0:
            return "unbounded"
        _pivot(T, b, r, leaving, entering)
        basis[leaving] = entering
    raise NumericalFailure("simplex iteration cap reached")


def solve(lp: LinearProgram, max_iter: int = 50_000) -> LpSolution:
    """Solve the LP with a dense two-phase simplex under Bland's rule.

    Deterministic: identical inputs take identical pivot sequences.  The
    returned basic solution is re-verified against the original data;
    violation beyond 1e-9 raises NumericalFailure rather than returning a
    silently wrong certificate.
    """
    m, n = lp.A.shape
    A = lp.A.copy()
    b = lp.b.copy()
    senses = list(lp.senses)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] = -b[i]
            if senses[i] == "<=":
                senses[i] = ">="
            elif senses[i] == ">=":
                senses[i] = "<="

    slack_rows = [i for i, s in enumerate(senses) if s in ("<=", ">=")]
    art_rows = [i for i, s in enumerate(senses) if s in (">=", "=")]
    n_slack = len(slack_rows)
    n_art = len(art_rows)
    art_start = n + n_slack
    ncols = n + n_slack + n_art

    T = np.zeros((m, ncols))
    T[:, :n] = A
    basis = [-1] * m
    for k, i in enumerate(slack_rows):
        T[i, n + k] = 1.0 if senses[i] == "<=" else -1.0
        if senses[i] == "<=":
            basis[i] = n + k
    for k, i in enumerate(art_rows):
        T[i, art_start + k] = 1.0
        basis[i] = art_start + k

    # Phase 1: drive the artificial variables to zero.
    if n_art:
        r = np.zeros(ncols)
        r[art_start:] = 1.0
        for i in art_rows:
            r -= T[i]
        r[art_start:] = np.maximum(r[art_start:], 0.0)
        status = _iterate(T, b, r, basis, ncols, max_iter)
        if status == "unbounded":
            raise NumericalFailure("phase-1 subproblem reported unbounded")
        infeas = sum(b[i] for i in range(m) if basis[i] >= art_start)
        if infeas > _FEAS_TOL:
            return LpSolution(LpStatus.Infeasible, math.nan, np.full(n, math.nan))
        keep = []
        for i in range(m):
            if basis[i] >= art_start:
                pc = -1
                for j in range(art_start):
                    if abs(T[i, j]) > _PIVOT_TOL:
                        pc = j
                        break
                if pc >= 0:
                    _pivot(T, b, r, i, pc)
                    basis[i] = pc
                    keep.append(i)
                # Otherwise the row is redundant and is dropped.
            else:
                keep.append(i)
        T = T[keep][:, :art_start]
        b = b[keep]
        basis = [basis[i] for i in keep]
        ncols = art_start

    # Phase 2: optimize the real objective from the feasible basis.
    c_ext = np.zeros(ncols)
    c_ext[:n] = lp.c
    r = c_ext.copy()
    for i, bi in enumerate(basis):
        if c_ext[bi] != 0.0:
            r -= c_ext[bi] * T[i]
    for bi in basis:
        r[bi] = 0.0
    status = _iterate(T, b, r, basis, ncols, max_iter)
    if status == "unbounded":
        return LpSolution(LpStatus.Unbounded, -math.inf, np.full(n, math.nan))

    x_full = np.zeros(ncols)
    for i, bi in enumerate(basis):
        x_full[bi] = b[i]
    x = x_full[:n]
    violation = verify_solution(lp, x)
    scale = max(1.0, float(np.max(np.abs(lp.b))) if len(lp.b) else 1.0)
    if violation > _FEAS_TOL * scale:
        raise NumericalFailure(
            f"simplex result violates constraints by {violation}"
        )
    return LpSolution(LpStatus.Optimal, float(lp.c @ x), x)


# ==== weak transport value =================================================


def _plan_rows(
    mu: DiscreteMeasure, nu: DiscreteMeasure
) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Marginal equality rows over plan variables laid out as i*m + j."""
    n, m = len(mu.atoms), len(nu.atoms)
    nm = n * m
    A = np.zeros((n + m, nm))
    b = np.zeros(n + m)
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
        b[i] = mu.atoms[i][1]
    for j in range(m):
        A[n + j, j::m] = 1.0
        b[n + j] = nu.atoms[j][1]
    return A, ["="] * (n + m), b


def _plan_to_coupling(
    mu: DiscreteMeasure, nu: DiscreteMeasure, plan: np.ndarray
) -> Coupling:
    m = len(nu.atoms)
    entries = [
        (k // m, k % m, float(v))
        for k, v in enumerate(plan)
        if v > _ENTRY_TOL
    ]
    return make_coupling(mu, nu, entries, tol=1e-7)


def wot_value_lp(
    mu: DiscreteMeasure, nu: DiscreteMeasure
) -> tuple[float, Coupling]:
    """The weak transport value by linear programming.

    Variables are the plan entries plus one row-displacement variable t_i
    bounding |x_i mu_i - sum_j y_j pi_ij|; minimizing sum t_i linearizes
    the absolute value exactly.

    Raises
    ------
    MassMismatch
        If the marginals carry different total mass.
    """
    if abs(mu.mass - nu.mass) > EPS_MASS:
        raise MassMismatch(f"total masses differ: {mu.mass} vs {nu.mass}")
    n, m = len(mu.atoms), len(nu.atoms)
    if n == 0:
        return 0.0, make_coupling(mu, nu, [])
    nm = n * m
    ys = nu.positions
    A_marg, senses, b_marg = _plan_rows(mu, nu)
    A = np.zeros((n + m + 2 * n, nm + n))
    A[: n + m, :nm] = A_marg
    b = np.concatenate([b_marg, np.zeros(2 * n)])
    for i, (x, w) in enumerate(mu.atoms):
        # t_i - sum_j y_j pi_ij >= -x_i mu_i
        A[n + m + 2 * i, i * m : (i + 1) * m] = -ys
        A[n + m + 2 * i, nm + i] = 1.0
        b[n + m + 2 * i] = -x * w
        # t_i + sum_j y_j pi_ij >= +x_i mu_i
        A[n + m + 2 * i + 1, i * m : (i + 1) * m] = ys
        A[n + m + 2 * i + 1, nm + i] = 1.0
        b[n + m + 2 * i + 1] = x * w
    senses = senses + [">="] * (2 * n)
    c = np.concatenate([np.zeros(nm), np.ones(n)])
    sol = solve(LinearProgram(c, A, tuple(senses), b))
    if sol.status is LpStatus.Infeasible:
        raise LpInfeasible("weak transport LP infeasible for equal-mass inputs")
    if sol.status is LpStatus.Unbounded:
        raise InternalInconsistency("weak transport LP reported unbounded")
    return sol.objective, _plan_to_coupling(mu, nu, sol.x[:nm])


# ==== transport over the optimizer polytope ================================


def constrained_ot_lp(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    cost: np.ndarray,
    sense: Sense = Sense.Min,
    eps: float = EPS,
) -> tuple[float, Coupling]:
    """Optimize a linear cost over the optimizer polytope of (mu, nu).

    The polytope is encoded directly from the cut points: plan variables
    exist only for region-admissible pairs, and each source row carries a
    conditional-mean constraint (>= for the left block, = for the core,
    <= for the right block).

    Raises
    ------
    MassMismatch
        If the marginals carry different total mass.
    DimensionMismatch
        If the cost matrix does not match the supports.
    LpInfeasible
        If the polytope is empty, which signals corrupted inputs.
    """
    if abs(mu.mass - nu.mass) > EPS_MASS:
        raise MassMismatch(f"total masses differ: {mu.mass} vs {nu.mass}")
    n, m = len(mu.atoms), len(nu.atoms)
    cost = np.asarray(cost, dtype=float)
    if cost.shape != (n, m):
        raise DimensionMismatch(
            f"cost matrix shape {cost.shape} does not match supports {(n, m)}"
        )
    if n == 0:
        return 0.0, make_coupling(mu, nu, [])
    _, _, x_minus, x_plus = compute_cutpoints(mu, nu, eps=eps)
    ys = nu.positions
    regions = [region_of(x, x_minus, x_plus, eps=eps) for x, _ in mu.atoms]
    pairs: list[tuple[int, int]] = []
    for i in range(n):
        for j in range(m):
            y = ys[j]
            if regions[i] == "left":
                ok = y <= x_minus + eps
            elif regions[i] == "right":
                ok = y >= x_plus - eps
            else:
                ok = (not math.isfinite(x_minus) or y >= x_minus - eps) and (
                    not math.isfinite(x_plus) or y <= x_plus + eps
                )
            if ok:
                pairs.append((i, j))
    nv = len(pairs)
    A = np.zeros((n + m + n, nv))
    b = np.zeros(n + m + n)
    senses: list[str] = ["="] * (n + m)
    for k, (i, j) in enumerate(pairs):
        A[i, k] = 1.0
        A[n + j, k] = 1.0
        A[n + m + i, k] = ys[j]
    for i, (x, w) in enumerate(mu.atoms):
        b[i] = w
        b[n + m + i] = x * w
        senses.append(
            {"left": ">=", "core": "=", "right": "<="}[regions[i]]
        )
    for j in range(m):
        b[n + j] = nu.atoms[j][1]
    c = np.array([cost[i, j] for i, j in pairs])
    if sense is Sense.Max:
        c = -c
    sol = solve(LinearProgram(c, A, tuple(senses), b))
    if sol.status is LpStatus.Infeasible:
        raise LpInfeasible(
            "optimizer polytope is empty; inputs are inconsistent"
        )
    if sol.status is LpStatus.Unbounded:
        raise InternalInconsistency("bounded polytope reported unbounded")
    value = sol.objective if sense is Sense.Min else -sol.objective
    entries = [
        (pairs[k][0], pairs[k][1], float(v))
        for k, v in enumerate(sol.x)
        if v > _ENTRY_TOL
    ]
    return value, make_coupling(mu, nu, entries, tol=1e-7)


# ==== minimal sub-target ===================================================


def min_target_lp(
    mu: DiscreteMeasure, nu: DiscreteMeasure
) -> tuple[float, DiscreteMeasure]:
    """Minimize the weak transport value over sub-targets theta <= nu.

    Plan columns may undershoot nu (column sums <= nu_j); rows must carry
    exactly mu.  Returns the optimal value and the attaining sub-target
    theta* (the column sums).

    Raises
    ------
    MassOrder
        If mu carries more mass than nu.
    """
    if mu.mass > nu.mass + EPS_MASS:
        raise MassOrder(
            f"source mass {mu.mass} exceeds target mass {nu.mass}"
        )
    n, m = len(mu.atoms), len(nu.atoms)
    if n == 0:
        return 0.0, make_measure([])
    nm = n * m
    ys = nu.positions
    A = np.zeros((n + m + 2 * n, nm + n))
    b = np.zeros(n + m + 2 * n)
    senses: list[str] = []
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
        b[i] = mu.atoms[i][1]
        senses.append("=")
    for j in range(m):
        A[n + j, j:nm:m] = 1.0
        b[n + j] = nu.atoms[j][1]
        senses.append("<=")
    for i, (x, w) in enumerate(mu.atoms):
        A[n + m + 2 * i, i * m : (i + 1) * m] = -ys
        A[n + m + 2 * i, nm + i] = 1.0
        b[n + m + 2 * i] = -x * w
        A[n + m + 2 * i + 1, i * m : (i + 1) * m] = ys
        A[n + m + 2 * i + 1, nm + i] = 1.0
        b[n + m + 2 * i + 1] = x * w
        senses.extend([">=", ">="])
    c = np.concatenate([np.zeros(nm), np.ones(n)])
    sol = solve(LinearProgram(c, A, tuple(senses), b))
    if sol.status is not LpStatus.Optimal:
        raise InternalInconsistency(
            f"sub-target LP ended with status {sol.status.value}"
        )
    plan = sol.x[:nm].reshape(n, m)
    cols = plan.sum(axis=0)
    theta = make_measure(
        [(float(ys[j]), float(cols[j])) for j in range(m) if cols[j] > EPS_MASS]
    )
    return sol.objective, theta
