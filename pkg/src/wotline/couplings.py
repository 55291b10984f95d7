"""Coupling constructions and support-monotonicity diagnostics.

The optimizers of the weak transport problem assemble from three blocks:
a submartingale coupling on the left tail, a martingale coupling in the
core, and a supermartingale coupling on the right tail.  All three are
built here through shadow lifts; the ascending lift gives the increasing
flavor, the descending lift the decreasing flavor.  Combining a decreasing
left tail with an increasing right tail minimizes the covariance of the
coupling over the whole optimizer set, and the mirrored choice maximizes
it.

The diagnostics at the bottom scan a coupling's support for the first-
and second-order monotonicity patterns that characterize the canonical
increasing/decreasing couplings: second-order monotonicity forbids later
(or earlier) rows from landing strictly between two targets of a split
row, and first-order monotonicity forces the target order of two rows
whose designated endpoint moves strictly up or strictly down in mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._coupling import (
    Coupling,
    Sense,
    barycenters,
    cost_integral,
    coupling_from_json_dict,
    identity_coupling,
    make_coupling,
    merge_couplings,
)
from .errors import InternalInconsistency, MarginalMismatch, OrderViolation
from .measure_core import DiscreteMeasure, OrderRelation, check_order
from .shadow import LiftKind, make_lift, shadow_coupling
from .tolerances import EPS
from .wot_solver import decompose, is_pistar_member

__all__ = [
    "Coupling",
    "Sense",
    "Flavor",
    "MonotonicityTag",
    "MonotonicityKind",
    "barycenters",
    "cost_integral",
    "make_coupling",
    "merge_couplings",
    "identity_coupling",
    "coupling_from_json_dict",
    "martingale_coupling",
    "submartingale_coupling",
    "supermartingale_coupling",
    "assemble_pistar",
    "extremal_covariance",
    "derive_martingale_points",
    "check_monotonicity",
]


class Flavor(Enum):
    """Which canonical coupling a tail construction follows."""

    Increasing = "increasing"
    Decreasing = "decreasing"


_FLAVOR_TO_LIFT = {
    Flavor.Increasing: LiftKind.Ascending,
    Flavor.Decreasing: LiftKind.Descending,
}


# ==== block constructions ==================================================


def martingale_coupling(
    eta: DiscreteMeasure, chi: DiscreteMeasure, eps: float = EPS
) -> Coupling:
    """A coupling whose every row keeps its conditional mean at the source.

    Built as the ascending shadow-lift coupling, which in the martingale
    case reproduces left-curtain behavior.

    Raises
    ------
    OrderViolation
        If eta is not convex-dominated by chi.
    """
    if not check_order(eta, chi, OrderRelation.Convex, eps=eps):
        raise OrderViolation("source is not convex-dominated by the target")
    return shadow_coupling(make_lift(eta, LiftKind.Ascending), chi, eps=eps).flattened


def submartingale_coupling(
    eta: DiscreteMeasure,
    chi: DiscreteMeasure,
    flavor: Flavor,
    eps: float = EPS,
) -> Coupling:
    """A coupling whose rows move up in conditional mean.

    The Increasing flavor folds shadows over the ascending lift (quantile
    behavior on strictly submartingale points), the Decreasing flavor over
    the descending lift (antitone behavior).

    Raises
    ------
    OrderViolation
        If eta is not increasing-convex-dominated by chi.
    """
    if not check_order(eta, chi, OrderRelation.ConvexIncreasing, eps=eps):
        raise OrderViolation(
            "source is not increasing-convex-dominated by the target"
        )
    lift = make_lift(eta, _FLAVOR_TO_LIFT[flavor])
    return shadow_coupling(lift, chi, eps=eps).flattened


def supermartingale_coupling(
    eta: DiscreteMeasure,
    chi: DiscreteMeasure,
    flavor: Flavor,
    eps: float = EPS,
) -> Coupling:
    """A coupling whose rows move down in conditional mean.

    The Increasing flavor folds shadows over the ascending lift (antitone
    behavior on strictly supermartingale points), the Decreasing flavor
    over the descending lift (quantile behavior).

    Raises
    ------
    OrderViolation
        If eta is not decreasing-convex-dominated by chi.
    """
    if not check_order(eta, chi, OrderRelation.ConvexDecreasing, eps=eps):
        raise OrderViolation(
            "source is not decreasing-convex-dominated by the target"
        )
    lift = make_lift(eta, _FLAVOR_TO_LIFT[flavor])
    return shadow_coupling(lift, chi, eps=eps).flattened


def assemble_pistar(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    tail_flavor_left: Flavor = Flavor.Increasing,
    tail_flavor_right: Flavor = Flavor.Increasing,
    eps: float = EPS,
) -> Coupling:
    """An optimizer of the weak transport problem, one block at a time.

    Decomposes (mu, nu), couples the left tail with a submartingale
    coupling of the requested flavor, the core with a martingale coupling,
    the right tail with a supermartingale coupling, and merges.  The
    result is verified to be an optimizer.
    """
    d = decompose(mu, nu, eps=eps)
    left = submartingale_coupling(d.eta_minus, d.chi_minus, tail_flavor_left, eps=eps)
    core = martingale_coupling(d.eta_zero, d.chi_zero, eps=eps)
    right = supermartingale_coupling(
        d.eta_plus, d.chi_plus, tail_flavor_right, eps=eps
    )
    combined = merge_couplings([left, core, right], tol=max(eps, 1e-9))
    if not is_pistar_member(combined, mu, nu, eps=max(eps, 1e-9)):
        raise InternalInconsistency(
            "assembled block coupling fails the optimizer membership check"
        )
    return combined


def extremal_covariance(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    sense: Sense,
    eps: float = EPS,
) -> Coupling:
    """The optimizer with the smallest or largest covariance sum x*y.

    Min pairs the decreasing left tail with the increasing right tail
    (both antitone on their strict points); Max mirrors the choice.  The
    martingale core contributes the same covariance either way.
    """
    if sense is Sense.Min:
        return assemble_pistar(mu, nu, Flavor.Decreasing, Flavor.Increasing, eps=eps)
    return assemble_pistar(mu, nu, Flavor.Increasing, Flavor.Decreasing, eps=eps)


# ==== monotonicity diagnostics =============================================


class MonotonicityTag(Enum):
    FirstLeft = "first_left"
    FirstRight = "first_right"
    SecondLeft = "second_left"
    SecondRight = "second_right"


@dataclass(frozen=True)
class MonotonicityKind:
    """A support-monotonicity pattern plus the martingale point set.

    martingale_points = None means the canonical set: all source positions
    whose row barycenter equals the position within tolerance.
    """

    tag: MonotonicityTag
    martingale_points: frozenset[float] | None = None


def derive_martingale_points(pi: Coupling, eps: float = EPS) -> frozenset[float]:
    """Source positions whose conditional mean stays put within eps."""
    return frozenset(x for x, bary in barycenters(pi) if abs(bary - x) <= eps)


def _validate_coupling(pi: Coupling, eps: float) -> None:
    mat = pi.matrix()
    n, m = mat.shape
    row_gap = (
        float(np.max(np.abs(mat.sum(axis=1) - pi.source.masses))) if n else 0.0
    )
    col_gap = (
        float(np.max(np.abs(mat.sum(axis=0) - pi.target.masses))) if m else 0.0
    )
    if max(row_gap, col_gap) > max(eps, 1e-9):
        raise MarginalMismatch(
            f"coupling marginals drift by {max(row_gap, col_gap)}"
        )


def check_monotonicity(
    pi: Coupling, kind: MonotonicityKind, eps: float = EPS
) -> bool:
    """Whether the coupling's support shows the requested pattern.

    Second-order scans look at all split rows: SecondLeft fails when a row
    strictly to the right of a split row targets a point strictly between
    two of the split row's targets, SecondRight when such a row lies
    strictly to the left.  First-order scans look at all row pairs
    x1 < x2 with targets y1, y2: FirstLeft requires y1 <= y2 whenever the
    pair's designated endpoint leaves the martingale set strictly downward
    at x2 (supermartingale reading) or strictly upward at x1
    (submartingale reading); FirstRight requires y2 <= y1 with the
    endpoints swapped.

    Raises
    ------
    MarginalMismatch
        If the coupling's stored marginals do not match its entries.
    """
    _validate_coupling(pi, eps)
    xs = pi.source.positions
    ys = pi.target.positions
    support = [(int(i), int(j)) for i, j, _ in pi.entries]
    tag = kind.tag

    if tag in (MonotonicityTag.SecondLeft, MonotonicityTag.SecondRight):
        by_row: dict[int, list[float]] = {}
        for i, j in support:
            by_row.setdefault(i, []).append(float(ys[j]))
        for i, targets in by_row.items():
            if len(targets) < 2:
                continue
            # y lies strictly inside some target pair iff it lies strictly
            # between the row's extreme targets.
            lo, hi = min(targets), max(targets)
            for i2, j2 in support:
                if i2 == i:
                    continue
                later = xs[i2] > xs[i]
                if (tag is MonotonicityTag.SecondLeft) != later:
                    continue
                y = float(ys[j2])
                if lo + eps < y < hi - eps:
                    return False
        return True

    bary = {x: b for x, b in barycenters(pi)}
    if kind.martingale_points is None:
        in_m = {x: abs(bary[x] - x) <= eps for x in bary}
    else:
        points = kind.martingale_points
        in_m = {
            x: any(abs(x - p) <= eps for p in points) for x in bary
        }

    def strict_super(x: float) -> bool:
        return not in_m[x] and bary[x] < x - eps

    def strict_sub(x: float) -> bool:
        return not in_m[x] and bary[x] > x + eps

    for i1, j1 in support:
        for i2, j2 in support:
            x1, x2 = float(xs[i1]), float(xs[i2])
            if not x1 < x2:
                continue
            y1, y2 = float(ys[j1]), float(ys[j2])
            if tag is MonotonicityTag.FirstLeft:
                if (strict_super(x2) or strict_sub(x1)) and y1 > y2 + eps:
                    return False
            else:
                if (strict_super(x1) or strict_sub(x2)) and y2 > y1 + eps:
                    return False
    return True
