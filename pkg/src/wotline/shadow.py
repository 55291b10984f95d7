"""Shadow measures, lifts, and the couplings they induce.

Given a source mu and a larger target nu (mass(mu) <= mass(nu)), the
shadow of mu in nu is the sub-measure of nu that mu reaches at minimal
weak transport cost; its put potential is

    P_shadow = P_nu - hull(P_nu - P_mu) - p,

where hull is the largest convex minorant and p the put-gap constant.
Shadows compose: the shadow of a sum can be taken one piece at a time,
subtracting each piece's shadow from the target before the next.  Folding
that recursion over an ordered parametrization of mu's atoms (a lift)
produces a coupling whose every prefix is itself a shadow, and whose total
is an optimizer of the weak transport problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ._coupling import Coupling, make_coupling
from .errors import (
    BadOrder,
    InternalInconsistency,
    MassOrder,
    MassMismatch,
    OutOfRange,
)
from .measure_core import (
    DiscreteMeasure,
    OrderRelation,
    add_measures,
    check_order,
    make_measure,
    measure_from_json_dict,
    measures_close,
    restrict,
    subtract_measure,
)
from .pwl_convex import (
    add_constant,
    call_potential,
    convex_hull,
    put_potential,
    second_derivative_measure,
    subtract,
    sup_gap,
)
from .tolerances import EPS, EPS_MASS, EPS_POS
from .wot_solver import compute_constants, decompose, wot_value

__all__ = [
    "LiftKind",
    "Lift",
    "LiftedCoupling",
    "MIN_TARGET_TOL",
    "shadow",
    "target_stats",
    "shadow_residual_check",
    "make_lift",
    "shadow_coupling",
    "region_decomposition_check",
    "min_target_check",
    "lift_from_json_dict",
]

# Agreement tolerance between the shadow value and the LP minimum.
MIN_TARGET_TOL = 1e-7


def _put_gap_sup(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """p = sup (P_mu - P_nu), clamped at zero; masses may differ."""
    if mu.is_zero and nu.is_zero:
        return 0.0
    value, _ = sup_gap(put_potential(mu), put_potential(nu))
    return max(0.0, value)


def _call_gap_sup(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """c = sup (C_mu - C_nu), clamped at zero; masses may differ."""
    if mu.is_zero and nu.is_zero:
        return 0.0
    value, _ = sup_gap(call_potential(mu), call_potential(nu))
    return max(0.0, value)


# ==== the shadow measure ===================================================


def shadow(mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = EPS) -> DiscreteMeasure:
    """The sub-measure of nu closest to mu in weak transport cost.

    Computed exactly through the potential identity
    P_shadow = P_nu - hull(P_nu - P_mu) - p.  The result is setwise
    dominated by nu, carries mass(mu), and has mean(mu) + p - c.

    Raises
    ------
    MassOrder
        If mu carries more mass than nu.
    """
    if mu.mass > nu.mass + EPS_MASS:
        raise MassOrder(
            f"source mass {mu.mass} exceeds target mass {nu.mass}"
        )
    if mu.is_zero:
        return make_measure([])
    p = _put_gap_sup(mu, nu)
    c = _call_gap_sup(mu, nu)
    hull = convex_hull(subtract(put_potential(nu), put_potential(mu)))
    potential = add_constant(subtract(put_potential(nu), hull), -p)
    result = second_derivative_measure(
        potential, mu.mass, mu.mean + p - c, eps=max(eps, 1e-9)
    )
    if not check_order(result, nu, OrderRelation.Setwise, eps=max(eps, 1e-9)):
        raise InternalInconsistency(
            "shadow extraction produced mass outside the target"
        )
    return result


def target_stats(
    theta: DiscreteMeasure, mu: DiscreteMeasure, eps: float = EPS
) -> tuple[float, float]:
    """The put/call gap constants (p_theta, c_theta) of a reachable target.

    Identical to the constants of the pair (mu, theta); the mean identity
    mean(theta) = mean(mu) + p_theta - c_theta is verified internally.

    Raises
    ------
    MassMismatch
        If theta and mu carry different total mass.
    """
    return compute_constants(mu, theta, eps=eps)


def shadow_residual_check(
    mu1: DiscreteMeasure,
    mu2: DiscreteMeasure,
    nu: DiscreteMeasure,
    eps: float = EPS,
) -> bool:
    """Whether shadows associate over a split of the source.

    True iff shadow(mu1 + mu2, nu) equals
    shadow(mu1, nu) + shadow(mu2, nu - shadow(mu1, nu)) atom-wise, and the
    put-gap constants are additive along the same split.

    Raises
    ------
    MassOrder
        If the combined source mass exceeds the target mass.
    """
    if mu1.mass + mu2.mass > nu.mass + EPS_MASS:
        raise MassOrder(
            f"combined source mass {mu1.mass + mu2.mass} exceeds "
            f"target mass {nu.mass}"
        )
    combined = add_measures(mu1, mu2)
    total = shadow(combined, nu, eps=eps)
    first = shadow(mu1, nu, eps=eps)
    residual_target = subtract_measure(nu, first, eps=max(eps, 1e-9))
    second = shadow(mu2, residual_target, eps=eps)
    sequential = add_measures(first, second)
    tol = max(eps, 1e-9)
    if not measures_close(total, sequential, pos_tol=EPS_POS, mass_tol=tol):
        return False
    p_total = _put_gap_sup(combined, nu)
    p_first = _put_gap_sup(mu1, nu)
    p_second = _put_gap_sup(mu2, residual_target)
    return abs(p_total - (p_first + p_second)) <= tol


# ==== lifts ================================================================


class LiftKind(Enum):
    """How to order the mass slices of a source measure."""

    Ascending = "ascending"
    Descending = "descending"
    Custom = "custom"


@dataclass(frozen=True)
class Lift:
    """An ordered parametrization of a measure by atomic mass slices.

    Each slice is (mass, position); concatenating the slices in order and
    merging by position reproduces the source measure, so cumulative
    prefixes are setwise monotone by construction.
    """

    slices: tuple[tuple[float, float], ...]

    @property
    def total_mass(self) -> float:
        return float(sum(m for m, _ in self.slices))

    def flatten(self) -> DiscreteMeasure:
        return make_measure([(x, m) for m, x in self.slices])

    def prefix(self, u: float) -> DiscreteMeasure:
        """The measure made of the first u-fraction of total mass.

        Raises
        ------
        OutOfRange
            If u is outside [0, 1].
        """
        if not 0.0 <= u <= 1.0:
            raise OutOfRange(f"prefix fraction {u} outside [0, 1]")
        target = u * self.total_mass
        collected: list[tuple[float, float]] = []
        acc = 0.0
        for m, x in self.slices:
            if acc >= target - EPS_MASS:
                break
            take = min(m, target - acc)
            collected.append((x, take))
            acc += take
        return make_measure(collected)

    def to_json_dict(self) -> dict:
        return {"slices": [{"m": m, "x": x} for m, x in self.slices]}


def make_lift(
    mu: DiscreteMeasure,
    kind: LiftKind,
    order: Sequence[int | tuple[int, float]] | None = None,
) -> Lift:
    """Build a lift of mu with the requested slice order.

    Ascending and Descending order the atoms by position.  Custom takes an
    explicit order: each entry is an atom index (the whole atom) or a pair
    (index, mass) taking part of it; the per-index totals must reproduce
    the atom masses.

    Raises
    ------
    BadOrder
        If order is supplied for a non-custom kind, missing for Custom, or
        fails to reproduce mu exactly.
    """
    atoms = mu.atoms
    if kind is not LiftKind.Custom:
        if order is not None:
            raise BadOrder(f"kind {kind.value} does not accept an order")
        slices = [(w, x) for x, w in atoms]
        if kind is LiftKind.Descending:
            slices.reverse()
        return Lift(tuple(slices))
    if order is None:
        raise BadOrder("custom lift requires an order")
    used = np.zeros(len(atoms))
    slices = []
    for entry in order:
        if isinstance(entry, (tuple, list)):
            idx, m = int(entry[0]), float(entry[1])
            explicit = True
        else:
            idx, m = int(entry), 0.0
            explicit = False
        if not 0 <= idx < len(atoms):
            raise BadOrder(f"atom index {idx} out of range")
        if not explicit:
            m = atoms[idx][1]
        if m <= EPS_MASS:
            raise BadOrder(f"slice mass {m} for atom {idx} not positive")
        used[idx] += m
        slices.append((m, atoms[idx][0]))
    for idx, (x, w) in enumerate(atoms):
        if abs(used[idx] - w) > EPS_MASS:
            raise BadOrder(
                f"order assigns mass {used[idx]} to the atom at {x}, "
                f"which has mass {w}"
            )
    return Lift(tuple(slices))


# ==== shadow couplings =====================================================


@dataclass(frozen=True)
class LiftedCoupling:
    """A coupling built slice by slice through shadow increments.

    steps holds (source position, shadow increment) in lift order; the
    union of the first k increments is the shadow of the k-slice prefix,
    and flattened is the induced coupling with marginals (mu, nu).
    """

    steps: tuple[tuple[float, DiscreteMeasure], ...]
    flattened: Coupling

    def to_json_dict(self) -> dict:
        return {
            "steps": [
                {"x": x, "increment": inc.to_json_dict()} for x, inc in self.steps
            ],
            "flattened": self.flattened.to_json_dict(),
        }


def _locate_atom(positions: np.ndarray, x: float) -> int:
    idx = int(np.searchsorted(positions, x))
    for cand in (idx - 1, idx, idx + 1):
        if 0 <= cand < len(positions) and abs(positions[cand] - x) <= EPS_POS:
            return cand
    raise InternalInconsistency(
        f"shadow increment atom at {x} is not on the target support"
    )


def shadow_coupling(
    lift: Lift, nu: DiscreteMeasure, eps: float = EPS
) -> LiftedCoupling:
    """Fold shadows over the lift slices into a full coupling.

    Each slice, a single point mass, is coupled with its shadow in the
    not-yet-used part of nu; the shadow is then subtracted before the next
    slice.  The flattened result has marginals (flatten(lift), nu) and is
    an optimizer of the weak transport problem between them.

    Raises
    ------
    MassMismatch
        If the lift and nu carry different total mass.
    NegativeRemainder
        If subtracting an increment would drive the remainder negative
        beyond tolerance, signalling numerical drift.
    """
    if abs(lift.total_mass - nu.mass) > EPS_MASS:
        raise MassMismatch(
            f"lift mass {lift.total_mass} differs from target mass {nu.mass}"
        )
    source = lift.flatten()
    if source.is_zero:
        return LiftedCoupling((), make_coupling(source, nu, []))
    src_pos = source.positions
    tgt_pos = nu.positions
    remaining = nu
    steps: list[tuple[float, DiscreteMeasure]] = []
    entries: dict[tuple[int, int], float] = {}
    for m, x in lift.slices:
        increment = shadow(make_measure([(x, m)]), remaining, eps=eps)
        steps.append((x, increment))
        remaining = subtract_measure(remaining, increment, eps=max(eps, 1e-9))
        i = _locate_atom(src_pos, x)
        for y, w in increment.atoms:
            j = _locate_atom(tgt_pos, y)
            entries[(i, j)] = entries.get((i, j), 0.0) + w
    if remaining.mass > max(eps, 1e-9) * max(1.0, nu.mass):
        raise InternalInconsistency(
            f"shadow fold left {remaining.mass} of target mass unused"
        )
    flattened = make_coupling(source, nu, entries, tol=max(eps, 1e-9))
    return LiftedCoupling(tuple(steps), flattened)


def region_decomposition_check(
    lift: Lift, nu: DiscreteMeasure, u: float, eps: float = EPS
) -> bool:
    """Whether the prefix shadow splits across the three blocks.

    For the prefix holding the first u-fraction of the lift's mass, the
    shadow in nu must equal the sum of the shadows of the prefix's
    restrictions to the three blocks of the decomposition, each taken in
    its own block target.

    Raises
    ------
    OutOfRange
        If u is outside [0, 1].
    """
    prefix = lift.prefix(u)
    mu = lift.flatten()
    d = decompose(mu, nu, eps=eps)
    total = shadow(prefix, nu, eps=eps)
    parts = []
    if math.isfinite(d.x_minus):
        left = restrict(prefix, -math.inf, d.x_minus, hi_closed=False)
        right_lo = d.x_minus
    else:
        left = make_measure([])
        right_lo = -math.inf
    if math.isfinite(d.x_plus):
        right = restrict(prefix, d.x_plus, math.inf, lo_closed=False)
    else:
        right = make_measure([])
    core = restrict(prefix, right_lo, d.x_plus)
    parts.append(shadow(left, d.chi_minus, eps=eps))
    parts.append(shadow(core, d.chi_zero, eps=eps))
    parts.append(shadow(right, d.chi_plus, eps=eps))
    regional = add_measures(*parts)
    return measures_close(
        total, regional, pos_tol=EPS_POS, mass_tol=max(eps, 1e-9)
    )


def min_target_check(
    mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = EPS
) -> tuple[float, DiscreteMeasure]:
    """Minimize the weak transport value over sub-targets of nu.

    Solves the joint LP (rows = mu, column sums <= nu) and verifies that
    the shadow attains the minimum and is convex-dominated by the LP
    minimizer.  Returns the LP value and the LP's optimal sub-target.

    Raises
    ------
    MassOrder
        If mu carries more mass than nu.
    InternalInconsistency
        If the shadow fails to attain the LP minimum within 1e-7.
    """
    from .lp_oracle import min_target_lp

    if mu.mass > nu.mass + EPS_MASS:
        raise MassOrder(
            f"source mass {mu.mass} exceeds target mass {nu.mass}"
        )
    value, theta_star = min_target_lp(mu, nu)
    s = shadow(mu, nu, eps=eps)
    shadow_value = wot_value(mu, s, eps=eps) if not s.is_zero else 0.0
    if abs(shadow_value - value) > MIN_TARGET_TOL:
        raise InternalInconsistency(
            f"shadow value {shadow_value} misses the LP minimum {value}"
        )
    if not (s.is_zero and theta_star.is_zero):
        if not check_order(s, theta_star, OrderRelation.Convex, eps=MIN_TARGET_TOL):
            raise InternalInconsistency(
                "shadow is not convex-dominated by the LP minimizer"
            )
    return value, theta_star


# ==== serialization ========================================================


def lift_from_json_dict(data: dict) -> Lift:
    """Parse the {"slices": [{"m": .., "x": ..}]} schema."""
    try:
        slices = tuple(
            (float(s["m"]), float(s["x"])) for s in data["slices"]
        )
    except (KeyError, TypeError) as exc:
        raise BadOrder(f"malformed lift JSON: {exc}") from exc
    for m, x in slices:
        if m <= 0 or not math.isfinite(m) or not math.isfinite(x):
            raise BadOrder(f"invalid slice (m={m}, x={x})")
    return Lift(slices)
