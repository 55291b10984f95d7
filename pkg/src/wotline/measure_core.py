"""Finitely supported measures on the real line.

Conventions used throughout the package:

* a measure is a finite list of atoms ``(position, mass)`` with strictly
  increasing positions and strictly positive masses;
* ``mean`` always denotes the unnormalized first moment ``sum x_i w_i``
  (barycenters, i.e. normalized means, are computed on demand);
* put potentials ``P(k) = sum w_i (k - x_i)^+`` and call potentials
  ``C(k) = sum w_i (x_i - k)^+`` decide every stochastic-order predicate.
  Both are piecewise linear, so each pointwise inequality is checked only
  at the union of atom positions; the asymptotic rays are covered by the
  mass preconditions of the relation being tested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import (
    BadInterval,
    MassMismatch,
    NegativeMass,
    NegativeRemainder,
    OutOfRange,
)
from .tolerances import EPS, EPS_MASS, EPS_POS

__all__ = [
    "DiscreteMeasure",
    "OrderRelation",
    "make_measure",
    "moments",
    "restrict",
    "cdf",
    "quantile",
    "check_order",
    "wasserstein1",
    "add_measures",
    "subtract_measure",
    "scale_measure",
    "measures_close",
    "measure_from_json_dict",
]


# ==== types ================================================================


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported nonnegative measure.

    Attributes
    ----------
    atoms:
        Tuple of ``(position, mass)`` pairs, positions strictly increasing,
        masses strictly positive.  The zero measure has an empty tuple.
    """

    atoms: tuple[tuple[float, float], ...]

    # -- basic accessors ----------------------------------------------------

    @property
    def positions(self) -> np.ndarray:
        return np.array([x for x, _ in self.atoms], dtype=float)

    @property
    def masses(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @property
    def mass(self) -> float:
        return float(sum(w for _, w in self.atoms))

    @property
    def mean(self) -> float:
        """Unnormalized first moment sum x_i w_i."""
        return float(sum(x * w for x, w in self.atoms))

    @property
    def is_zero(self) -> bool:
        return not self.atoms

    def mass_at(self, x: float) -> float:
        """Mass of the atom at position x (0 if there is none)."""
        for xi, wi in self.atoms:
            if abs(xi - x) <= EPS_POS:
                return wi
        return 0.0

    # -- equality is tolerance-based, so the type is not hashable -----------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return measures_close(self, other, pos_tol=EPS_POS, mass_tol=EPS_MASS)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        inner = " + ".join(f"{w:g}*d({x:g})" for x, w in self.atoms)
        return f"DiscreteMeasure({inner or '0'})"

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"atoms": [{"x": x, "w": w} for x, w in self.atoms]}


class OrderRelation(Enum):
    """Stochastic-order relations decided by potential-function criteria."""

    Setwise = "setwise"
    Convex = "convex"
    ConvexDecreasing = "convex_decreasing"
    ConvexIncreasing = "convex_increasing"
    Stochastic = "stochastic"
    PosConvex = "pos_convex"
    PosConvexDecreasing = "pos_convex_decreasing"
    PosConvexIncreasing = "pos_convex_increasing"


# ==== construction =========================================================


def make_measure(raw_atoms: Iterable[tuple[float, float]]) -> DiscreteMeasure:
    """Build a measure from unsorted raw atoms.

    Positions closer than EPS_POS are merged by mass addition; zero-mass
    atoms are dropped.  The empty input yields the zero measure.

    Raises
    ------
    NegativeMass
        If any input mass is negative.
    """
    pairs = [(float(x), float(w)) for x, w in raw_atoms]
    for x, w in pairs:
        if w < 0.0:
            raise NegativeMass(f"atom at {x} has negative mass {w}")
        if not (math.isfinite(x) and math.isfinite(w)):
            raise OutOfRange(f"non-finite atom ({x}, {w})")
    pairs.sort(key=lambda a: a[0])
    merged: list[tuple[float, float]] = []
    for x, w in pairs:
        if merged and x - merged[-1][0] <= EPS_POS:
            merged[-1] = (merged[-1][0], merged[-1][1] + w)
        else:
            merged.append((x, w))
    return DiscreteMeasure(tuple((x, w) for x, w in merged if w > EPS_MASS))


def moments(m: DiscreteMeasure) -> tuple[float, float]:
    """Return (total mass, unnormalized first moment)."""
    return m.mass, m.mean


def add_measures(*ms: DiscreteMeasure) -> DiscreteMeasure:
    """Sum of measures (atom-wise, positions merged within EPS_POS)."""
    atoms: list[tuple[float, float]] = []
    for m in ms:
        atoms.extend(m.atoms)
    return make_measure(atoms)


def scale_measure(m: DiscreteMeasure, factor: float) -> DiscreteMeasure:
    """Multiply all masses by a nonnegative factor."""
    if factor < 0.0:
        raise NegativeMass(f"scale factor {factor} is negative")
    return make_measure([(x, w * factor) for x, w in m.atoms])


def subtract_measure(
    a: DiscreteMeasure, b: DiscreteMeasure, eps: float = EPS
) -> DiscreteMeasure:
    """Atom-wise difference a - b, which must be nonnegative.

    Remainders in (-eps, 0) are clamped to 0 (floating-point drift from
    sequential subtraction); anything more negative raises.

    Raises
    ------
    NegativeRemainder
        If b exceeds a on some atom by more than eps.
    """
    remaining = {x: w for x, w in a.atoms}
    for x, w in b.atoms:
        matched = None
        for xa in remaining:
            if abs(xa - x) <= EPS_POS:
                matched = xa
                break
        have = remaining.get(matched, 0.0) if matched is not None else 0.0
        left = have - w
        if left < -eps:
            raise NegativeRemainder(
                f"subtraction at position {x} leaves {left} (below -eps)"
            )
        if matched is not None:
            remaining[matched] = max(left, 0.0)
    return make_measure(list(remaining.items()))


def measures_close(
    a: DiscreteMeasure,
    b: DiscreteMeasure,
    pos_tol: float = EPS_POS,
    mass_tol: float = EPS,
) -> bool:
    """Atom-wise comparison within tolerances (same atom count required)."""
    if len(a.atoms) != len(b.atoms):
        return False
    return all(
        abs(xa - xb) <= pos_tol and abs(wa - wb) <= mass_tol
        for (xa, wa), (xb, wb) in zip(a.atoms, b.atoms)
    )


# ==== restriction, cdf, quantile ===========================================


def restrict(
    m: DiscreteMeasure,
    lo: float,
    hi: float,
    lo_closed: bool = True,
    hi_closed: bool = True,
) -> DiscreteMeasure:
    """Restriction of m to an interval, boundary inclusion per flags.

    lo/hi may be -inf/+inf.

    Raises
    ------
    BadInterval
        If lo > hi.
    """
    if lo > hi:
        raise BadInterval(f"interval endpoints out of order: {lo} > {hi}")
    kept = []
    for x, w in m.atoms:
        above = x >= lo if lo_closed else x > lo
        below = x <= hi if hi_closed else x < hi
        if above and below:
            kept.append((x, w))
    return DiscreteMeasure(tuple(kept))


def cdf(m: DiscreteMeasure, k: float) -> float:
    """Right-continuous distribution function m((-inf, k])."""
    return float(sum(w for x, w in m.atoms if x <= k))


def quantile(m: DiscreteMeasure, u: float) -> float:
    """Left-continuous generalized inverse of the cdf.

    Defined for u in [0, mass]; u = 0 returns the first atom position.

    Raises
    ------
    OutOfRange
        If u is outside [0, mass] (beyond EPS_MASS) or m is the zero measure.
    """
    if m.is_zero:
        raise OutOfRange("quantile of the zero measure is undefined")
    total = m.mass
    if u < -EPS_MASS or u > total + EPS_MASS:
        raise OutOfRange(f"quantile level {u} outside [0, {total}]")
    u = min(max(u, 0.0), total)
    if u <= 0.0:
        return m.atoms[0][0]
    cum = np.cumsum(m.masses)
    idx = int(np.searchsorted(cum, u, side="left"))
    idx = min(idx, len(m.atoms) - 1)
    return m.atoms[idx][0]


# ==== potential evaluation (inline, used by order predicates) ==============


def _put_values(m: DiscreteMeasure, ks: np.ndarray) -> np.ndarray:
    """P(k) = sum w_i (k - x_i)^+ vectorized over grid points ks."""
    if m.is_zero:
        return np.zeros_like(ks, dtype=float)
    diff = ks[:, None] - m.positions[None, :]
    return np.maximum(diff, 0.0) @ m.masses


def _call_values(m: DiscreteMeasure, ks: np.ndarray) -> np.ndarray:
    """C(k) = sum w_i (x_i - k)^+ vectorized over grid points ks."""
    if m.is_zero:
        return np.zeros_like(ks, dtype=float)
    diff = m.positions[None, :] - ks[:, None]
    return np.maximum(diff, 0.0) @ m.masses


def _union_positions(a: DiscreteMeasure, b: DiscreteMeasure) -> np.ndarray:
    pts = sorted({x for x, _ in a.atoms} | {x for x, _ in b.atoms})
    return np.array(pts, dtype=float)


# ==== order predicates =====================================================


def check_order(
    a: DiscreteMeasure,
    b: DiscreteMeasure,
    rel: OrderRelation,
    eps: float = EPS,
) -> bool:
    """Decide whether a <= b in the given stochastic order.

    Each relation reduces to pointwise inequalities between piecewise-linear
    potentials, decided exactly at the union of atom positions (the mass
    preconditions cover the asymptotic rays):

    * Setwise: per-atom mass domination;
    * Convex: equal means and P_a <= P_b;
    * ConvexDecreasing: P_a <= P_b;  ConvexIncreasing: C_a <= C_b;
    * Stochastic: F_a >= F_b;
    * PosConvexDecreasing / PosConvexIncreasing / PosConvex: the same put /
      call / both criteria with mass(a) <= mass(b) allowed.

    Raises
    ------
    MassMismatch
        If the relation's mass precondition fails.
    """
    equal_mass_rels = {
        OrderRelation.Convex,
        OrderRelation.ConvexDecreasing,
        OrderRelation.ConvexIncreasing,
        OrderRelation.Stochastic,
    }
    mass_tol = max(EPS_MASS, eps)
    if rel in equal_mass_rels:
        if abs(a.mass - b.mass) > mass_tol:
            raise MassMismatch(
                f"relation {rel.name} needs equal masses, got {a.mass} vs {b.mass}"
            )
    elif rel is not OrderRelation.Setwise:
        if a.mass > b.mass + mass_tol:
            raise MassMismatch(
                f"relation {rel.name} needs mass(a) <= mass(b), "
                f"got {a.mass} vs {b.mass}"
            )

    if rel is OrderRelation.Setwise:
        return all(b.mass_at(x) >= w - eps for x, w in a.atoms)

    ks = _union_positions(a, b)

    def puts_ok() -> bool:
        return bool(np.all(_put_values(a, ks) <= _put_values(b, ks) + eps))

    def calls_ok() -> bool:
        return bool(np.all(_call_values(a, ks) <= _call_values(b, ks) + eps))

    if rel is OrderRelation.Convex:
        return abs(a.mean - b.mean) <= eps and puts_ok()
    if rel in (OrderRelation.ConvexDecreasing, OrderRelation.PosConvexDecreasing):
        return puts_ok()
    if rel in (OrderRelation.ConvexIncreasing, OrderRelation.PosConvexIncreasing):
        return calls_ok()
    if rel is OrderRelation.PosConvex:
        return puts_ok() and calls_ok()
    if rel is OrderRelation.Stochastic:
        fa = np.array([cdf(a, k) for k in ks])
        fb = np.array([cdf(b, k) for k in ks])
        return bool(np.all(fa >= fb - eps))
    raise OutOfRange(f"unknown order relation {rel!r}")


# ==== Wasserstein-1 ========================================================


def wasserstein1(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    """L1 distance between quantile functions, integrated in mass.

    Computed exactly from the merged cumulative-mass breakpoints of the two
    quantile functions.

    Raises
    ------
    MassMismatch
        If total masses differ beyond EPS_MASS.
    """
    if abs(a.mass - b.mass) > EPS_MASS:
        raise MassMismatch(f"wasserstein1 needs equal masses, got {a.mass} vs {b.mass}")
    if a.is_zero or b.is_zero:
        return 0.0
    cum_a = np.cumsum(a.masses)
    cum_b = np.cumsum(b.masses)
    levels = np.unique(np.concatenate(([0.0], cum_a, cum_b)))
    total = 0.0
    for u0, u1 in zip(levels[:-1], levels[1:]):
        if u1 - u0 <= EPS_MASS:
            continue
        mid = 0.5 * (u0 + u1)
        ia = min(int(np.searchsorted(cum_a, mid, side="left")), len(a.atoms) - 1)
        ib = min(int(np.searchsorted(cum_b, mid, side="left")), len(b.atoms) - 1)
        total += abs(a.atoms[ia][0] - b.atoms[ib][0]) * (u1 - u0)
    return float(total)


# ==== serialization ========================================================


def measure_from_json_dict(data: dict) -> DiscreteMeasure:
    """Parse the {"atoms": [{"x": .., "w": ..}, ...]} schema."""
    try:
        atoms = [(float(entry["x"]), float(entry["w"])) for entry in data["atoms"]]
    except (KeyError, TypeError) as exc:
        raise OutOfRange(f"malformed measure JSON: {exc}") from exc
    return make_measure(atoms)
