"""Exact piecewise-linear function calculus.

Carrier type for put/call potentials, their differences, and convex hulls
(largest convex minorants).  A function is stored as values at strictly
increasing breakpoints plus two asymptotic ray slopes; the empty-breakpoint
case degenerates to an affine function (slope, intercept).

All operations are exact linear algebra on breakpoints, so every pointwise
statement about these functions can be decided on the breakpoints plus the
two rays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InternalInconsistency, NotInD, OutOfRange, Unbounded, UnboundedHull
from .measure_core import DiscreteMeasure, make_measure
from .tolerances import EPS, EPS_MASS, EPS_POS

__all__ = [
    "PwlFunction",
    "put_potential",
    "call_potential",
    "u_potential",
    "subtract",
    "add_constant",
    "evaluate",
    "convex_hull",
    "sup_gap",
    "second_derivative_measure",
    "pwl_to_csv",
    "pwl_from_json_dict",
]


# ==== type =================================================================


@dataclass(frozen=True)
class PwlFunction:
    """Continuous piecewise-linear function with asymptotic ray slopes.

    Attributes
    ----------
    breakpoints:
        Strictly increasing positions where the slope may change.
    values:
        Function values at the breakpoints.
    slope_left:
        Slope on (-inf, first breakpoint].
    slope_right:
        Slope on [last breakpoint, +inf).
    intercept:
        Only used when there are no breakpoints: f(k) = slope_left*k +
        intercept (slope_left must equal slope_right in that case).
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    slope_left: float
    slope_right: float
    intercept: float = 0.0

    def __post_init__(self) -> None:
        if len(self.breakpoints) != len(self.values):
            raise OutOfRange("breakpoints and values must have equal length")
        for b0, b1 in zip(self.breakpoints, self.breakpoints[1:]):
            if not b1 > b0:
                raise OutOfRange("breakpoints must be strictly increasing")
        if not self.breakpoints and abs(self.slope_left - self.slope_right) > 0.0:
            raise OutOfRange("affine function needs slope_left == slope_right")

    # -- geometry helpers ----------------------------------------------------

    @property
    def is_affine(self) -> bool:
        return not self.breakpoints

    def segment_slopes(self) -> np.ndarray:
        """Slopes of the interior segments (length n-1)."""
        b = np.asarray(self.breakpoints)
        v = np.asarray(self.values)
        if len(b) < 2:
            return np.empty(0)
        return np.diff(v) / np.diff(b)

    def slope_sequence(self) -> np.ndarray:
        """All slopes left-to-right: [slope_left, interior..., slope_right]."""
        return np.concatenate(
            ([self.slope_left], self.segment_slopes(), [self.slope_right])
        )

    def is_convex(self, tol: float = EPS) -> bool:
        seq = self.slope_sequence()
        return bool(np.all(np.diff(seq) >= -tol))

    def __call__(self, k: float) -> float:
        return evaluate(self, k)


# ==== potentials ===========================================================


def put_potential(m: DiscreteMeasure) -> PwlFunction:
    """P(k) = sum w_i (k - x_i)^+; slope 0 at -inf, slope mass at +inf."""
    if m.is_zero:
        return PwlFunction((), (), 0.0, 0.0, 0.0)
    x = m.positions
    w = m.masses
    cw = np.concatenate(([0.0], np.cumsum(w)))
    cm = np.concatenate(([0.0], np.cumsum(w * x)))
    vals = x * cw[:-1] - cm[:-1]
    return PwlFunction(tuple(x), tuple(float(v) for v in vals), 0.0, float(m.mass))


def call_potential(m: DiscreteMeasure) -> PwlFunction:
    """C(k) = sum w_i (x_i - k)^+; slope -mass at -inf, slope 0 at +inf."""
    if m.is_zero:
        return PwlFunction((), (), 0.0, 0.0, 0.0)
    x = m.positions
    w = m.masses
    tw = np.concatenate((np.cumsum((w)[::-1])[::-1], [0.0]))[1:]
    tm = np.concatenate((np.cumsum((w * x)[::-1])[::-1], [0.0]))[1:]
    vals = tm - x * tw
    return PwlFunction(
        tuple(x), tuple(float(v) for v in vals), -float(m.mass), 0.0
    )


def u_potential(m: DiscreteMeasure) -> PwlFunction:
    """U = P + C; slope -mass at -inf, slope +mass at +inf."""
    p = put_potential(m)
    c = call_potential(m)
    if m.is_zero:
        return p
    vals = tuple(a + b for a, b in zip(p.values, c.values))
    return PwlFunction(p.breakpoints, vals, -float(m.mass), float(m.mass))


# ==== pointwise algebra ====================================================


def evaluate(f: PwlFunction, k: float) -> float:
    """Exact value of f at k (linear interpolation, ray extension)."""
    if f.is_affine:
        return f.slope_left * k + f.intercept
    b = f.breakpoints
    v = f.values
    if k <= b[0]:
        return v[0] + f.slope_left * (k - b[0])
    if k >= b[-1]:
        return v[-1] + f.slope_right * (k - b[-1])
    return float(np.interp(k, b, v))


def _merged_breakpoints(f: PwlFunction, g: PwlFunction) -> tuple[float, ...]:
    pts = sorted(set(f.breakpoints) | set(g.breakpoints))
    merged: list[float] = []
    for p in pts:
        if merged and p - merged[-1] <= EPS_POS:
            continue
        merged.append(p)
    return tuple(merged)


def subtract(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    """f - g on the merged breakpoint set."""
    bps = _merged_breakpoints(f, g)
    if not bps:
        return PwlFunction(
            (),
            (),
            f.slope_left - g.slope_left,
            f.slope_right - g.slope_right,
            f.intercept - g.intercept,
        )
    vals = tuple(evaluate(f, b) - evaluate(g, b) for b in bps)
    return PwlFunction(
        bps, vals, f.slope_left - g.slope_left, f.slope_right - g.slope_right
    )


def add_constant(f: PwlFunction, a: float) -> PwlFunction:
    """f + a."""
    if f.is_affine:
        return PwlFunction((), (), f.slope_left, f.slope_right, f.intercept + a)
    return PwlFunction(
        f.breakpoints,
        tuple(v + a for v in f.values),
        f.slope_left,
        f.slope_right,
    )


# ==== convex hull ==========================================================


def convex_hull(f: PwlFunction) -> PwlFunction:
    """Largest convex minorant of f over the whole line.

    The hull's rays use f's asymptotic slopes; its graph between the two ray
    tangency points is the lower convex chain of f's breakpoints.  Exact for
    piecewise-linear input.

    Raises
    ------
    UnboundedHull
        If slope_left > slope_right, in which case no convex minorant is
        bounded below.
    """
    s_lo = f.slope_left
    s_hi = f.slope_right
    if s_lo > s_hi + EPS_MASS:
        raise UnboundedHull(
            f"hull unbounded below: slope_left {s_lo} > slope_right {s_hi}"
        )
    s_hi = max(s_hi, s_lo)
    if f.is_affine:
        return f
    b = np.asarray(f.breakpoints)
    v = np.asarray(f.values)
    # tangency contacts of the two rays: minimize value - slope * position
    i_star = int(np.argmin(v - s_lo * b))  # leftmost minimizer
    j_star = len(b) - 1 - int(np.argmin((v - s_hi * b)[::-1]))  # rightmost
    if i_star > j_star:
        raise InternalInconsistency(
            "ray tangency points out of order in convex hull"
        )
    chain: list[tuple[float, float]] = []
    for i in range(i_star, j_star + 1):
        pt = (float(b[i]), float(v[i]))
        while len(chain) >= 2:
            (x1, y1), (x2, y2) = chain[-2], chain[-1]
            cross = (x2 - x1) * (pt[1] - y1) - (y2 - y1) * (pt[0] - x1)
            if cross <= 0.0:
                chain.pop()
            else:
                break
        chain.append(pt)
    return PwlFunction(
        tuple(p for p, _ in chain),
        tuple(val for _, val in chain),
        s_lo,
        s_hi,
    )


# ==== suprema ==============================================================


def sup_gap(f: PwlFunction, g: PwlFunction) -> tuple[float, float]:
    """sup over k of f(k) - g(k), with an argmax witness.

    The witness is a breakpoint, or +/-inf when the supremum is (also)
    attained asymptotically along a flat ray.

    Raises
    ------
    Unbounded
        If the supremum is +infinity (a ray of the difference increases).
    """
    d = subtract(f, g)
    if d.slope_left < -EPS:
        raise Unbounded("difference increases without bound toward -inf")
    if d.slope_right > EPS:
        raise Unbounded("difference increases without bound toward +inf")
    if d.is_affine:
        return d.intercept, math.inf
    candidates: list[tuple[float, float]] = [
        (val, bp) for bp, val in zip(d.breakpoints, d.values)
    ]
    if abs(d.slope_left) <= EPS:
        candidates.append((d.values[0], -math.inf))
    if abs(d.slope_right) <= EPS:
        candidates.append((d.values[-1], math.inf))
    best_val, best_wit = candidates[0]
    for val, wit in candidates[1:]:
        if val >= best_val:
            best_val, best_wit = val, wit
    return float(best_val), best_wit


# ==== measure extraction ===================================================


def second_derivative_measure(
    f: PwlFunction, expect_mass: float, expect_mean: float, eps: float = EPS
) -> DiscreteMeasure:
    """Recover the measure whose put potential is f.

    f must be a valid put potential of a measure with the stated mass and
    mean: convex, non-decreasing, 0 at -inf, and asymptotic to
    expect_mass*k - expect_mean at +inf.  Atoms sit at the slope-change
    breakpoints with masses equal to the slope jumps.

    Raises
    ------
    NotInD
        If any membership condition fails beyond eps.
    """
    if f.is_affine:
        if abs(f.slope_left) > eps or abs(f.intercept) > eps:
            raise NotInD("affine function is not a put potential of a measure")
        if abs(expect_mass) > eps or abs(expect_mean) > eps:
            raise NotInD(
                f"affine zero potential cannot match mass {expect_mass}, "
                f"mean {expect_mean}"
            )
        return make_measure([])
    if abs(f.slope_left) > eps:
        raise NotInD(f"left slope {f.slope_left} is not 0")
    if abs(f.values[0]) > eps:
        raise NotInD(f"value {f.values[0]} at first breakpoint is not 0")
    if abs(f.slope_right - expect_mass) > eps:
        raise NotInD(f"right slope {f.slope_right} does not match mass {expect_mass}")
    tail = expect_mass * f.breakpoints[-1] - expect_mean
    if abs(f.values[-1] - tail) > eps:
        raise NotInD(
            f"value {f.values[-1]} at last breakpoint does not match "
            f"asymptote {tail}"
        )
    seq = f.slope_sequence()
    jumps = np.diff(seq)
    if np.any(jumps < -eps):
        raise NotInD(f"slope jump {jumps.min()} is negative: not convex")
    atoms = [
        (bp, float(j))
        for bp, j in zip(f.breakpoints, jumps)
        if j > EPS_MASS
    ]
    return make_measure(atoms)


# ==== export ===============================================================


def pwl_to_csv(f: PwlFunction) -> str:
    """CSV rows (k, value) with two guard points beyond the breakpoints."""
    if f.is_affine:
        ks = [-1.0, 0.0, 1.0]
    else:
        ks = [f.breakpoints[0] - 1.0, *f.breakpoints, f.breakpoints[-1] + 1.0]
    lines = ["k,value"]
    for k in ks:
        lines.append(f"{k:.17g},{evaluate(f, k):.17g}")
    return "\n".join(lines) + "\n"


def pwl_from_json_dict(data: dict) -> PwlFunction:
    """Parse {"breakpoints": [...], "values": [...], "slope_left": ..,
    "slope_right": .., "intercept": ..} into a PwlFunction."""
    try:
        return PwlFunction(
            tuple(float(b) for b in data.get("breakpoints", [])),
            tuple(float(v) for v in data.get("values", [])),
            float(data["slope_left"]),
            float(data["slope_right"]),
            float(data.get("intercept", 0.0)),
        )
    except (KeyError, TypeError) as exc:
        raise OutOfRange(f"malformed piecewise-linear JSON: {exc}") from exc
