"""Closed-form weak transport value and the structure of its optimizers.

For marginals mu, nu of equal mass the quantity of interest is

    V(mu, nu) = inf over couplings pi of sum_i mu_i |x_i - bary_i(pi)|,

the weak transport cost with absolute-value penalty on the conditional
mean displacement.  Everything here is driven by two scalar constants

    p = sup_k (P_mu - P_nu)(k)    and    c = sup_k (C_mu - C_nu)(k)

(put and call potential gaps, clamped at zero) and by the contact set of
the shifted put potential P_nu + p against P_mu.  The contact set has a
smallest and largest element, the cut points x_minus <= x_plus; mass of mu
left of x_minus must move up, mass right of x_plus must move down, and the
middle block stays put in conditional mean.  The decomposition realizes
this as three source/target pairs with one-sided convex order relations,
and the optimizer set is exactly the couplings assembled from arbitrary
solutions of the three blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._coupling import Coupling
from .errors import (
    InternalInconsistency,
    MarginalMismatch,
    MassMismatch,
)
from .measure_core import (
    DiscreteMeasure,
    add_measures,
    make_measure,
    measure_from_json_dict,
    measures_close,
    restrict,
    subtract_measure,
)
from .pwl_convex import call_potential, put_potential, subtract, sup_gap
from .tolerances import EPS, EPS_MASS, EPS_POS

__all__ = [
    "Decomposition",
    "compute_constants",
    "compute_cutpoints",
    "decompose",
    "wot_value",
    "wot_objective",
    "is_pistar_member",
    "pistar_violation",
    "region_of",
    "wot_value_general",
    "decomposition_from_json_dict",
]


# ==== constants and cut points =============================================


def compute_constants(
    mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = EPS
) -> tuple[float, float]:
    """The put and call potential gap suprema (p, c), clamped at zero.

    They satisfy p - c = mean(nu) - mean(mu); the identity is verified as a
    numerical self-check.

    Raises
    ------
    MassMismatch
        If the two measures carry different total mass.
    InternalInconsistency
        If the put/call identity fails beyond tolerance.
    """
    if abs(mu.mass - nu.mass) > EPS_MASS:
        raise MassMismatch(
            f"total masses differ: {mu.mass} vs {nu.mass}"
        )
    if mu.is_zero and nu.is_zero:
        return 0.0, 0.0
    p_raw, _ = sup_gap(put_potential(mu), put_potential(nu))
    c_raw, _ = sup_gap(call_potential(mu), call_potential(nu))
    p = max(0.0, p_raw)
    c = max(0.0, c_raw)
    if abs((p - c) - (nu.mean - mu.mean)) > max(eps, 1e2 * eps * (1.0 + abs(nu.mean))):
        raise InternalInconsistency(
            f"put/call gap identity violated: p={p}, c={c}, "
            f"mean gap={nu.mean - mu.mean}"
        )
    return p, c


def compute_cutpoints(
    mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = EPS
) -> tuple[float, float, float, float]:
    """Constants plus the contact interval: (p, c, x_minus, x_plus).

    x_minus is the smallest contact point of P_nu + p with P_mu, or -inf
    when p <= eps (the left ray already touches); x_plus is the largest
    contact point, or +inf when c <= eps.  Both potentials are piecewise
    linear so contact can only first/last occur at a breakpoint of either.
    """
    p, c = compute_constants(mu, nu, eps=eps)
    if mu.is_zero:
        return p, c, -math.inf, math.inf
    gap = subtract(put_potential(mu), put_potential(nu))
    breaks = np.asarray(gap.breakpoints)
    vals = np.asarray(gap.values)
    # Contact of P_nu + p with P_mu means the gap attains its supremum p.
    contact = breaks[np.abs(vals - p) <= eps]
    x_minus = -math.inf if p <= eps else None
    x_plus = math.inf if c <= eps else None
    if x_minus is None or x_plus is None:
        if len(contact) == 0:
            raise InternalInconsistency(
                "positive constants but empty contact set"
            )
        if x_minus is None:
            x_minus = float(contact[0])
        if x_plus is None:
            x_plus = float(contact[-1])
    return p, c, x_minus, x_plus


def region_of(x: float, x_minus: float, x_plus: float, eps: float = EPS) -> str:
    """Which block a source position belongs to: "left", "core", "right".

    Positions within eps of a finite cut point count as core; the cut
    points themselves belong to the middle block.
    """
    if math.isfinite(x_minus) and x < x_minus - eps:
        return "left"
    if math.isfinite(x_plus) and x > x_plus + eps:
        return "right"
    return "core"


# ==== decomposition ========================================================


@dataclass(frozen=True)
class Decomposition:
    """Three-block splitting of a weak transport problem.

    The source splits by position against the cut points,

        eta_minus = mu on (-inf, x_minus),
        eta_zero  = mu on [x_minus, x_plus],
        eta_plus  = mu on (x_plus, +inf),

    and the target splits with boundary atoms sized so that each pair
    carries equal mass:

        chi_minus = nu on (-inf, x_minus) plus an atom at x_minus,
        chi_plus  = nu on (x_plus, +inf) plus an atom at x_plus,
        chi_zero  = nu - chi_minus - chi_plus.

    delta_minus = mu((-inf, x_minus)) and delta_plus = mu((-inf, x_plus])
    are the cumulative masses that size the boundary atoms.
    """

    p: float
    c: float
    x_minus: float
    x_plus: float
    delta_minus: float
    delta_plus: float
    eta_minus: DiscreteMeasure
    eta_zero: DiscreteMeasure
    eta_plus: DiscreteMeasure
    chi_minus: DiscreteMeasure
    chi_zero: DiscreteMeasure
    chi_plus: DiscreteMeasure

    def pairs(self) -> list[tuple[str, DiscreteMeasure, DiscreteMeasure]]:
        """The three (block name, source, target) pairs."""
        return [
            ("left", self.eta_minus, self.chi_minus),
            ("core", self.eta_zero, self.chi_zero),
            ("right", self.eta_plus, self.chi_plus),
        ]

    def to_json_dict(self) -> dict:
        def edge(x: float) -> float | str:
            if x == math.inf:
                return "inf"
            if x == -math.inf:
                return "-inf"
            return x

        return {
            "p": self.p,
            "c": self.c,
            "x_minus": edge(self.x_minus),
            "x_plus": edge(self.x_plus),
            "delta_minus": self.delta_minus,
            "delta_plus": self.delta_plus,
            "components": {
                "eta_minus": self.eta_minus.to_json_dict(),
                "eta_zero": self.eta_zero.to_json_dict(),
                "eta_plus": self.eta_plus.to_json_dict(),
                "chi_minus": self.chi_minus.to_json_dict(),
                "chi_zero": self.chi_zero.to_json_dict(),
                "chi_plus": self.chi_plus.to_json_dict(),
            },
        }


def _mass_below(m: DiscreteMeasure, x: float, closed: bool) -> float:
    """Mass of (-inf, x) or (-inf, x], with exact position comparison."""
    if m.is_zero:
        return 0.0
    pos = m.positions
    w = m.masses
    keep = pos <= x if closed else pos < x
    return float(w[keep].sum())


def decompose(
    mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = EPS
) -> Decomposition:
    """Split (mu, nu) into the three equal-mass blocks.

    Raises
    ------
    MassMismatch
        If the total masses differ.
    InternalInconsistency
        If a boundary atom would need negative mass or a block pair fails
        to balance, which cannot happen for exact inputs.
    """
    p, c, x_minus, x_plus = compute_cutpoints(mu, nu, eps=eps)

    def clamp(coeff: float, label: str) -> float:
        if coeff < -eps:
            raise InternalInconsistency(
                f"negative boundary atom mass for {label}: {coeff}"
            )
        return max(0.0, coeff)

    if math.isfinite(x_minus):
        eta_minus = restrict(mu, -math.inf, x_minus, hi_closed=False)
        delta_minus = _mass_below(mu, x_minus, closed=False)
        coeff_minus = clamp(
            delta_minus - _mass_below(nu, x_minus, closed=False), "chi_minus"
        )
        chi_minus = add_measures(
            restrict(nu, -math.inf, x_minus, hi_closed=False),
            make_measure([(x_minus, coeff_minus)]),
        )
    else:
        eta_minus = make_measure([])
        delta_minus = 0.0
        chi_minus = make_measure([])
    if math.isfinite(x_plus):
        eta_plus = restrict(mu, x_plus, math.inf, lo_closed=False)
        delta_plus = _mass_below(mu, x_plus, closed=True)
        coeff_plus = clamp(
            _mass_below(nu, x_plus, closed=True) - delta_plus, "chi_plus"
        )
        chi_plus = add_measures(
            restrict(nu, x_plus, math.inf, lo_closed=False),
            make_measure([(x_plus, coeff_plus)]),
        )
    else:
        eta_plus = make_measure([])
        delta_plus = mu.mass
        chi_plus = make_measure([])
    eta_zero = restrict(mu, x_minus, x_plus)
    chi_zero = subtract_measure(nu, add_measures(chi_minus, chi_plus), eps=eps)
    for name, eta, chi in (
        ("left", eta_minus, chi_minus),
        ("core", eta_zero, chi_zero),
        ("right", eta_plus, chi_plus),
    ):
        if abs(eta.mass - chi.mass) > max(eps, 1e2 * EPS_MASS):
            raise InternalInconsistency(
                f"{name} block masses differ: {eta.mass} vs {chi.mass}"
            )
    return Decomposition(
        p=p,
        c=c,
        x_minus=x_minus,
        x_plus=x_plus,
        delta_minus=delta_minus,
        delta_plus=delta_plus,
        eta_minus=eta_minus,
        eta_zero=eta_zero,
        eta_plus=eta_plus,
        chi_minus=chi_minus,
        chi_zero=chi_zero,
        chi_plus=chi_plus,
    )


# ==== value ================================================================


def wot_value(mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = EPS) -> float:
    """The optimal value V(mu, nu) in closed form.

    When either constant vanishes one tail is empty and the value is the
    absolute mean gap; otherwise it is the sum of the two tail mean gaps,

        V = (mean chi_minus - mean eta_minus)
            + (mean eta_plus - mean chi_plus).

    The value always dominates |mean(mu) - mean(nu)|.
    """
    p, c = compute_constants(mu, nu, eps=eps)
    if p <= eps or c <= eps:
        value = abs(mu.mean - nu.mean)
    else:
        d = decompose(mu, nu, eps=eps)
        value = (d.chi_minus.mean - d.eta_minus.mean) + (
            d.eta_plus.mean - d.chi_plus.mean
        )
    gap = abs(mu.mean - nu.mean)
    if value < gap - max(eps, 1e2 * EPS_MASS * (1.0 + abs(gap))):
        raise InternalInconsistency(
            f"value {value} below the mean-gap lower bound {gap}"
        )
    return max(value, 0.0)


def wot_objective(pi: Coupling) -> float:
    """The weak transport objective of a coupling:

    sum_i |x_i mu_i - sum_j y_j pi_ij|, i.e. mass-weighted absolute
    conditional mean displacement.
    """
    ys = pi.target.positions if len(pi.target.atoms) else np.empty(0)
    mat = pi.matrix()
    total = 0.0
    for i, (x, w) in enumerate(pi.source.atoms):
        total += abs(x * w - float(mat[i] @ ys))
    return total


# ==== optimizer membership =================================================


def _check_marginals(
    pi: Coupling, mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float
) -> None:
    row = make_measure(
        [
            (pi.source.atoms[i][0], m)
            for i, _, m in pi.entries
        ]
    )
    col = make_measure(
        [
            (pi.target.atoms[j][0], m)
            for _, j, m in pi.entries
        ]
    )
    if not measures_close(row, mu, pos_tol=EPS_POS, mass_tol=max(eps, 1e-9)):
        raise MarginalMismatch("coupling rows do not sum to the source measure")
    if not measures_close(col, nu, pos_tol=EPS_POS, mass_tol=max(eps, 1e-9)):
        raise MarginalMismatch("coupling columns do not sum to the target measure")


def pistar_violation(
    pi: Coupling, mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = EPS
) -> float:
    """The largest deviation of pi from the optimizer description.

    Zero (up to eps) if and only if pi is an optimizer.  Three kinds of
    deviation are measured against the cut points of (mu, nu):

    * a source atom left of x_minus whose row mass lands at or above
      x_minus, or whose conditional mean moves down (mass-weighted);
    * symmetrically for atoms right of x_plus;
    * a core atom (inside [x_minus, x_plus]) whose row leaves the closed
      contact interval or whose conditional mean differs from the atom.

    Raises
    ------
    MarginalMismatch
        If pi does not have marginals (mu, nu) within eps.
    """
    _check_marginals(pi, mu, nu, eps)
    _, _, x_minus, x_plus = compute_cutpoints(mu, nu, eps=eps)
    ys = pi.target.positions if len(pi.target.atoms) else np.empty(0)
    mat = pi.matrix()
    worst = 0.0
    for i, (x, w) in enumerate(pi.source.atoms):
        row = mat[i]
        bary = float(row @ ys) / w
        region = region_of(x, x_minus, x_plus, eps=eps)
        if region == "left":
            # Mass may only go strictly below x_minus, mean must not drop.
            stray = float(row[ys > x_minus + eps].sum())
            worst = max(worst, stray, (x - bary) * w)
        elif region == "right":
            stray = float(row[ys < x_plus - eps].sum())
            worst = max(worst, stray, (bary - x) * w)
        else:
            below = (
                float(row[ys < x_minus - eps].sum())
                if math.isfinite(x_minus)
                else 0.0
            )
            above = (
                float(row[ys > x_plus + eps].sum())
                if math.isfinite(x_plus)
                else 0.0
            )
            worst = max(worst, below, above, abs(bary - x) * w)
    return worst


def is_pistar_member(
    pi: Coupling, mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float = EPS
) -> bool:
    """Whether pi is an optimizer of the weak transport problem (mu, nu)."""
    return pistar_violation(pi, mu, nu, eps=eps) <= eps


# ==== general convex costs =================================================


def wot_value_general(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    cost,
    grid_size: int = 64,
    eps: float = EPS,
) -> float:
    """Weak transport value for a general convex displacement penalty.

    The optimizer for any convex penalty h transports through the same
    monotone mean map T*, so the value is sum_i mu_i h(x_i - T*(x_i)).
    ``cost`` is a ConvexCost from the projection module.
    """
    from .projection import evaluate_cost, evaluate_map, optimal_map

    if abs(mu.mass - nu.mass) > EPS_MASS:
        raise MassMismatch(f"total masses differ: {mu.mass} vs {nu.mass}")
    if mu.is_zero:
        return 0.0
    tmap = optimal_map(mu, nu, grid_size=grid_size, eps=eps)
    total = 0.0
    for x, w in mu.atoms:
        total += w * evaluate_cost(cost, x - evaluate_map(tmap, x))
    return total


# ==== serialization ========================================================


def decomposition_from_json_dict(data: dict) -> Decomposition:
    """Parse the decomposition JSON schema back into a Decomposition."""

    def edge(v: float | str) -> float:
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        return float(v)

    try:
        comp = data["components"]
        return Decomposition(
            p=float(data["p"]),
            c=float(data["c"]),
            x_minus=edge(data["x_minus"]),
            x_plus=edge(data["x_plus"]),
            delta_minus=float(data["delta_minus"]),
            delta_plus=float(data["delta_plus"]),
            eta_minus=measure_from_json_dict(comp["eta_minus"]),
            eta_zero=measure_from_json_dict(comp["eta_zero"]),
            eta_plus=measure_from_json_dict(comp["eta_plus"]),
            chi_minus=measure_from_json_dict(comp["chi_minus"]),
            chi_zero=measure_from_json_dict(comp["chi_zero"]),
            chi_plus=measure_from_json_dict(comp["chi_plus"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InternalInconsistency(
            f"malformed decomposition JSON: {exc}"
        ) from exc
