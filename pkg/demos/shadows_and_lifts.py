"""Shadows, staged shadows, and the couplings they induce.

First a source lighter than its target: the shadow picks the cheapest
sub-target, and solving in two stages (shadow the first half, then
shadow the second half in what is left) lands on the same total.  Then
an equal-mass pair: the ascending and descending lifts fold shadows
slice by slice into two optimal couplings whose covariances bracket
every other optimizer.

Run with:  python3 demos/shadows_and_lifts.py
"""

from __future__ import annotations

from wotline import (
    LiftKind,
    Sense,
    add_measures,
    extremal_covariance,
    is_pistar_member,
    make_lift,
    make_measure,
    min_target_lp,
    scale_measure,
    shadow,
    shadow_coupling,
    subtract_measure,
    wot_value,
)


def describe(name: str, atoms) -> None:
    body = ", ".join(f"{w:g} at {x:g}" for x, w in atoms)
    print(f"  {name}: {body if body else 'zero measure'}")


def covariance(pi) -> float:
    return float(pi.source.positions @ pi.matrix() @ pi.target.positions)


def main() -> None:
    # ==== shadow of a lighter source =======================================

    mu = make_measure([(0.0, 1.0)])
    nu = make_measure([(-1.0, 0.5), (2.0, 1.0)])
    s = shadow(mu, nu)
    print("Shadow of a lighter source")
    describe("mu", mu.atoms)
    describe("nu", nu.atoms)
    describe("shadow", s.atoms)
    print(f"  value to shadow : {wot_value(mu, s):.12f}")
    lp_value, _ = min_target_lp(mu, nu)
    print(f"  LP over targets : {lp_value:.12f}")

    # ==== the same shadow, in two stages ====================================

    half = scale_measure(mu, 0.5)
    first = shadow(half, nu)
    second = shadow(half, subtract_measure(nu, first))
    staged = add_measures(first, second)
    print("\nStaged shadows (half the source at a time)")
    describe("first half ", first.atoms)
    describe("second half", second.atoms)
    describe("their sum  ", staged.atoms)
    describe("one shot   ", s.atoms)

    # ==== lift couplings on an equal-mass pair ==============================

    mu = make_measure([(-2.0, 0.5), (0.0, 0.25), (1.5, 0.25)])
    nu = make_measure([(-1.0, 0.25), (-0.25, 0.375), (1.0, 0.375)])
    print("\nLift couplings")
    describe("mu", mu.atoms)
    describe("nu", nu.atoms)
    print(f"  optimal value: {wot_value(mu, nu):.12f}")
    for kind in (LiftKind.Ascending, LiftKind.Descending):
        lift = make_lift(mu, kind)
        lc = shadow_coupling(lift, nu)
        member = is_pistar_member(lc.flattened, mu, nu)
        print(f"\n  {kind.value} lift (optimal: {member})")
        for x, inc in lc.steps:
            body = ", ".join(f"{w:g} at {y:g}" for y, w in inc.atoms)
            print(f"    slice at {x:6g} -> {body}")
        print(f"    covariance: {covariance(lc.flattened):.6f}")

    # ==== covariance extremes ==============================================

    lo = covariance(extremal_covariance(mu, nu, Sense.Min))
    hi = covariance(extremal_covariance(mu, nu, Sense.Max))
    print("\nCovariance over all optimizers")
    print(f"  min {lo:.6f}  <=  any optimizer  <=  max {hi:.6f}")


if __name__ == "__main__":
    main()
