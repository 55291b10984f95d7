"""Tests for shadow embeddings, lifts, and shadow couplings.

Covers the shadow of a source inside a heavier target, the mean and
domination identities it satisfies, associativity over source splits,
lift construction and prefixes, the slice-by-slice shadow coupling, the
regional split of prefix shadows, and the minimal sub-target check.
"""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings

from conftest import measure_pairs, measures, random_pair, random_unequal_pair
from wotline import (
    BadOrder,
    Lift,
    LiftKind,
    MassMismatch,
    MassOrder,
    OrderRelation,
    OutOfRange,
    add_measures,
    call_potential,
    check_order,
    lift_from_json_dict,
    make_lift,
    make_measure,
    measures_close,
    min_target_check,
    min_target_lp,
    pistar_violation,
    put_potential,
    region_decomposition_check,
    scale_measure,
    shadow,
    shadow_coupling,
    shadow_residual_check,
    subtract_measure,
    sup_gap,
    target_stats,
)

# =============================================================================
# Tolerance Configuration
# =============================================================================

# Identities that hold exactly and only pick up float rounding.
SHADOW_TOL = 1e-9

# Agreement between the shadow value and the sub-target LP minimum.
LP_TOL = 1e-7

# Pointwise potential comparisons at breakpoints.
CHAIN_TOL = 1e-9


# =============================================================================
# Shadow extraction
# =============================================================================


class TestShadow:
    """The closest sub-measure of the target, via potential surgery."""

    def test_known_saturated_example(self) -> None:
        # A unit atom at 0 inside 0.5 d(-1) + 1.0 d(2) uses all of the left
        # atom and half of the right one.
        mu = make_measure([(0.0, 1.0)])
        nu = make_measure([(-1.0, 0.5), (2.0, 1.0)])
        s = shadow(mu, nu)
        expected = make_measure([(-1.0, 0.5), (2.0, 0.5)])
        assert measures_close(s, expected, mass_tol=SHADOW_TOL)

    def test_known_balanced_example(self) -> None:
        # Halving the source frees the balance: one third left and one
        # sixth right reproduces the source mean exactly.
        mu = make_measure([(0.0, 0.5)])
        nu = make_measure([(-1.0, 0.5), (2.0, 1.0)])
        s = shadow(mu, nu)
        expected = make_measure([(-1.0, 1.0 / 3.0), (2.0, 1.0 / 6.0)])
        assert measures_close(s, expected, mass_tol=SHADOW_TOL)

    def test_zero_source_gives_zero_shadow(self) -> None:
        nu = make_measure([(0.0, 1.0)])
        assert shadow(make_measure([]), nu).is_zero

    def test_source_heavier_than_target_rejected(self) -> None:
        mu = make_measure([(0.0, 2.0)])
        nu = make_measure([(0.0, 1.0)])
        with pytest.raises(MassOrder):
            shadow(mu, nu)

    @given(measure_pairs())
    @settings(max_examples=60)
    def test_equal_masses_shadow_is_the_target(self, pair) -> None:
        mu, nu = pair
        s = shadow(mu, nu)
        assert measures_close(s, nu, mass_tol=SHADOW_TOL), (
            f"shadow {s.atoms} differs from target {nu.atoms}"
        )

    def test_mass_mean_and_domination_identities(self) -> None:
        rng = random.Random(3)
        for _ in range(30):
            mu, nu = random_unequal_pair(rng)
            s = shadow(mu, nu)
            assert abs(s.mass - mu.mass) <= SHADOW_TOL
            assert check_order(s, nu, OrderRelation.Setwise)
            p, _ = sup_gap(put_potential(mu), put_potential(nu))
            c, _ = sup_gap(call_potential(mu), call_potential(nu))
            assert s.mean == pytest.approx(mu.mean + p - c, abs=SHADOW_TOL), (
                f"shadow mean {s.mean} breaks the p - c identity"
            )

    def test_shadow_minimizes_shifted_put_potentials(self) -> None:
        # Against any other reachable sub-target theta, the shadow's
        # shifted put potential sits between the source's and theta's at
        # every breakpoint.
        rng = random.Random(5)
        for _ in range(30):
            mu, nu = random_unequal_pair(rng)
            s = shadow(mu, nu)
            theta = scale_measure(nu, mu.mass / nu.mass)
            p_s, _ = sup_gap(put_potential(mu), put_potential(s))
            p_t, _ = sup_gap(put_potential(mu), put_potential(theta))
            put_mu = put_potential(mu)
            put_s = put_potential(s)
            put_t = put_potential(theta)
            for k in sorted(set(mu.positions) | set(nu.positions)):
                lo = put_mu(k)
                mid = put_s(k) + p_s
                hi = put_t(k) + p_t
                assert lo <= mid + CHAIN_TOL
                assert mid <= hi + CHAIN_TOL


class TestTargetStats:
    """Gap constants of a reachable target against its source."""

    def test_known_constants(self) -> None:
        mu = make_measure([(0.0, 1.0)])
        s = make_measure([(-1.0, 0.5), (2.0, 0.5)])
        p, c = target_stats(s, mu)
        assert p == pytest.approx(0.5, abs=SHADOW_TOL)
        assert c == pytest.approx(0.0, abs=SHADOW_TOL)

    def test_mean_identity_on_shadows(self) -> None:
        rng = random.Random(11)
        for _ in range(20):
            mu, nu = random_unequal_pair(rng)
            s = shadow(mu, nu)
            p, c = target_stats(s, mu)
            assert s.mean - mu.mean == pytest.approx(p - c, abs=SHADOW_TOL)

    def test_mass_mismatch_rejected(self) -> None:
        with pytest.raises(MassMismatch):
            target_stats(
                make_measure([(0.0, 0.5)]), make_measure([(0.0, 1.0)])
            )


class TestShadowResidual:
    """Associativity of shadows over a split of the source."""

    def test_exact_split_example(self) -> None:
        half = make_measure([(0.0, 0.5)])
        nu = make_measure([(-1.0, 0.5), (2.0, 1.0)])
        assert shadow_residual_check(half, half, nu)
        # The residual target after the first half keeps exact thirds.
        first = shadow(half, nu)
        residual = subtract_measure(nu, first)
        second = shadow(half, residual)
        expected = make_measure([(-1.0, 1.0 / 6.0), (2.0, 1.0 / 3.0)])
        assert measures_close(second, expected, mass_tol=SHADOW_TOL)

    def test_random_splits_associate(self) -> None:
        rng = random.Random(17)
        for _ in range(25):
            mu, nu = random_unequal_pair(rng)
            mu1 = scale_measure(mu, 0.5)
            mu2 = subtract_measure(mu, mu1)
            assert shadow_residual_check(mu1, mu2, nu), (
                f"shadow split failed on {mu.atoms} -> {nu.atoms}"
            )

    def test_combined_mass_order_rejected(self) -> None:
        mu = make_measure([(0.0, 1.0)])
        nu = make_measure([(0.0, 1.5)])
        with pytest.raises(MassOrder):
            shadow_residual_check(mu, mu, nu)


# =============================================================================
# Lifts
# =============================================================================


class TestMakeLift:
    """Slice orders and custom slicing validation."""

    def test_ascending_and_descending_orders(self) -> None:
        mu = make_measure([(-1.0, 0.25), (0.5, 0.5), (2.0, 0.25)])
        asc = make_lift(mu, LiftKind.Ascending)
        desc = make_lift(mu, LiftKind.Descending)
        assert asc.slices == ((0.25, -1.0), (0.5, 0.5), (0.25, 2.0))
        assert desc.slices == asc.slices[::-1]

    def test_custom_partial_slices(self) -> None:
        mu = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        lift = make_lift(
            mu, LiftKind.Custom, order=[(0, 0.25), 1, (0, 0.25)]
        )
        assert lift.slices == ((0.25, -1.0), (0.5, 1.0), (0.25, -1.0))
        assert measures_close(lift.flatten(), mu)

    def test_order_forbidden_for_sorted_kinds(self) -> None:
        mu = make_measure([(0.0, 1.0)])
        with pytest.raises(BadOrder):
            make_lift(mu, LiftKind.Ascending, order=[0])

    def test_custom_requires_order(self) -> None:
        with pytest.raises(BadOrder):
            make_lift(make_measure([(0.0, 1.0)]), LiftKind.Custom)

    def test_bad_index_rejected(self) -> None:
        with pytest.raises(BadOrder):
            make_lift(make_measure([(0.0, 1.0)]), LiftKind.Custom, order=[1])

    def test_non_positive_slice_rejected(self) -> None:
        with pytest.raises(BadOrder):
            make_lift(
                make_measure([(0.0, 1.0)]),
                LiftKind.Custom,
                order=[(0, 0.0), (0, 1.0)],
            )

    def test_mass_totals_must_match(self) -> None:
        mu = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        with pytest.raises(BadOrder):
            make_lift(mu, LiftKind.Custom, order=[(0, 0.25), 1])

    @given(measures())
    @settings(max_examples=50)
    def test_flatten_round_trip(self, mu) -> None:
        for kind in (LiftKind.Ascending, LiftKind.Descending):
            lift = make_lift(mu, kind)
            assert measures_close(lift.flatten(), mu)


class TestLiftPrefix:
    """Cumulative mass prefixes of a lift."""

    def test_endpoint_prefixes(self) -> None:
        mu = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        lift = make_lift(mu, LiftKind.Ascending)
        assert lift.prefix(0.0).is_zero
        assert measures_close(lift.prefix(1.0), mu)

    def test_interior_prefix_splits_a_slice(self) -> None:
        mu = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        lift = make_lift(mu, LiftKind.Ascending)
        quarter = lift.prefix(0.75)
        expected = make_measure([(-1.0, 0.5), (1.0, 0.25)])
        assert measures_close(quarter, expected)

    def test_fraction_out_of_range_rejected(self) -> None:
        lift = make_lift(make_measure([(0.0, 1.0)]), LiftKind.Ascending)
        with pytest.raises(OutOfRange):
            lift.prefix(1.5)
        with pytest.raises(OutOfRange):
            lift.prefix(-0.1)


# =============================================================================
# Shadow couplings
# =============================================================================


class TestShadowCoupling:
    """Folding shadows over lift slices into a full coupling."""

    def test_steps_follow_the_lift(self) -> None:
        mu = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        nu = make_measure([(-1.0, 0.5), (3.0, 0.5)])
        lift = make_lift(mu, LiftKind.Ascending)
        lc = shadow_coupling(lift, nu)
        assert len(lc.steps) == len(lift.slices)
        assert [x for x, _ in lc.steps] == [x for _, x in lift.slices]

    def test_flattened_marginals_and_membership(self) -> None:
        rng = random.Random(19)
        for _ in range(15):
            mu, nu = random_pair(rng)
            for kind in (LiftKind.Ascending, LiftKind.Descending):
                lc = shadow_coupling(make_lift(mu, kind), nu)
                assert measures_close(lc.flattened.source, mu)
                assert measures_close(lc.flattened.target, nu)
                violation = pistar_violation(lc.flattened, mu, nu)
                assert violation <= 1e-6, (
                    f"{kind.value} shadow coupling leaves the optimizer "
                    f"set by {violation}"
                )

    def test_prefix_shadow_property(self) -> None:
        # The union of the first k increments is the shadow of the k-slice
        # prefix, for every k.
        rng = random.Random(23)
        for _ in range(10):
            mu, nu = random_pair(rng)
            lift = make_lift(mu, LiftKind.Ascending)
            lc = shadow_coupling(lift, nu)
            acc = make_measure([])
            cum = 0.0
            for k, (_, increment) in enumerate(lc.steps):
                acc = add_measures(acc, increment)
                cum += lift.slices[k][0]
                prefix_shadow = shadow(lift.prefix(cum / lift.total_mass), nu)
                assert measures_close(
                    acc, prefix_shadow, mass_tol=1e-8
                ), f"prefix shadow broke after slice {k}"

    def test_mass_mismatch_rejected(self) -> None:
        lift = make_lift(make_measure([(0.0, 1.0)]), LiftKind.Ascending)
        with pytest.raises(MassMismatch):
            shadow_coupling(lift, make_measure([(0.0, 0.5)]))


class TestRegionDecomposition:
    """Prefix shadows split across the three blocks of the cut points."""

    def test_on_random_pairs_at_grid_fractions(self) -> None:
        rng = random.Random(29)
        for _ in range(10):
            mu, nu = random_pair(rng)
            for kind in (LiftKind.Ascending, LiftKind.Descending):
                lift = make_lift(mu, kind)
                for u in (0.0, 0.25, 0.5, 0.75, 1.0):
                    assert region_decomposition_check(lift, nu, u), (
                        f"regional split failed at u={u} for {kind.value}"
                    )

    def test_fraction_out_of_range_rejected(self) -> None:
        mu = make_measure([(0.0, 1.0)])
        lift = make_lift(mu, LiftKind.Ascending)
        with pytest.raises(OutOfRange):
            region_decomposition_check(lift, mu, 2.0)


# =============================================================================
# Minimal sub-target
# =============================================================================


class TestMinTargetCheck:
    """The shadow attains the sub-target LP minimum."""

    def test_known_example(self) -> None:
        mu = make_measure([(0.0, 1.0)])
        nu = make_measure([(-1.0, 0.5), (2.0, 1.0)])
        value, theta = min_target_check(mu, nu)
        assert value == pytest.approx(0.5, abs=LP_TOL)
        assert abs(theta.mass - 1.0) <= LP_TOL

    def test_agrees_with_the_raw_lp(self) -> None:
        rng = random.Random(31)
        for _ in range(10):
            mu, nu = random_unequal_pair(rng)
            checked_value, _ = min_target_check(mu, nu)
            lp_value, _ = min_target_lp(mu, nu)
            assert checked_value == lp_value

    def test_source_heavier_than_target_rejected(self) -> None:
        with pytest.raises(MassOrder):
            min_target_check(
                make_measure([(0.0, 2.0)]), make_measure([(0.0, 1.0)])
            )


# =============================================================================
# Serialization
# =============================================================================


class TestLiftJson:
    """JSON round trips for lifts."""

    def test_round_trip(self) -> None:
        mu = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        lift = make_lift(mu, LiftKind.Descending)
        recovered = lift_from_json_dict(lift.to_json_dict())
        assert recovered == lift

    def test_malformed_slices_rejected(self) -> None:
        with pytest.raises(BadOrder):
            lift_from_json_dict({"slices": [{"m": 0.5}]})
        with pytest.raises(BadOrder):
            lift_from_json_dict({"slices": [{"m": -0.5, "x": 0.0}]})

    def test_direct_construction_accepts_valid_slices(self) -> None:
        lift = Lift(((0.5, -1.0), (0.5, 1.0)))
        assert lift.total_mass == pytest.approx(1.0)
