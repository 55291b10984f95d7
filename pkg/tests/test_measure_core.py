"""Measure construction, orders, quantiles, and W1 distance."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings

from conftest import measure_pairs, measures, random_pair
from wotline import (
    DiscreteMeasure,
    MassMismatch,
    NegativeMass,
    NegativeRemainder,
    OrderRelation,
    OutOfRange,
    add_measures,
    cdf,
    check_order,
    make_measure,
    measure_from_json_dict,
    measures_close,
    moments,
    quantile,
    restrict,
    scale_measure,
    subtract_measure,
    wasserstein1,
)

# =============================================================================
# Tolerance Configuration
# =============================================================================

# Grid measures are exact dyadic floats, so identities hold to strict zero;
# the loose bound below only covers accumulated sums.
EXACT_TOL = 1e-12


# =============================================================================
# Construction
# =============================================================================


class TestMakeMeasure:
    def test_sorts_and_merges(self) -> None:
        m = make_measure([(2.0, 0.25), (-1.0, 0.5), (2.0, 0.25)])
        assert m.atoms == ((-1.0, 0.5), (2.0, 0.5))

    def test_drops_zero_mass(self) -> None:
        m = make_measure([(0.0, 0.0), (1.0, 0.5)])
        assert m.atoms == ((1.0, 0.5),)

    def test_empty_is_zero_measure(self) -> None:
        m = make_measure([])
        assert m.is_zero and m.mass == 0.0 and m.mean == 0.0

    def test_negative_mass_rejected(self) -> None:
        with pytest.raises(NegativeMass):
            make_measure([(0.0, -0.25)])

    def test_non_finite_rejected(self) -> None:
        with pytest.raises(OutOfRange):
            make_measure([(float("inf"), 0.5)])

    def test_moments(self) -> None:
        m = make_measure([(-2.0, 0.5), (2.0, 0.5)])
        assert moments(m) == (1.0, 0.0)

    def test_add_and_scale(self) -> None:
        a = make_measure([(0.0, 0.5)])
        b = make_measure([(0.0, 0.25), (1.0, 0.25)])
        assert add_measures(a, b).atoms == ((0.0, 0.75), (1.0, 0.25))
        assert scale_measure(b, 2.0).atoms == ((0.0, 0.5), (1.0, 0.5))
        with pytest.raises(NegativeMass):
            scale_measure(b, -1.0)


class TestSubtractMeasure:
    def test_exact_difference(self) -> None:
        a = make_measure([(0.0, 0.75), (1.0, 0.25)])
        b = make_measure([(0.0, 0.5)])
        assert subtract_measure(a, b).atoms == ((0.0, 0.25), (1.0, 0.25))

    def test_full_removal_drops_atom(self) -> None:
        a = make_measure([(0.0, 0.5), (1.0, 0.5)])
        b = make_measure([(0.0, 0.5)])
        assert subtract_measure(a, b).atoms == ((1.0, 0.5),)

    def test_negative_remainder_rejected(self) -> None:
        a = make_measure([(0.0, 0.25)])
        b = make_measure([(0.0, 0.5)])
        with pytest.raises(NegativeRemainder):
            subtract_measure(a, b)

    def test_missing_position_rejected(self) -> None:
        a = make_measure([(0.0, 0.5)])
        b = make_measure([(1.0, 0.25)])
        with pytest.raises(NegativeRemainder):
            subtract_measure(a, b)


class TestRestrict:
    def test_boundary_flags(self) -> None:
        m = make_measure([(0.0, 0.25), (1.0, 0.25), (2.0, 0.25)])
        assert restrict(m, 0.0, 2.0).atoms == m.atoms
        assert restrict(m, 0.0, 2.0, lo_closed=False).atoms == (
            (1.0, 0.25),
            (2.0, 0.25),
        )
        assert restrict(m, 0.0, 2.0, hi_closed=False).atoms == (
            (0.0, 0.25),
            (1.0, 0.25),
        )
        assert restrict(m, 0.5, 0.75).is_zero

    def test_infinite_interval(self) -> None:
        m = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        assert restrict(m, float("-inf"), float("inf")).atoms == m.atoms


# =============================================================================
# cdf / quantile
# =============================================================================


class TestCdfQuantile:
    def test_cdf_right_continuous(self) -> None:
        m = make_measure([(0.0, 0.5), (1.0, 0.5)])
        assert cdf(m, -0.5) == 0.0
        assert cdf(m, 0.0) == 0.5
        assert cdf(m, 0.5) == 0.5
        assert cdf(m, 1.0) == 1.0

    def test_quantile_mass_units(self) -> None:
        m = make_measure([(0.0, 0.5), (1.0, 1.0)])
        assert quantile(m, 0.0) == 0.0
        assert quantile(m, 0.25) == 0.0
        assert quantile(m, 0.5) == 0.0
        assert quantile(m, 0.50001) == 1.0
        assert quantile(m, 1.5) == 1.0

    def test_quantile_out_of_range(self) -> None:
        m = make_measure([(0.0, 1.0)])
        with pytest.raises(OutOfRange):
            quantile(m, -0.5)
        with pytest.raises(OutOfRange):
            quantile(m, 1.5)
        with pytest.raises(OutOfRange):
            quantile(make_measure([]), 0.0)

    @given(m=measures())
    @settings(max_examples=100)
    def test_quantile_cdf_round_trip(self, m: DiscreteMeasure) -> None:
        # F(Q(u)) >= u and Q is left-continuous at atom boundaries.
        steps = 8
        for i in range(steps + 1):
            u = m.mass * i / steps
            x = quantile(m, u)
            assert cdf(m, x) >= u - EXACT_TOL, f"F(Q({u})) = {cdf(m, x)} < {u}"


# =============================================================================
# stochastic orders
# =============================================================================


class TestCheckOrder:
    def test_convex_known_example(self) -> None:
        center = make_measure([(0.0, 1.0)])
        spread = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        assert check_order(center, spread, OrderRelation.Convex)
        assert not check_order(spread, center, OrderRelation.Convex)

    def test_convex_needs_equal_mass(self) -> None:
        a = make_measure([(0.0, 0.5)])
        b = make_measure([(0.0, 1.0)])
        with pytest.raises(MassMismatch):
            check_order(a, b, OrderRelation.Convex)

    def test_one_sided_orders(self) -> None:
        left = make_measure([(-1.0, 1.0)])
        right = make_measure([(1.0, 1.0)])
        # Calls of the left measure are dominated by calls of the right.
        assert check_order(left, right, OrderRelation.ConvexIncreasing)
        assert not check_order(right, left, OrderRelation.ConvexIncreasing)
        # Puts go the other way.
        assert check_order(right, left, OrderRelation.ConvexDecreasing)
        assert not check_order(left, right, OrderRelation.ConvexDecreasing)

    def test_stochastic_order(self) -> None:
        left = make_measure([(-1.0, 1.0)])
        right = make_measure([(1.0, 1.0)])
        assert check_order(left, right, OrderRelation.Stochastic)
        assert not check_order(right, left, OrderRelation.Stochastic)

    def test_setwise(self) -> None:
        part = make_measure([(0.0, 0.25)])
        whole = make_measure([(0.0, 0.5), (1.0, 0.5)])
        assert check_order(part, whole, OrderRelation.Setwise)
        assert not check_order(whole, part, OrderRelation.Setwise)

    def test_pos_convex_allows_smaller_mass(self) -> None:
        part = make_measure([(0.0, 0.5)])
        whole = make_measure([(-1.0, 0.5), (1.0, 0.5)])
        assert check_order(part, whole, OrderRelation.PosConvex)
        with pytest.raises(MassMismatch):
            check_order(whole, part, OrderRelation.PosConvex)

    @given(m=measures())
    @settings(max_examples=50)
    def test_reflexive(self, m: DiscreteMeasure) -> None:
        for rel in (
            OrderRelation.Convex,
            OrderRelation.ConvexDecreasing,
            OrderRelation.ConvexIncreasing,
            OrderRelation.Stochastic,
            OrderRelation.Setwise,
        ):
            assert check_order(m, m, rel), f"{rel.name} not reflexive on {m}"

    def test_transitive_on_random_chains(self) -> None:
        # When a <= b in put order, a left shift c of b extends the chain:
        # shifting left only increases put potentials, so a <= b <= c.
        rng = random.Random(7)
        for _ in range(50):
            a, b = random_pair(rng, max_atoms=5)
            if not check_order(a, b, OrderRelation.ConvexDecreasing):
                a, b = b, a
            if not check_order(a, b, OrderRelation.ConvexDecreasing):
                continue
            c = make_measure([(x - 1.0, w) for x, w in b.atoms])
            assert check_order(b, c, OrderRelation.ConvexDecreasing)
            assert check_order(a, c, OrderRelation.ConvexDecreasing)


# =============================================================================
# Wasserstein-1
# =============================================================================


class TestWasserstein1:
    def test_known_value(self) -> None:
        a = make_measure([(-2.0, 0.5), (2.0, 0.5)])
        b = make_measure([(0.0, 1.0)])
        assert wasserstein1(a, b) == 2.0

    def test_point_masses(self) -> None:
        a = make_measure([(0.0, 1.0)])
        b = make_measure([(3.0, 1.0)])
        assert wasserstein1(a, b) == 3.0

    def test_mass_mismatch(self) -> None:
        with pytest.raises(MassMismatch):
            wasserstein1(make_measure([(0.0, 1.0)]), make_measure([(0.0, 0.5)]))

    @given(pair=measure_pairs())
    @settings(max_examples=60)
    def test_symmetry_and_identity(self, pair) -> None:
        a, b = pair
        d_ab = wasserstein1(a, b)
        d_ba = wasserstein1(b, a)
        assert abs(d_ab - d_ba) <= EXACT_TOL, f"asymmetric: {d_ab} vs {d_ba}"
        assert wasserstein1(a, a) == 0.0

    def test_triangle_inequality(self) -> None:
        rng = random.Random(11)
        for _ in range(60):
            a, b = random_pair(rng, max_atoms=5)
            _, c = random_pair(rng, max_atoms=5)
            c = scale_measure(c, a.mass / c.mass)
            lhs = wasserstein1(a, c)
            rhs = wasserstein1(a, b) + wasserstein1(b, c)
            assert lhs <= rhs + 1e-9, f"triangle violated: {lhs} > {rhs}"


# =============================================================================
# serialization
# =============================================================================


class TestMeasureJson:
    def test_round_trip(self) -> None:
        m = make_measure([(-1.25, 0.375), (2.0, 0.625)])
        assert measure_from_json_dict(m.to_json_dict()).atoms == m.atoms

    def test_malformed_rejected(self) -> None:
        with pytest.raises(OutOfRange):
            measure_from_json_dict({"atoms": [{"x": 0.0}]})

    def test_close_helper(self) -> None:
        a = make_measure([(0.0, 0.5)])
        b = make_measure([(0.0, 0.5 + 1e-12)])
        assert measures_close(a, b)
        assert not measures_close(a, make_measure([(0.0, 0.6)]))
