"""Shared instance generators for the test suite.

All random measures live on a quarter-integer position grid in [-3, 3]
with masses in eighths, so sums, means, and potential values are exact
dyadic floating-point numbers; equal-mass pairs are produced by integer
cross-scaling and stay exact.  Generators take an explicit random.Random
so every test controls its own seed.
"""

from __future__ import annotations

import random

from hypothesis import strategies as st

from wotline import DiscreteMeasure, make_measure

# Quarter-integer grid: every position is exactly representable and small.
POSITION_GRID = [i / 4 for i in range(-12, 13)]
# Masses in eighths: exact dyadic rationals, never zero.
MASS_GRID = [k / 8 for k in range(1, 9)]


# ==== random.Random based generators =======================================


def random_measure(rng: random.Random, max_atoms: int = 8) -> DiscreteMeasure:
    """A measure with 1..max_atoms distinct grid atoms and eighth masses."""
    n = rng.randint(1, max_atoms)
    positions = rng.sample(POSITION_GRID, n)
    return make_measure([(x, rng.choice(MASS_GRID)) for x in positions])


def scale_to_common_mass(
    a: DiscreteMeasure, b: DiscreteMeasure
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Cross-scale two measures by integer factors so the totals agree.

    With masses in eighths the totals are ka/8 and kb/8; scaling a by kb
    and b by ka makes both totals ka*kb/8 with no rounding at all.
    """
    ka = round(a.mass * 8)
    kb = round(b.mass * 8)
    a2 = make_measure([(x, w * kb) for x, w in a.atoms])
    b2 = make_measure([(x, w * ka) for x, w in b.atoms])
    return a2, b2


def random_pair(
    rng: random.Random, max_atoms: int = 8
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """An equal-mass pair of random measures (exact equality)."""
    return scale_to_common_mass(
        random_measure(rng, max_atoms), random_measure(rng, max_atoms)
    )


def random_unequal_pair(
    rng: random.Random, max_atoms: int = 8
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """A pair with mass(mu) strictly below mass(nu), exactly dyadic."""
    mu, nu = random_pair(rng, max_atoms)
    factor = rng.choice([0.25, 0.5, 0.75])
    return make_measure([(x, w * factor) for x, w in mu.atoms]), nu


def random_ordered_pair(
    rng: random.Random, side: str, max_atoms: int = 8
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """A pair with mu below nu in one one-sided convex order, exactly.

    side="decreasing" groups nu's atoms and parks each group's mass at a
    point at or beyond the group's rightmost atom, which dominates every
    put value of the group; side="increasing" mirrors to the left and
    dominates every call value.  Equal masses are preserved exactly.
    """
    nu = random_measure(rng, max_atoms)
    atoms = list(nu.atoms)
    rng.shuffle(atoms)
    group_count = rng.randint(1, len(atoms))
    groups: list[list[tuple[float, float]]] = [[] for _ in range(group_count)]
    for i, atom in enumerate(atoms):
        groups[i % group_count].append(atom)
    mu_atoms = []
    for group in groups:
        mass = sum(w for _, w in group)
        offset = rng.randint(0, 4) / 4
        if side == "decreasing":
            mu_atoms.append((max(x for x, _ in group) + offset, mass))
        else:
            mu_atoms.append((min(x for x, _ in group) - offset, mass))
    return make_measure(mu_atoms), nu


# ==== hypothesis strategies ================================================


def measures(min_atoms: int = 1, max_atoms: int = 6) -> st.SearchStrategy:
    """Strategy for grid measures (atoms may merge, mass stays positive)."""
    atom = st.tuples(st.integers(-12, 12), st.integers(1, 8))
    return st.lists(atom, min_size=min_atoms, max_size=max_atoms).map(
        lambda raw: make_measure([(i / 4, k / 8) for i, k in raw])
    )


def measure_pairs(max_atoms: int = 6) -> st.SearchStrategy:
    """Strategy for exact equal-mass pairs."""
    return st.tuples(measures(1, max_atoms), measures(1, max_atoms)).map(
        lambda pair: scale_to_common_mass(*pair)
    )
