"""Sparse couplings between two finitely supported measures.

A coupling stores its two marginals plus a sparse list of entries
``(i, j, mass)`` indexing atoms of the source and target.  Construction
always validates that row sums match the source masses and column sums the
target masses; everything downstream may rely on that.

This module holds the carrier type and its bookkeeping so that both the
coupling constructions and the shadow machinery can use it without import
cycles; the public face is the ``couplings`` module.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, MarginalMismatch, NegativeMass
from .measure_core import DiscreteMeasure, make_measure
from .tolerances import EPS, EPS_MASS, EPS_POS

__all__ = [
    "Coupling",
    "Sense",
    "make_coupling",
    "barycenters",
    "cost_integral",
    "merge_couplings",
    "identity_coupling",
    "coupling_from_json_dict",
]


class Sense(Enum):
    """Optimization direction."""

    Min = "min"
    Max = "max"


@dataclass(frozen=True)
class Coupling:
    """Nonnegative transport plan with exact marginals.

    Attributes
    ----------
    source, target:
        The two marginal measures.
    entries:
        Sorted tuple of ``(i, j, mass)`` with i indexing source atoms and j
        target atoms; every mass is strictly positive.
    """

    source: DiscreteMeasure
    target: DiscreteMeasure
    entries: tuple[tuple[int, int, float], ...]

    @property
    def total_mass(self) -> float:
        return float(sum(m for _, _, m in self.entries))

    def matrix(self) -> np.ndarray:
        """Dense matrix form, shape (len(source), len(target))."""
        out = np.zeros((len(self.source.atoms), len(self.target.atoms)))
        for i, j, m in self.entries:
            out[i, j] += m
        return out

    def row_measure(self, i: int) -> DiscreteMeasure:
        """The i-th conditional slice as an (unnormalized) measure."""
        atoms = [
            (self.target.atoms[j][0], m) for ii, j, m in self.entries if ii == i
        ]
        return make_measure(atoms)

    def to_json_dict(self) -> dict:
        return {
            "source": self.source.to_json_dict(),
            "target": self.target.to_json_dict(),
            "entries": [{"i": i, "j": j, "m": m} for i, j, m in self.entries],
        }


# ==== construction =========================================================


def make_coupling(
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    entries: Iterable[tuple[int, int, float]] | Mapping[tuple[int, int], float],
    tol: float = EPS,
) -> Coupling:
    """Validate and build a coupling from sparse entries.

    Entries at the same (i, j) are summed; masses below EPS_MASS are
    dropped.

    Raises
    ------
    DimensionMismatch
        If an index is outside the supports.
    NegativeMass
        If an entry mass is negative beyond EPS_MASS.
    MarginalMismatch
        If row/column sums deviate from the marginals by more than tol.
    """
    if isinstance(entries, Mapping):
        items = list(entries.items())
    else:
        items = [((i, j), m) for i, j, m in entries]
    n = len(source.atoms)
    m_count = len(target.atoms)
    acc: dict[tuple[int, int], float] = {}
    for (i, j), m in items:
        if not (0 <= i < n and 0 <= j < m_count):
            raise DimensionMismatch(f"entry index ({i}, {j}) outside supports")
        if m < -EPS_MASS:
            raise NegativeMass(f"coupling entry ({i}, {j}) has mass {m}")
        acc[(i, j)] = acc.get((i, j), 0.0) + m
    kept = {key: m for key, m in acc.items() if m > EPS_MASS}
    row = np.zeros(n)
    col = np.zeros(m_count)
    for (i, j), m in kept.items():
        row[i] += m
        col[j] += m
    src_masses = source.masses if n else np.empty(0)
    tgt_masses = target.masses if m_count else np.empty(0)
    if n and np.max(np.abs(row - src_masses)) > tol:
        worst = int(np.argmax(np.abs(row - src_masses)))
        raise MarginalMismatch(
            f"row sum {row[worst]} != source mass {src_masses[worst]} "
            f"at index {worst}"
        )
    if m_count and np.max(np.abs(col - tgt_masses)) > tol:
        worst = int(np.argmax(np.abs(col - tgt_masses)))
        raise MarginalMismatch(
            f"column sum {col[worst]} != target mass {tgt_masses[worst]} "
            f"at index {worst}"
        )
    ordered = tuple(
        (i, j, kept[(i, j)]) for i, j in sorted(kept.keys())
    )
    return Coupling(source, target, ordered)


def identity_coupling(m: DiscreteMeasure) -> Coupling:
    """The diagonal coupling of a measure with itself."""
    return make_coupling(m, m, [(i, i, w) for i, (_, w) in enumerate(m.atoms)])


def merge_couplings(pieces: Sequence[Coupling], tol: float = EPS) -> Coupling:
    """Sum couplings; marginals are merged atom-wise by position."""
    source = make_measure(
        [a for piece in pieces for a in piece.source.atoms]
    )
    target = make_measure(
        [a for piece in pieces for a in piece.target.atoms]
    )
    src_pos = source.positions
    tgt_pos = target.positions

    def locate(positions: np.ndarray, x: float) -> int:
        idx = int(np.searchsorted(positions, x))
        for cand in (idx - 1, idx, idx + 1):
            if 0 <= cand < len(positions) and abs(positions[cand] - x) <= EPS_POS:
                return cand
        raise DimensionMismatch(f"position {x} not found in merged support")

    acc: dict[tuple[int, int], float] = {}
    for piece in pieces:
        for i, j, m in piece.entries:
            gi = locate(src_pos, piece.source.atoms[i][0])
            gj = locate(tgt_pos, piece.target.atoms[j][0])
            acc[(gi, gj)] = acc.get((gi, gj), 0.0) + m
    return make_coupling(source, target, acc, tol=tol)


# ==== bookkeeping ==========================================================


def barycenters(pi: Coupling) -> list[tuple[float, float]]:
    """Per-row conditional means: (x_i, sum_j y_j pi_ij / mu_i)."""
    ys = pi.target.positions
    out = []
    mat = pi.matrix()
    for i, (x, w) in enumerate(pi.source.atoms):
        out.append((x, float(mat[i] @ ys) / w))
    return out


def cost_integral(pi: Coupling, cost: np.ndarray) -> float:
    """sum of entry masses times the cost matrix c(x_i, y_j).

    Raises
    ------
    DimensionMismatch
        If the matrix shape does not match the supports.
    """
    cost = np.asarray(cost, dtype=float)
    expected = (len(pi.source.atoms), len(pi.target.atoms))
    if cost.shape != expected:
        raise DimensionMismatch(
            f"cost matrix shape {cost.shape} does not match supports {expected}"
        )
    return float(sum(m * cost[i, j] for i, j, m in pi.entries))


# ==== serialization ========================================================


def coupling_from_json_dict(data: dict) -> Coupling:
    """Parse the {"source": .., "target": .., "entries": [..]} schema."""
    from .measure_core import measure_from_json_dict

    try:
        source = measure_from_json_dict(data["source"])
        target = measure_from_json_dict(data["target"])
        entries = [
            (int(e["i"]), int(e["j"]), float(e["m"])) for e in data["entries"]
        ]
    except (KeyError, TypeError) as exc:
        raise DimensionMismatch(f"malformed coupling JSON: {exc}") from exc
    return make_coupling(source, target, entries)
