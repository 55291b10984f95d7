"""Shared numerical tolerances.

All arithmetic in this package is sums and products of desk-scale inputs
(positions and masses of a few dozen atoms), so accumulated floating-point
error stays far below 1e-9.  The comparison tolerance EPS dominates that
error while still distinguishing genuinely distinct rational inputs.
"""

from __future__ import annotations

# Positions closer than this are considered the same atom.
EPS_POS = 1e-12

# Masses smaller than this are treated as zero.
EPS_MASS = 1e-12

# Comparison tolerance for every potential-function inequality and
# barycenter/mean identity.
EPS = 1e-9

# Tolerance for map/projection checks that involve a verification grid.
TOL_GRID = 1e-6
