"""Discrete spectral measures used as population inputs.

A population spectrum is represented as a finite set of weighted atoms
(location, weight) with nonnegative locations and weights summing to one.
"""

from __future__ import annotations

import numpy as np

WEIGHT_SUM_TOL = 1e-12
MERGE_TOL = 1e-10


class SpectralMeasure:
    """Finite weighted-atom probability measure on [0, inf).

    Parameters
    ----------
    atoms : iterable of (location, weight)
        Locations must be distinct and >= 0, weights > 0 and summing to 1
        within ``WEIGHT_SUM_TOL``.
    """

    __slots__ = ("locations", "weights")

    def __init__(self, atoms):
        pairs = sorted((float(t), float(w)) for t, w in atoms)
        if not pairs:
            raise ValueError("measure needs at least one atom")
        locs = np.array([t for t, _ in pairs])
        wts = np.array([w for _, w in pairs])
        if np.any(locs < 0.0) or not np.all(np.isfinite(locs)):
            raise ValueError("atom locations must be finite and >= 0")
        if np.any(np.diff(locs) == 0.0):
            raise ValueError("atom locations must be distinct")
        if np.any(wts <= 0.0) or not np.all(np.isfinite(wts)):
            raise ValueError("atom weights must be finite and > 0")
        total = wts.sum()
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"atom weights sum to {total!r}, expected 1")
        self.locations = locs
        self.weights = wts

    @classmethod
    def point_mass(cls, location: float = 1.0) -> "SpectralMeasure":
        return cls([(location, 1.0)])

    @classmethod
    def from_eigenvalues(cls, values, merge_tol: float = MERGE_TOL) -> "SpectralMeasure":
        """Equal-weight measure on eigenvalues, merging atoms closer than merge_tol."""
        vals = np.sort(np.asarray(values, dtype=float))
        if vals.size == 0:
            raise ValueError("empty eigenvalue list")
        w_unit = 1.0 / vals.size
        atoms: list[list[float]] = []
        for v in vals:
            if atoms and v - atoms[-1][0] <= merge_tol:
                # running weighted mean keeps the merged atom centred
                t, w = atoms[-1]
                atoms[-1][0] = (t * w + v * w_unit) / (w + w_unit)
                atoms[-1][1] = w + w_unit
            else:
                atoms.append([float(v), w_unit])
        total = sum(w for _, w in atoms)
        return cls([(t, w / total) for t, w in atoms])

    def scaled(self, s: float) -> "SpectralMeasure":
        """Push-forward under t -> s*t (population scaled by s)."""
        if s <= 0:
            raise ValueError("scale must be positive")
        return SpectralMeasure(zip(self.locations * s, self.weights))

    def mean(self) -> float:
        return float(self.locations @ self.weights)

    def max_location(self) -> float:
        return float(self.locations[-1])

    def __len__(self) -> int:
        return int(self.locations.size)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SpectralMeasure)
            and np.array_equal(self.locations, other.locations)
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self) -> str:
        inner = ", ".join(f"({t:g}, {w:g})" for t, w in zip(self.locations, self.weights))
        return f"SpectralMeasure([{inner}])"


def check_ratio(c: float) -> float:
    """Validate a dimension-to-sample aspect ratio."""
    c = float(c)
    if not np.isfinite(c) or c <= 0.0:
        raise ValueError(f"aspect ratio must be in (0, inf), got {c!r}")
    return c
