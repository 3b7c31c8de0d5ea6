"""Support geometry of the limiting spectral law.

The real-line inverse x(mb) of the companion transform is monotone
exactly where x lies outside the limiting support: the images of its
increasing branches tile the complement of the support.  Scanning each
branch between consecutive poles of x, refining the zeros of x', and
assembling the complement therefore yields the support intervals and
every spectral gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoGapError, PoleError, RootSearchError
from .measures import SpectralMeasure, check_ratio
from .stieltjes import companion_value_map

DERIVATIVE_POLE_TOL = 1e-12
BRANCH_GRID_POINTS = 4096
EDGE_MERGE_TOL = 1e-8
DEFAULT_MARGIN_FRACTION = 0.05


@dataclass(frozen=True)
class SupportSet:
    """Ordered disjoint support intervals on (0, inf) plus the zero atom.

    ``zero_atom_weight`` is the mass the companion law places at the
    origin, max(0, 1 - c).
    """

    intervals: tuple[tuple[float, float], ...]
    zero_atom_weight: float

    def __post_init__(self):
        prev = 0.0
        for a, b in self.intervals:
            if not (a < b) or a < 0.0:
                raise ValueError(f"bad support interval ({a}, {b})")
            if a < prev:
                raise ValueError("support intervals must be sorted and disjoint")
            prev = b
        if not (0.0 <= self.zero_atom_weight < 1.0):
            raise ValueError("zero atom weight must lie in [0, 1)")

    def gaps(self) -> list[tuple[float, float]]:
        """Interior gaps between consecutive support intervals."""
        return [
            (self.intervals[i][1], self.intervals[i + 1][0])
            for i in range(len(self.intervals) - 1)
        ]

    def left_edge(self) -> float:
        return self.intervals[0][0]

    def right_edge(self) -> float:
        return self.intervals[-1][1]

    def contains(self, x: float) -> bool:
        return any(a <= x <= b for a, b in self.intervals)


@dataclass(frozen=True)
class GapInterval:
    """A closed test interval [a, b] inside a spectral gap with safety margin."""

    a: float
    b: float
    margin: float

    def __post_init__(self):
        if not (0.0 < self.a < self.b):
            raise ValueError("gap interval needs 0 < a < b")
        if not (self.margin > 0.0):
            raise ValueError("margin must be positive")


def value_map_derivative(mu: float, c: float, H: SpectralMeasure) -> float:
    """d/d(mb) of the real value map: 1/mb^2 - c * sum w_k t_k^2/(1 + t_k mb)^2."""
    c = check_ratio(c)
    mu = float(mu)
    if abs(mu) < DERIVATIVE_POLE_TOL:
        raise PoleError("derivative evaluated at the pole mb = 0")
    t, w = H.locations, H.weights
    denom = 1.0 + t * mu
    near = np.abs(denom) < DERIVATIVE_POLE_TOL * np.maximum(1.0, t)
    if np.any(near):
        raise PoleError("derivative evaluated at a pole mb = -1/t_k")
    return float(1.0 / mu**2 - c * np.sum(w * t * t / denom**2))


def _derivative_grid(ms: np.ndarray, c: float, t: np.ndarray, w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        vals = 1.0 / ms**2 - c * np.sum(w * t * t / (1.0 + np.outer(ms, t)) ** 2, axis=1)
    return vals


def _branch_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Composite sampling of an open branch: geometric near ends, linear middle."""
    if np.isfinite(lo) and np.isfinite(hi):
        width = hi - lo
        tail = n // 2 - n // 8
        left = lo + width * np.geomspace(1e-13, 0.5, tail)
        right = hi - width * np.geomspace(1e-13, 0.5, tail)
        middle = np.linspace(lo + 0.25 * width, hi - 0.25 * width, n // 4)
        grid = np.concatenate([left, right, middle])
    elif np.isfinite(hi):
        scale = max(1.0, abs(hi))
        grid = hi - np.geomspace(1e-13 * scale, 1e8 * scale, n)
    else:
        scale = max(1.0, abs(lo))
        grid = lo + np.geomspace(1e-13 * scale, 1e8 * scale, n)
    grid = np.unique(grid)
    return grid[(grid > lo) & (grid < hi)]


def _bisect_derivative_zero(f, a, b, fa, fb):
    if not ((fa < 0.0) != (fb < 0.0)):
        raise RootSearchError(f"lost derivative sign change on [{a!r}, {b!r}]")
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a <= 1e-12 * max(1.0, abs(mid)):
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fa < 0.0) != (fm < 0.0):
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def find_support(c: float, H: SpectralMeasure, grid_points: int = BRANCH_GRID_POINTS) -> SupportSet:
    """Support of the limiting law as the complement of increasing-branch images.

    Branch endpoints are the poles of the value map ({-1/t_k} and 0); sign
    changes of the derivative on the composite grid are refined by
    bisection, monotone pieces are classified, and the images of the
    increasing pieces are merged into the complement of the support.
    Limits at branch ends are taken analytically: x -> 0 at mb -> +-inf
    and x -> -+inf at the poles.
    """
    c = check_ratio(c)
    t, w = H.locations, H.weights
    positive = np.unique(t[t > 0.0])
    if positive.size == 0:
        raise ValueError("population measure has no positive atoms")
    poles = sorted(-1.0 / positive) + [0.0]
    ends = [-np.inf] + poles + [np.inf]
    pole_set = set(poles)

    def deriv(m):
        with np.errstate(divide="ignore", over="ignore"):
            return float(1.0 / m**2 - c * np.sum(w * t * t / (1.0 + t * m) ** 2))

    images: list[tuple[float, float]] = []
    for lo, hi in zip(ends[:-1], ends[1:]):
        grid = _branch_grid(lo, hi, grid_points)
        vals = _derivative_grid(grid, c, t, w)
        ok = np.isfinite(vals)
        grid, vals = grid[ok], vals[ok]
        if grid.size == 0:
            continue
        roots = [float(grid[j]) for j in np.nonzero(vals == 0.0)[0]]
        sgn = np.sign(vals)
        nz = np.nonzero(sgn)[0]
        for k in range(nz.size - 1):
            i0, i1 = nz[k], nz[k + 1]
            if sgn[i0] * sgn[i1] < 0.0:
                roots.append(
                    _bisect_derivative_zero(deriv, grid[i0], grid[i1], vals[i0], vals[i1])
                )
        roots.sort()
        deduped: list[float] = []
        for r in roots:
            if not deduped or r - deduped[-1] > 1e-11 * max(1.0, abs(r)):
                deduped.append(r)

        pieces = [lo] + deduped + [hi]
        for a, b in zip(pieces[:-1], pieces[1:]):
            if np.isinf(a):
                probe = b - max(1.0, abs(b))
            elif np.isinf(b):
                probe = a + max(1.0, abs(a))
            else:
                probe = 0.5 * (a + b)
            if not deriv(probe) > 0.0:
                continue
            if np.isinf(a):
                xa = 0.0
            elif a in pole_set:
                xa = -np.inf if a == 0.0 else np.inf
            else:
                xa = companion_value_map(a, c, H).real
            if np.isinf(b):
                xb = 0.0
            elif b in pole_set:
                xb = np.inf if b == 0.0 else -np.inf
            else:
                xb = companion_value_map(b, c, H).real
            if xa < xb:
                images.append((xa, xb))

    images.sort()
    merged: list[list[float]] = []
    for a, b in images:
        if merged and a <= merged[-1][1] + EDGE_MERGE_TOL * max(1.0, abs(merged[-1][1])):
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])

    intervals = []
    for left, right in zip(merged[:-1], merged[1:]):
        a, b = left[1], right[0]
        if b > 0.0 and b - max(a, 0.0) > EDGE_MERGE_TOL:
            intervals.append((max(a, 0.0), b))
    if not intervals:
        raise RootSearchError("no support intervals found; complement assembly failed")
    return SupportSet(intervals=tuple(intervals), zero_atom_weight=max(0.0, 1.0 - c))


def is_outside_support(interval, support: SupportSet, margin: float) -> bool:
    """True iff [a - margin, b + margin] avoids every support interval and stays positive."""
    a, b = float(interval[0]), float(interval[1])
    if not (0.0 < a < b):
        raise ValueError("interval needs 0 < a < b")
    if margin <= 0.0:
        raise ValueError("margin must be positive")
    lo, hi = a - margin, b + margin
    if lo <= 0.0:
        return False
    return all(hi < sa or lo > sb for sa, sb in support.intervals)


def gap_interval(
    support: SupportSet,
    index: int | None = None,
    margin_fraction: float = DEFAULT_MARGIN_FRACTION,
) -> GapInterval:
    """Margin-shrunk test interval inside a gap of the computed support.

    Picks the widest gap unless ``index`` selects one explicitly.  The
    default margin fraction keeps finite-size edge fluctuations away from
    the tested interval.
    """
    gaps = support.gaps()
    if not gaps:
        raise NoGapError("support has a single interval; no interior gap to test")
    if index is None:
        index = int(np.argmax([b - a for a, b in gaps]))
    lo, hi = gaps[index]
    margin = margin_fraction * (hi - lo)
    a, b = lo + margin, hi - margin
    interval = GapInterval(a=a, b=b, margin=margin / 2.0)
    if not is_outside_support((a, b), support, interval.margin):
        raise NoGapError(f"gap ({lo:g}, {hi:g}) too narrow for margin fraction {margin_fraction}")
    return interval


def largest_edge(c: float, H: SpectralMeasure) -> float:
    """Right endpoint of the rightmost support interval."""
    return find_support(c, H).right_edge()
