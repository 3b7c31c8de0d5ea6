"""Dense Hermitian eigenvalues and empirical-spectrum utilities.

The eigensolver is self-contained: unitary Householder reduction to a
real symmetric tridiagonal (complex phases chased into the subdiagonal
moduli) followed by implicit-shift QL sweeps.  Eigenvalues only; the
intended ceiling is p <= 2048 with O(p^3) cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .measures import SpectralMeasure, check_ratio
from .stieltjes import SolverOptions, density_scan
from .support import SupportSet, find_support

HERMITICITY_RTOL = 1e-10
MAX_SWEEP_FACTOR = 30
LIMIT_GRID_POINTS = 2048


@dataclass(frozen=True)
class EigenSpectrum:
    """Ascending real eigenvalues of one Hermitian matrix."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.size and np.any(np.diff(vals) < 0.0):
            raise ValueError("eigenvalues must be ascending")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return int(self.values.size)

    def max(self) -> float:
        return float(self.values[-1])

    def min(self) -> float:
        return float(self.values[0])


def _assert_hermitian(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    defect = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    if defect > HERMITICITY_RTOL * max(scale, 1e-300):
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e} vs scale {scale:.3e})")
    return M


def _householder_tridiagonal(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unitary reduction of a Hermitian matrix to real tridiagonal (d, e).

    Each step reflects one column into the subdiagonal; the leftover
    complex phases on the subdiagonal are removed at the end by a diagonal
    unitary similarity, so only their moduli are kept.
    """
    A = np.array(M, dtype=complex)
    n = A.shape[0]
    for k in range(n - 2):
        x = A[k + 1 :, k]
        nrm = float(np.linalg.norm(x))
        if nrm == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0.0 else 1.0
        v = x.copy()
        v[0] += phase * nrm
        vn = float(np.linalg.norm(v))
        if vn == 0.0:
            continue
        v /= vn
        sub = A[k + 1 :, k + 1 :]
        u = sub @ v
        gamma = float(np.real(np.vdot(v, u)))
        wvec = u - gamma * v
        sub -= 2.0 * np.outer(wvec, v.conj())
        sub -= 2.0 * np.outer(v, wvec.conj())
        A[k + 1, k] = -phase * nrm
        A[k + 2 :, k] = 0.0
        A[k, k + 1 :] = np.conj(A[k + 1 :, k])
    d = np.real(np.diag(A)).copy()
    e = np.abs(np.diag(A, -1)) if n > 1 else np.empty(0)
    return d, e


def _ql_eigenvalues(d_in: np.ndarray, e_in: np.ndarray, max_total_sweeps: int) -> np.ndarray:
    """Implicit-shift QL on a symmetric tridiagonal; eigenvalues only.

    Deflation uses |e_i| <= eps*(|d_i| + |d_{i+1}|).
    """
    d = [float(v) for v in d_in]
    e = [float(v) for v in e_in] + [0.0]
    n = len(d)
    eps = float(np.finfo(float).eps)
    total = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            total += 1
            if total > max_total_sweeps:
                raise ConvergenceError(
                    f"QL failed to deflate after {total} sweeps", iterations=total
                )
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = cos = 1.0
            p = 0.0
            restarted = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = cos * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    restarted = True
                    break
                s = f / r
                cos = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * cos * b
                p = s * r
                d[i + 1] = g + p
                g = cos * r - b
            if not restarted:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    return np.sort(np.array(d))


def hermitian_eigenvalues(M) -> EigenSpectrum:
    """All eigenvalues of a (real or complex) Hermitian matrix, ascending."""
    M = _assert_hermitian(M)
    n = M.shape[0]
    if n == 0:
        return EigenSpectrum(values=np.empty(0))
    if n == 1:
        return EigenSpectrum(values=np.array([float(np.real(M[0, 0]))]))
    d, e = _householder_tridiagonal(M)
    vals = _ql_eigenvalues(d, e, MAX_SWEEP_FACTOR * n)
    return EigenSpectrum(values=vals)


def singular_values_scaled(B, X, n: int | None = None) -> EigenSpectrum:
    """Squared singular values of B X / sqrt(n), zero-padded to p values.

    These coincide with the eigenvalues of the p x p sample covariance
    matrix formed from the same factors, but are computed from the
    rectangular factor directly for numerical stability.
    """
    B = np.asarray(B)
    X = np.asarray(X)
    if B.ndim != 2 or X.ndim != 2 or B.shape[1] != X.shape[0]:
        raise ValueError(f"inner dimensions disagree: B {B.shape} vs X {X.shape}")
    if n is None:
        n = X.shape[1]
    if n < 1:
        raise ValueError("sample count must be >= 1")
    p = B.shape[0]
    sv = np.linalg.svd(B @ X / math.sqrt(n), compute_uv=False)
    vals = np.zeros(p)
    vals[p - sv.size :] = np.sort(sv**2)
    return EigenSpectrum(values=vals)


def count_in_interval(spec: EigenSpectrum, a: float, b: float) -> int:
    """Number of eigenvalues in the closed interval [a, b]."""
    if a > b:
        raise ValueError("need a <= b")
    vals = spec.values
    return int(np.searchsorted(vals, b, side="right") - np.searchsorted(vals, a, side="left"))


class EmpiricalCDF:
    """Right-continuous step function of an eigenvalue sample."""

    def __init__(self, eigenvalues):
        vals = np.sort(np.asarray(eigenvalues, dtype=float))
        if vals.size == 0:
            raise ValueError("empty eigenvalue list")
        self.points = vals
        self.cum = np.arange(1, vals.size + 1) / vals.size

    @classmethod
    def from_spectrum(cls, spec: EigenSpectrum) -> "EmpiricalCDF":
        return cls(spec.values)

    def __call__(self, x):
        idx = np.searchsorted(self.points, np.asarray(x, dtype=float), side="right")
        return idx / self.points.size


class LimitCDF:
    """Distribution function of the limiting law on its computed support.

    Built by integrating the inverted density over each support interval
    on a cosine-spaced composite grid (nodes cluster at the square-root
    edges) and adding the point mass at the origin: max(0, 1 - 1/c) from
    undersampling, or the population's own zero mass if that is larger
    (rank-deficient populations keep their null directions).
    """

    def __init__(
        self,
        c: float,
        H: SpectralMeasure,
        grid_points: int = LIMIT_GRID_POINTS,
        opts: SolverOptions | None = None,
        support: SupportSet | None = None,
    ):
        self.c = check_ratio(c)
        self.H = H
        self.support = support if support is not None else find_support(c, H)
        h_zero = float(H.weights[0]) if H.locations[0] == 0.0 else 0.0
        self.zero_atom = max(0.0, 1.0 - 1.0 / self.c, h_zero)
        lengths = np.array([b - a for a, b in self.support.intervals])
        alloc = np.maximum((grid_points * lengths / lengths.sum()).astype(int), 64)
        self._xs: list[np.ndarray] = []
        self._cdf: list[np.ndarray] = []
        acc = self.zero_atom
        for (a, b), n_i in zip(self.support.intervals, alloc):
            theta = np.linspace(np.pi, 0.0, int(n_i))
            xs = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(theta)
            hard_origin = a <= 1e-12 * (b - a)
            if hard_origin:
                # density diverges like 1/sqrt(x) at a hard edge at the
                # origin; start slightly inside and add the analytic head
                xs[0] = a + 1e-9 * (b - a)
            dens = density_scan(xs, self.c, H, opts)
            head = 2.0 * (xs[0] - a) * dens[0] if hard_origin else 0.0
            cdf = head + np.concatenate(
                [[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))]
            )
            self._xs.append(xs)
            self._cdf.append(acc + cdf)
            acc += float(cdf[-1])
        self.total_mass = acc

    def cdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape)
        out[x >= 0.0] = self.zero_atom
        level = self.zero_atom
        for (a, b), xs, cdf in zip(self.support.intervals, self._xs, self._cdf):
            inside = (x >= a) & (x <= b)
            out[inside] = np.interp(x[inside], xs, cdf)
            level = float(cdf[-1])
            out[x > b] = level
        return out

    def cdf_left(self, x) -> np.ndarray:
        """Left-hand limit of the CDF; differs from cdf only at the origin atom."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.cdf(x)
        out[x == 0.0] = 0.0
        return out

    def quantile(self, q: float) -> float:
        """Generalised inverse of the limit CDF."""
        if not (0.0 <= q <= 1.0):
            raise ValueError("quantile level must lie in [0, 1]")
        if q <= self.zero_atom:
            return 0.0
        for xs, cdf in zip(self._xs, self._cdf):
            if q <= cdf[-1]:
                return float(np.interp(q, cdf, xs))
        return float(self._xs[-1][-1])


def ks_distance(
    ecdf: EmpiricalCDF,
    c: float,
    H: SpectralMeasure,
    limit: LimitCDF | None = None,
    grid_points: int = LIMIT_GRID_POINTS,
) -> float:
    """Sup-norm distance between an empirical CDF and the limiting CDF.

    The sup is attained at jump points and evaluated from both sides;
    tied sample points are grouped so that coinciding jumps of the two
    functions (the origin atom against numerically-zero eigenvalues) are
    compared as jumps, not as a continuum.  Pass a prebuilt ``limit``
    when comparing many samples against one law.
    """
    if limit is None:
        limit = LimitCDF(c, H, grid_points=grid_points)
    pts = ecdf.points
    n = pts.size
    scale = max(abs(float(pts[0])), abs(float(pts[-1])), 1.0)
    pts = np.where(np.abs(pts) <= 1e-12 * scale, 0.0, pts)
    uniq, counts = np.unique(pts, return_counts=True)
    g_hi = np.cumsum(counts) / n
    g_lo = g_hi - counts / n
    d_hi = np.max(np.abs(limit.cdf(uniq) - g_hi))
    d_lo = np.max(np.abs(limit.cdf_left(uniq) - g_lo))
    return float(max(d_hi, d_lo))
