"""Observation-model builders: population filters, entry laws, ensembles.

An ensemble is S = (1/n) B X X* B* with a deterministic p x m filter B
(so the population covariance is B B*) and an m x n matrix X of i.i.d.
standardized entries.  m may differ from p; banded Toeplitz filters give
the moving-average populations with m = p + q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eig import EigenSpectrum, hermitian_eigenvalues, singular_values_scaled
from .measures import SpectralMeasure

FILTER_KINDS = ("identity", "scaled_identity", "explicit_sigma_sqrt", "toeplitz_filter")
ENTRY_KINDS = ("gaussian_real", "gaussian_complex", "rademacher", "student_t")
DEFAULT_MOMENT_MARGIN = 1.0
DEFAULT_STUDENT_DOF = 8.0
MAX_SEED = 2**64


@dataclass(frozen=True)
class FilterSpec:
    """Deterministic p x m filter specification."""

    kind: str
    p: int
    scale: float = 1.0
    coefficients: tuple[float, ...] = ()
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.kind == "scaled_identity" and not (self.scale > 0.0):
            raise ValueError("scale must be positive")
        if self.kind == "toeplitz_filter":
            if len(self.coefficients) < 1:
                raise ValueError("toeplitz filter needs at least one coefficient")
        if self.kind == "explicit_sigma_sqrt":
            M = self.matrix
            if M is None or M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ValueError("explicit square root must be a square matrix")
            if M.shape[0] != self.p:
                raise ValueError("explicit square root size disagrees with p")
            if np.max(np.abs(M - M.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(M))):
                raise ValueError("explicit square root must be Hermitian")

    @classmethod
    def identity(cls, p: int) -> "FilterSpec":
        return cls(kind="identity", p=p)

    @classmethod
    def scaled_identity(cls, s: float, p: int) -> "FilterSpec":
        return cls(kind="scaled_identity", p=p, scale=float(s))

    @classmethod
    def explicit_sigma_sqrt(cls, matrix) -> "FilterSpec":
        M = np.asarray(matrix)
        return cls(kind="explicit_sigma_sqrt", p=M.shape[0], matrix=M)

    @classmethod
    def toeplitz(cls, coefficients, p: int) -> "FilterSpec":
        return cls(kind="toeplitz_filter", p=p, coefficients=tuple(float(b) for b in coefficients))

    @property
    def m(self) -> int:
        if self.kind == "toeplitz_filter":
            return self.p + len(self.coefficients) - 1
        return self.p


@dataclass(frozen=True)
class EntryDistribution:
    """Standardized i.i.d. entry law with finite (6 + margin)-th moment."""

    kind: str
    dof: float = DEFAULT_STUDENT_DOF
    moment_margin: float = DEFAULT_MOMENT_MARGIN

    def __post_init__(self):
        if self.kind not in ENTRY_KINDS:
            raise ValueError(f"unknown entry distribution {self.kind!r}")
        if not (self.moment_margin > 0.0):
            raise ValueError("moment margin must be positive")
        if self.kind == "student_t" and not (self.dof > 6.0 + self.moment_margin):
            raise ValueError(
                f"student_t needs dof > {6.0 + self.moment_margin}, got {self.dof}"
            )

    @classmethod
    def gaussian_real(cls) -> "EntryDistribution":
        return cls(kind="gaussian_real")

    @classmethod
    def gaussian_complex(cls) -> "EntryDistribution":
        return cls(kind="gaussian_complex")

    @classmethod
    def rademacher(cls) -> "EntryDistribution":
        return cls(kind="rademacher")

    @classmethod
    def student_t(cls, dof: float = DEFAULT_STUDENT_DOF) -> "EntryDistribution":
        return cls(kind="student_t", dof=float(dof))


@dataclass(frozen=True)
class ModelSpec:
    """Full description of one random ensemble draw."""

    filter: FilterSpec
    n: int
    entry: EntryDistribution
    seed: int

    def __post_init__(self):
        if self.filter.p < 2 or self.n < 2:
            raise ValueError("need p, n >= 2")
        if not (0 <= self.seed < MAX_SEED):
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def c_n(self) -> float:
        return self.filter.p / self.n


def build_filter(spec: FilterSpec) -> np.ndarray:
    """Materialize the p x m filter matrix B with B B* the population covariance."""
    p = spec.p
    if spec.kind == "identity":
        return np.eye(p)
    if spec.kind == "scaled_identity":
        return spec.scale * np.eye(p)
    if spec.kind == "explicit_sigma_sqrt":
        return np.array(spec.matrix)
    # banded Toeplitz rows: row j carries (b_0 ... b_q) at columns j..j+q
    q = len(spec.coefficients) - 1
    B = np.zeros((p, p + q))
    for d, b in enumerate(spec.coefficients):
        idx = np.arange(p)
        B[idx, idx + d] = b
    return B


def filter_spectrum(spec: FilterSpec, merge_tol: float = 1e-10) -> SpectralMeasure:
    """Equal-weight eigenvalue measure of the population covariance B B*."""
    if spec.kind == "identity":
        return SpectralMeasure.point_mass(1.0)
    if spec.kind == "scaled_identity":
        return SpectralMeasure.point_mass(spec.scale**2)
    B = build_filter(spec)
    sigma = B @ B.conj().T
    eigs = hermitian_eigenvalues(sigma).values
    # clip eigensolver dust on a PSD product
    eigs = np.clip(eigs, 0.0, None)
    return SpectralMeasure.from_eigenvalues(eigs, merge_tol=merge_tol)


def _draw(rng: np.random.Generator, shape, dist: EntryDistribution) -> np.ndarray:
    if dist.kind == "gaussian_real":
        return rng.standard_normal(shape)
    if dist.kind == "gaussian_complex":
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    if dist.kind == "rademacher":
        return (rng.integers(0, 2, size=shape) * 2 - 1).astype(float)
    # student_t standardized to unit variance
    return rng.standard_t(dist.dof, size=shape) / math.sqrt(dist.dof / (dist.dof - 2.0))


def sample_entries(m: int, n: int, dist: EntryDistribution, seed: int) -> np.ndarray:
    """m x n matrix of i.i.d. standardized entries, deterministic in the seed."""
    if m < 1 or n < 1:
        raise ValueError("need m, n >= 1")
    return _draw(np.random.default_rng(seed), (m, n), dist)


def form_sample_covariance(B, X, n: int) -> np.ndarray:
    """S = (1/n) B X X* B*, symmetrized against roundoff."""
    B = np.asarray(B)
    X = np.asarray(X)
    if B.ndim != 2 or X.ndim != 2 or B.shape[1] != X.shape[0]:
        raise ValueError(f"inner dimensions disagree: B {B.shape} vs X {X.shape}")
    if n < 1:
        raise ValueError("sample count must be >= 1")
    Y = B @ X
    S = Y @ Y.conj().T / n
    return (S + S.conj().T) / 2.0


def simulate_spectrum(model: ModelSpec) -> EigenSpectrum:
    """Eigenvalues of one sampled covariance matrix under the model."""
    B = build_filter(model.filter)
    X = sample_entries(model.filter.m, model.n, model.entry, model.seed)
    return singular_values_scaled(B, X, model.n)


_QF_CHUNK = 1024  # fixed batch width; part of the seeded stream layout


def quadratic_form_deviation(
    B,
    A,
    dist: EntryDistribution,
    trials: int,
    seed: int,
) -> np.ndarray:
    """Samples of |x* B* A B x - tr(A Sigma)| over i.i.d. standardized x.

    A must be Hermitian p x p with p matching B's row count; the trials
    are drawn from a single seeded stream in fixed chunk order.
    """
    B = np.asarray(B)
    A = np.asarray(A)
    if trials < 1:
        raise ValueError("need at least one trial")
    p, m = B.shape
    if A.shape != (p, p):
        raise ValueError(f"A must be {p} x {p}, got {A.shape}")
    target = float(np.real(np.trace(A @ (B @ B.conj().T))))
    rng = np.random.default_rng(seed)
    out = np.empty(trials)
    done = 0
    while done < trials:
        k = min(_QF_CHUNK, trials - done)
        X = _draw(rng, (m, k), dist)
        G = B @ X
        quad = np.real(np.sum(np.conj(G) * (A @ G), axis=0))
        out[done : done + k] = np.abs(quad - target)
        done += k
    return out
