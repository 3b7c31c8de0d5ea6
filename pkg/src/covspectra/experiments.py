"""Monte Carlo verification campaigns and their file formats.

Configs are strict JSON (unknown keys are errors); each campaign runs
seeded independent trials over a worker pool, compares the simulated
spectra against the solver predictions, and reports per-trial records
(CSV) plus a JSON summary sidecar.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .eig import EmpiricalCDF, LimitCDF, count_in_interval, ks_distance, singular_values_scaled
from .errors import ConfigError, NoGapError
from .measures import SpectralMeasure
from .models import (
    EntryDistribution,
    FilterSpec,
    build_filter,
    filter_spectrum,
    quadratic_form_deviation,
    sample_entries,
)
from .stieltjes import density_scan
from .support import (
    DEFAULT_MARGIN_FRACTION,
    find_support,
    gap_interval,
    is_outside_support,
    largest_edge,
)

RATIO_DRIFT_TOL = 0.10
DEFAULT_KS_THRESHOLD = 0.05
DEFAULT_EDGE_TOLERANCE = 0.10
QF_SLOPE_MAX = 1.15
QF_SLOPE_MIN_CONTROL = 0.85
QF_CONTROL_VAR_RTOL = 0.10


class FilterConfig(BaseModel):
    """Population filter section of a config file.

    ``sigma_atoms`` is config-level sugar: (eigenvalue, fraction) pairs are
    expanded to an explicit diagonal square root at each requested p, so
    one spectral shape can drive a multi-size sweep.
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal[
        "identity", "scaled_identity", "explicit_sigma_sqrt", "toeplitz_filter", "sigma_atoms"
    ]
    scale: float = 1.0
    coefficients: Optional[list[float]] = None
    matrix: Optional[list[list[float]]] = None
    atoms: Optional[list[tuple[float, float]]] = None

    @model_validator(mode="after")
    def _check_fields(self):
        if self.kind == "toeplitz_filter" and not self.coefficients:
            raise ValueError("toeplitz_filter needs coefficients")
        if self.kind == "explicit_sigma_sqrt" and self.matrix is None:
            raise ValueError("explicit_sigma_sqrt needs a matrix")
        if self.kind == "sigma_atoms":
            if not self.atoms:
                raise ValueError("sigma_atoms needs (eigenvalue, fraction) pairs")
            fracs = [f for _, f in self.atoms]
            if any(f <= 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
                raise ValueError("sigma_atoms fractions must be positive and sum to 1")
            if any(v < 0 for v, _ in self.atoms):
                raise ValueError("sigma_atoms eigenvalues must be >= 0")
        return self


class EntryConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian_real", "gaussian_complex", "rademacher", "student_t"]
    dof: float = 8.0
    moment_margin: float = 1.0

    def build(self) -> EntryDistribution:
        return EntryDistribution(kind=self.kind, dof=self.dof, moment_margin=self.moment_margin)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["lsd", "gap", "edge", "qf"]
    filter: FilterConfig
    entry: EntryConfig
    sizes: list[tuple[int, int]] = Field(min_length=1)
    trials: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    ks_threshold: float = DEFAULT_KS_THRESHOLD
    interval: Optional[tuple[float, float]] = None
    margin_fraction: float = DEFAULT_MARGIN_FRACTION
    edge_tolerance: float = DEFAULT_EDGE_TOLERANCE
    qf_matrix: Literal["identity", "sigma"] = "identity"
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check_consistency(self):
        for p, n in self.sizes:
            if p < 2 or n < 2:
                raise ValueError(f"sizes must have p, n >= 2, got ({p}, {n})")
        c0 = self.sizes[0][0] / self.sizes[0][1]
        for p, n in self.sizes:
            if abs(p / n - c0) / c0 > RATIO_DRIFT_TOL:
                raise ValueError(
                    f"size ({p}, {n}) drifts more than {RATIO_DRIFT_TOL:.0%} from the "
                    f"declared ratio {c0:g}"
                )
        if self.interval is not None:
            if self.kind != "gap":
                raise ValueError("interval override is only valid for gap experiments")
            a, b = self.interval
            if not (0.0 < a < b):
                raise ValueError("interval override needs 0 < a < b")
        if self.kind == "qf" and len(self.sizes) < 3:
            raise ValueError("qf experiments need at least 3 sizes for the regression")
        if self.kind == "edge" and self.filter.kind not in ("identity", "scaled_identity"):
            raise ValueError("edge experiments require an identity or scaled-identity filter")
        return self


def load_config(path) -> ExperimentConfig:
    """Parse a JSON experiment config; malformed content raises ConfigError."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(payload)


def parse_config(payload: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def filter_spec_at(cfg: FilterConfig, p: int) -> FilterSpec:
    """Materialize the filter for one sweep size."""
    if cfg.kind == "identity":
        return FilterSpec.identity(p)
    if cfg.kind == "scaled_identity":
        return FilterSpec.scaled_identity(cfg.scale, p)
    if cfg.kind == "toeplitz_filter":
        return FilterSpec.toeplitz(cfg.coefficients, p)
    if cfg.kind == "explicit_sigma_sqrt":
        M = np.asarray(cfg.matrix, dtype=float)
        if M.shape[0] != p:
            raise ConfigError(f"explicit matrix is {M.shape[0]} x {M.shape[1]} but size wants p={p}")
        return FilterSpec.explicit_sigma_sqrt(M)
    # sigma_atoms: largest-remainder apportionment of p slots to the atoms
    fracs = np.array([f for _, f in cfg.atoms])
    raw = fracs * p
    counts = np.floor(raw).astype(int)
    short = p - counts.sum()
    order = np.argsort(-(raw - counts))
    counts[order[:short]] += 1
    diag = np.concatenate(
        [np.full(k, np.sqrt(v)) for (v, _), k in zip(cfg.atoms, counts) if k > 0]
    )
    return FilterSpec.explicit_sigma_sqrt(np.diag(diag))


@dataclass(frozen=True)
class TrialRecord:
    experiment: str
    trial: int
    seed: int
    p: int
    n: int
    statistic: str
    value: float


@dataclass
class ExperimentReport:
    records: list[TrialRecord]
    summary: dict
    predicted: dict

    def write(self, outdir, stem: str | None = None) -> tuple[Path, Path]:
        """Write the records CSV and the JSON summary sidecar."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        stem = stem or self.summary.get("experiment", "experiment")
        records_path = outdir / f"{stem}_records.csv"
        summary_path = outdir / f"{stem}_summary.json"
        with records_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["experiment", "trial", "seed", "p", "n", "statistic_name", "value"])
            for r in self.records:
                writer.writerow([r.experiment, r.trial, r.seed, r.p, r.n, r.statistic, repr(r.value)])
        summary_path.write_text(
            json.dumps({"summary": self.summary, "predicted": self.predicted}, indent=2) + "\n"
        )
        return records_path, summary_path

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed", False))


def _pool_map(fn, count: int, workers: int | None):
    """Run fn(0..count-1) over a thread pool, results in trial order."""
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _sorted_sizes(cfg: ExperimentConfig) -> list[tuple[int, int]]:
    return sorted(cfg.sizes, key=lambda pn: pn[0])


def run_lsd_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Kolmogorov distances between simulated spectra and the limiting law.

    Passes when the median distance at the largest size is below the
    threshold and the medians decrease from the smallest size up.
    """
    if cfg.kind != "lsd":
        raise ConfigError(f"expected kind 'lsd', got {cfg.kind!r}")
    entry = cfg.entry.build()
    records: list[TrialRecord] = []
    medians: list[float] = []
    per_size_pred = []
    for p, n in _sorted_sizes(cfg):
        spec = filter_spec_at(cfg.filter, p)
        H = filter_spectrum(spec)
        c_n = p / n
        limit = LimitCDF(c_n, H)
        B = build_filter(spec)

        def one_trial(t: int, B=B, spec=spec, n=n, limit=limit, c_n=c_n, H=H):
            seed = cfg.seed + t
            X = sample_entries(spec.m, n, entry, seed)
            sample = singular_values_scaled(B, X, n)
            return seed, ks_distance(EmpiricalCDF(sample.values), c_n, H, limit=limit)

        results = _pool_map(one_trial, cfg.trials, workers)
        for t, (seed, ks) in enumerate(results):
            records.append(TrialRecord("lsd", t, seed, p, n, "ks_distance", float(ks)))
        medians.append(float(np.median([ks for _, ks in results])))
        per_size_pred.append(
            {
                "p": p,
                "n": n,
                "c": c_n,
                "support": [list(iv) for iv in limit.support.intervals],
                "zero_atom": limit.zero_atom,
                "limit_mass": limit.total_mass,
            }
        )
    decreasing = all(b < a for a, b in zip(medians[:-1], medians[1:]))
    passed = medians[-1] < cfg.ks_threshold and (len(medians) == 1 or decreasing)
    summary = {
        "experiment": "lsd",
        "threshold": cfg.ks_threshold,
        "sizes": [list(pn) for pn in _sorted_sizes(cfg)],
        "median_ks": medians,
        "decreasing": decreasing,
        "passed": passed,
    }
    return ExperimentReport(records, summary, {"per_size": per_size_pred})


def run_gap_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Eigenvalue counts inside a spectral gap (or an explicit interval).

    Without an override the widest computed gap is tested after shrinking
    by the margin; passes when the total count at the largest size is 0.
    """
    if cfg.kind != "gap":
        raise ConfigError(f"expected kind 'gap', got {cfg.kind!r}")
    entry = cfg.entry.build()
    records: list[TrialRecord] = []
    totals: list[int] = []
    per_size_pred = []
    tested = None
    margin = None
    outside = None
    for p, n in _sorted_sizes(cfg):
        spec = filter_spec_at(cfg.filter, p)
        H = filter_spectrum(spec)
        c_n = p / n
        support = find_support(c_n, H)
        if cfg.interval is not None:
            a, b = cfg.interval
            margin = cfg.margin_fraction * (b - a)
        else:
            gap = gap_interval(support, margin_fraction=cfg.margin_fraction)
            a, b, margin = gap.a, gap.b, gap.margin
        tested = (a, b)
        outside = is_outside_support((a, b), support, margin)
        B = build_filter(spec)

        def one_trial(t: int, B=B, spec=spec, n=n, a=a, b=b):
            seed = cfg.seed + t
            X = sample_entries(spec.m, n, entry, seed)
            sample = singular_values_scaled(B, X, n)
            return seed, count_in_interval(sample, a, b)

        results = _pool_map(one_trial, cfg.trials, workers)
        for t, (seed, cnt) in enumerate(results):
            records.append(TrialRecord("gap", t, seed, p, n, "gap_count", float(cnt)))
        totals.append(int(sum(cnt for _, cnt in results)))
        per_size_pred.append(
            {
                "p": p,
                "n": n,
                "c": c_n,
                "support": [list(iv) for iv in support.intervals],
                "zero_atom": support.zero_atom_weight,
            }
        )
    summary = {
        "experiment": "gap",
        "sizes": [list(pn) for pn in _sorted_sizes(cfg)],
        "interval": list(tested),
        "margin": margin,
        "interval_outside_support": bool(outside),
        "total_counts": totals,
        "passed": totals[-1] == 0,
    }
    return ExperimentReport(records, summary, {"per_size": per_size_pred})


def run_edge_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Largest-eigenvalue convergence to the right support edge.

    Passes when, at every size, the mean largest eigenvalue sits within
    the tolerance of the predicted edge and no trial deviates by more than
    three tolerances.
    """
    if cfg.kind != "edge":
        raise ConfigError(f"expected kind 'edge', got {cfg.kind!r}")
    entry = cfg.entry.build()
    records: list[TrialRecord] = []
    targets, means, devs, maxdevs = [], [], [], []
    for p, n in _sorted_sizes(cfg):
        spec = filter_spec_at(cfg.filter, p)
        H = filter_spectrum(spec)
        c_n = p / n
        target = largest_edge(c_n, H)
        B = build_filter(spec)

        def one_trial(t: int, B=B, spec=spec, n=n):
            seed = cfg.seed + t
            X = sample_entries(spec.m, n, entry, seed)
            return seed, singular_values_scaled(B, X, n).max()

        results = _pool_map(one_trial, cfg.trials, workers)
        lmax = np.array([v for _, v in results])
        for t, (seed, v) in enumerate(results):
            records.append(TrialRecord("edge", t, seed, p, n, "lambda_max", float(v)))
        targets.append(float(target))
        means.append(float(lmax.mean()))
        devs.append(float(abs(lmax.mean() - target)))
        maxdevs.append(float(np.max(np.abs(lmax - target))))
    tol = cfg.edge_tolerance
    passed = all(d < tol for d in devs) and all(md < 3.0 * tol for md in maxdevs)
    summary = {
        "experiment": "edge",
        "tolerance": tol,
        "sizes": [list(pn) for pn in _sorted_sizes(cfg)],
        "target_edge": targets,
        "mean_lambda_max": means,
        "mean_abs_dev": devs,
        "max_abs_dev": maxdevs,
        "passed": passed,
    }
    return ExperimentReport(records, summary, {"per_size_target": targets})


def run_qf_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Growth rate of quadratic-form fluctuations across sizes.

    Fits the log-log slope of Var(x* B* A B x) against n; the
    concentration bound caps the slope at ~1.  The Gaussian identity
    control is additionally pinned to the exact variance 2n.
    """
    if cfg.kind != "qf":
        raise ConfigError(f"expected kind 'qf', got {cfg.kind!r}")
    entry = cfg.entry.build()
    records: list[TrialRecord] = []
    sizes = _sorted_sizes(cfg)
    variances: list[float] = []
    for idx, (p, n) in enumerate(sizes):
        spec = filter_spec_at(cfg.filter, p)
        B = build_filter(spec)
        A = np.eye(p) if cfg.qf_matrix == "identity" else B @ B.conj().T
        seed = cfg.seed + idx
        devs = quadratic_form_deviation(B, A, entry, cfg.trials, seed)
        for t, v in enumerate(devs):
            records.append(TrialRecord("qf", t, seed, p, n, "qf_abs_deviation", float(v)))
        variances.append(float(np.mean(devs**2)))
    ns = np.array([n for _, n in sizes], dtype=float)
    slope, intercept = np.polyfit(np.log(ns), np.log(variances), 1)
    control = (
        cfg.filter.kind == "identity"
        and cfg.qf_matrix == "identity"
        and cfg.entry.kind == "gaussian_real"
    )
    passed = slope <= QF_SLOPE_MAX
    ratios = [v / (2.0 * n) for v, n in zip(variances, ns)]
    if control:
        passed = (
            passed
            and slope >= QF_SLOPE_MIN_CONTROL
            and all(abs(r - 1.0) <= QF_CONTROL_VAR_RTOL for r in ratios)
        )
    summary = {
        "experiment": "qf",
        "sizes": [list(pn) for pn in sizes],
        "variance": variances,
        "slope": float(slope),
        "intercept": float(intercept),
        "control": control,
        "variance_over_2n": ratios,
        "passed": bool(passed),
    }
    return ExperimentReport(records, summary, {"slope_bound": QF_SLOPE_MAX})


_RUNNERS = {
    "lsd": run_lsd_experiment,
    "gap": run_gap_experiment,
    "edge": run_edge_experiment,
    "qf": run_qf_experiment,
}


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    return _RUNNERS[cfg.kind](cfg, workers=workers)


def density_profile(
    c: float,
    H: SpectralMeasure,
    grid_points: int = 512,
    pad: float = 0.1,
):
    """Plot-ready limiting density over the padded support.

    Returns (grid, density, support); the grid spans the support padded by
    ``pad`` times its total width on both sides, clipped to x > 0.
    """
    if grid_points < 2:
        raise ValueError("need at least two grid points")
    support = find_support(c, H)
    left, right = support.left_edge(), support.right_edge()
    span = right - left
    # stand off from the origin: for c > 1 the law carries a point mass at 0
    # whose smeared peak would swamp a plot-ready profile
    floor = 0.25 * left if left > 0.0 else 1e-9 * span
    lo = max(left - pad * span, floor)
    hi = right + pad * span
    xs = np.linspace(lo, hi, grid_points)
    dens = density_scan(xs, c, H)
    return xs, dens, support


def emit_density_profile(
    c: float,
    H: SpectralMeasure,
    out_path,
    support_path=None,
    grid_points: int = 512,
    pad: float = 0.1,
):
    """Write the density profile and its support endpoints to text files."""
    xs, dens, support = density_profile(c, H, grid_points=grid_points, pad=pad)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_xy(out_path, xs, dens)
    if support_path is None:
        support_path = out_path.with_name(out_path.stem + "_support" + out_path.suffix)
    lines = [f"{a!r} {b!r}" for a, b in support.intervals]
    Path(support_path).write_text("\n".join(lines) + "\n")
    return out_path, Path(support_path)


def write_xy(path, xs, ys) -> Path:
    """Two-column plain-text table."""
    path = Path(path)
    with path.open("w") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{float(x)!r} {float(y)!r}\n")
    return path
