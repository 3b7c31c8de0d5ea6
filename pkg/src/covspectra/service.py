"""HTTP service exposing the solver, support analysis, and campaigns.

Every response is plain JSON; complex values travel as [re, im] pairs.
Domain failures (poles, non-convergence, missing gaps, bad configs) map
to 400 with a detail message, schema violations to 422.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .eig import count_in_interval
from .errors import ConfigError, SpectraError
from .experiments import (
    ExperimentConfig,
    FilterConfig,
    density_profile,
    filter_spec_at,
    run_experiment,
)
from .measures import SpectralMeasure
from .models import EntryDistribution, ModelSpec, build_filter, sample_entries
from .models import simulate_spectrum as _simulate_spectrum
from .stieltjes import SolverOptions, solve_companion
from .support import find_support


class MeasurePayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    atoms: list[tuple[float, float]] = Field(min_length=1, description="(location, weight) pairs")

    def build(self) -> SpectralMeasure:
        return SpectralMeasure(self.atoms)


class SolveRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    z: tuple[float, float] = Field(description="upper-half-plane point as [re, im]")
    c: float = Field(gt=0)
    measure: MeasurePayload
    tol: float = Field(default=1e-12, gt=0)
    max_iters: int = Field(default=10_000, ge=1)
    damping: float = Field(default=0.5, gt=0, le=1)


class SolveResponse(BaseModel):
    m: tuple[float, float]
    m_companion: tuple[float, float]
    residual: float


class DensityRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c: float = Field(gt=0)
    measure: MeasurePayload
    x: list[float] = Field(min_length=1)


class DensityResponse(BaseModel):
    density: list[float]


class SupportRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c: float = Field(gt=0)
    measure: MeasurePayload


class SupportResponse(BaseModel):
    intervals: list[tuple[float, float]]
    zero_atom_weight: float


class ProfileRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c: float = Field(gt=0)
    measure: MeasurePayload
    grid_points: int = Field(default=512, ge=2)
    pad: float = Field(default=0.1, ge=0)


class ProfileResponse(BaseModel):
    x: list[float]
    density: list[float]
    support: SupportResponse


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    filter: FilterConfig
    entry_kind: Literal["gaussian_real", "gaussian_complex", "rademacher", "student_t"] = (
        "gaussian_real"
    )
    dof: float = 8.0
    p: int = Field(ge=2)
    n: int = Field(ge=2)
    seed: int = Field(ge=0, lt=2**64)
    interval: Optional[tuple[float, float]] = None


class SimulateResponse(BaseModel):
    eigenvalues: list[float]
    interval_count: Optional[int] = None


class ExperimentRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: ExperimentConfig
    workers: Optional[int] = Field(default=None, ge=1)


class RecordPayload(BaseModel):
    experiment: str
    trial: int
    seed: int
    p: int
    n: int
    statistic_name: str
    value: float


class ExperimentResponse(BaseModel):
    records: list[RecordPayload]
    summary: dict
    predicted: dict
    passed: bool


def create_app() -> FastAPI:
    app = FastAPI(title="covspectra", version=__version__)

    @app.exception_handler(SpectraError)
    async def _domain_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    def _fail(exc: Exception):
        raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest):
        try:
            pair = solve_companion(
                complex(*req.z),
                req.c,
                req.measure.build(),
                SolverOptions(tol=req.tol, max_iters=req.max_iters, damping=req.damping),
            )
        except (SpectraError, ValueError) as exc:
            _fail(exc)
        return SolveResponse(
            m=(pair.m.real, pair.m.imag),
            m_companion=(pair.m_companion.real, pair.m_companion.imag),
            residual=pair.residual,
        )

    @app.post("/density", response_model=DensityResponse)
    def density(req: DensityRequest):
        from .stieltjes import density_at

        try:
            H = req.measure.build()
            vals = [density_at(x, req.c, H) for x in req.x]
        except (SpectraError, ValueError) as exc:
            _fail(exc)
        return DensityResponse(density=vals)

    @app.post("/support", response_model=SupportResponse)
    def support(req: SupportRequest):
        try:
            s = find_support(req.c, req.measure.build())
        except (SpectraError, ValueError) as exc:
            _fail(exc)
        return SupportResponse(intervals=list(s.intervals), zero_atom_weight=s.zero_atom_weight)

    @app.post("/density-profile", response_model=ProfileResponse)
    def profile(req: ProfileRequest):
        try:
            xs, dens, s = density_profile(
                req.c, req.measure.build(), grid_points=req.grid_points, pad=req.pad
            )
        except (SpectraError, ValueError) as exc:
            _fail(exc)
        return ProfileResponse(
            x=xs.tolist(),
            density=dens.tolist(),
            support=SupportResponse(
                intervals=list(s.intervals), zero_atom_weight=s.zero_atom_weight
            ),
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        try:
            spec = filter_spec_at(req.filter, req.p)
            entry = EntryDistribution(kind=req.entry_kind, dof=req.dof)
            model = ModelSpec(filter=spec, n=req.n, entry=entry, seed=req.seed)
            spectrum = _simulate_spectrum(model)
            cnt = None
            if req.interval is not None:
                cnt = count_in_interval(spectrum, *req.interval)
        except (SpectraError, ValueError) as exc:
            _fail(exc)
        return SimulateResponse(eigenvalues=spectrum.values.tolist(), interval_count=cnt)

    @app.post("/experiments/run", response_model=ExperimentResponse)
    def experiments_run(req: ExperimentRequest):
        try:
            report = run_experiment(req.config, workers=req.workers)
        except (SpectraError, ConfigError, ValueError) as exc:
            _fail(exc)
        return ExperimentResponse(
            records=[
                RecordPayload(
                    experiment=r.experiment,
                    trial=r.trial,
                    seed=r.seed,
                    p=r.p,
                    n=r.n,
                    statistic_name=r.statistic,
                    value=r.value,
                )
                for r in report.records
            ],
            summary=report.summary,
            predicted=report.predicted,
            passed=report.passed,
        )

    return app


app = create_app()
