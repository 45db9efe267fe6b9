"""HTTP surface: one POST endpoint per toolkit operation."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bloch import OracleError
from ..fitting import CalibrationError, FitError
from . import handlers
from . import models as m


def create_app() -> FastAPI:
    app = FastAPI(title="sideband-mixer", version=__version__)

    def guarded(fn, req):
        try:
            return fn(req)
        except (ValueError, FitError, CalibrationError, OracleError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/v1/health", response_model=m.HealthResponse)
    def health() -> m.HealthResponse:
        return handlers.health()

    @app.post("/v1/spectrum", response_model=m.SpectrumResponse)
    def spectrum(req: m.SpectrumRequest) -> m.SpectrumResponse:
        return guarded(handlers.spectrum, req)

    @app.post("/v1/reflection", response_model=m.ReflectionResponse)
    def reflection(req: m.ReflectionRequest) -> m.ReflectionResponse:
        return guarded(handlers.reflection, req)

    @app.post("/v1/sweep/amplitude", response_model=m.SweepResponse)
    def sweep_amplitude(req: m.SweepAmplitudeRequest) -> m.SweepResponse:
        return guarded(handlers.amplitude_sweep, req)

    @app.post("/v1/sweep/asymmetric", response_model=m.SweepResponse)
    def sweep_asymmetric(req: m.SweepAsymmetricRequest) -> m.SweepResponse:
        return guarded(handlers.asymmetric_sweep, req)

    @app.post("/v1/sweep/detuning", response_model=m.SweepResponse)
    def sweep_detuning(req: m.SweepDetuningRequest) -> m.SweepResponse:
        return guarded(handlers.detuning_sweep, req)

    @app.post("/v1/oracle-check", response_model=m.OracleCheckResponse)
    def oracle_check(req: m.OracleCheckRequest) -> m.OracleCheckResponse:
        return guarded(handlers.run_oracle_check, req)

    @app.post("/v1/fit", response_model=m.FitResponse)
    def fit(req: m.FitRequest) -> m.FitResponse:
        return guarded(handlers.fit, req)

    @app.post("/v1/calibrate", response_model=m.CalibrateResponse)
    def calibrate(req: m.CalibrateRequest) -> m.CalibrateResponse:
        return guarded(handlers.calibrate, req)

    @app.post("/v1/synth", response_model=m.SynthResponse)
    def synth(req: m.SynthRequest) -> m.SynthResponse:
        return guarded(handlers.synth, req)

    return app


app = create_app()
