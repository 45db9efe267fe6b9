"""Request/response wire models.

This is the one boundary where frequencies are "/2pi" values in MHz or kHz
(matching how the rates are quoted in practice); conversion to angular
rad/s happens exactly once, in the handlers.  Detunings inside CSV-style
transmission data are plain Hz, like the file format.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class AtomModel(BaseModel):
    gamma1_mhz: float = Field(2.2, gt=0, description="Gamma1 / 2pi in MHz")
    gamma2_mhz: float | None = Field(
        None, gt=0, description="Gamma2 / 2pi in MHz; default Gamma1/2"
    )
    gamma1_nr_mhz: float = Field(0.0, ge=0)
    gamma_phi_mhz: float | None = Field(None, ge=0)

    @model_validator(mode="after")
    def _consistent_rates(self) -> "AtomModel":
        if self.gamma2_mhz is not None and self.gamma_phi_mhz is not None:
            raise ValueError("give either gamma2_mhz or gamma_phi_mhz, not both")
        if self.gamma2_mhz is not None:
            floor = 0.5 * (self.gamma1_mhz + self.gamma1_nr_mhz)
            if self.gamma2_mhz < floor - 1e-12 * self.gamma1_mhz:
                raise ValueError("gamma2_mhz must be >= (gamma1+gamma1_nr)/2")
        return self


class DriveModel(BaseModel):
    omega_minus_mhz: float = Field(ge=0, description="Omega- / 2pi in MHz")
    omega_plus_mhz: float = Field(ge=0, description="Omega+ / 2pi in MHz")
    detuning_mhz: float = Field(0.0, description="central detuning / 2pi in MHz")
    dsplit_khz: float = Field(5.0, gt=0, description="half tone splitting / 2pi in kHz")


class HarmonicModel(BaseModel):
    n: int
    re: float
    im: float
    magnitude: float              # rad/s, Rabi units
    intensity: float              # magnitude^2


class SpectrumRequest(BaseModel):
    atom: AtomModel = AtomModel()
    drive: DriveModel
    pmax: int = Field(4, ge=0)


class SpectrumResponse(BaseModel):
    units: str = "rad/s"
    pmax: int
    tail_bound: float
    entries: list[HarmonicModel]


class ReflectionRequest(BaseModel):
    atom: AtomModel = AtomModel()
    rabi_mhz: float = Field(ge=0)
    span_mhz: float = Field(12.0, gt=0)
    points: int = Field(201, ge=2)


class TransmissionPoint(BaseModel):
    detuning_hz: float
    re_t: float
    im_t: float


class ReflectionCurvePoint(BaseModel):
    detuning_hz: float
    re_r: float
    im_r: float
    re_t: float
    im_t: float


class ReflectionResponse(BaseModel):
    points: list[ReflectionCurvePoint]


class GridModel(BaseModel):
    start_mhz: float
    stop_mhz: float
    points: int = Field(ge=1)
    spacing: str = "log"

    @model_validator(mode="after")
    def _valid(self) -> "GridModel":
        if self.spacing not in ("log", "linear"):
            raise ValueError("spacing must be 'log' or 'linear'")
        if self.stop_mhz <= self.start_mhz and self.points > 1:
            raise ValueError("stop_mhz must exceed start_mhz")
        if self.spacing == "log" and self.start_mhz <= 0:
            raise ValueError("log spacing needs start_mhz > 0")
        return self


class SweepCommon(BaseModel):
    atom: AtomModel = AtomModel()
    dsplit_khz: float = Field(5.0, gt=0)
    detuning_mhz: float = 0.0
    grid: GridModel
    orders: list[int] = [1, 2, 3, 4]
    engine: str = "analytic"
    oracle_stride: int = Field(4, ge=1)
    workers: int = Field(1, ge=1)
    rtol: float | None = Field(None, gt=0)


class SweepAmplitudeRequest(SweepCommon):
    ratio_minus_over_plus: float = Field(
        1.0, gt=0, description="fixed Omega-/Omega+ amplitude ratio"
    )


class SweepAsymmetricRequest(SweepCommon):
    offset_db: float = 1.0


class SweepDetuningRequest(SweepCommon):
    # here `grid` is the detuning axis; the amplitude rows come extra
    amplitude_grid: GridModel


class SweepResponse(BaseModel):
    spec: dict
    rows: list[dict]
    meta: dict


class OracleCheckRequest(BaseModel):
    atom: AtomModel = AtomModel()
    dsplit_khz: float = Field(5.0, gt=0)
    detuning_mhz: float = 0.0
    grid: GridModel = GridModel(start_mhz=0.1, stop_mhz=8.0, points=12, spacing="log")
    orders: list[int] = [0, 1, 2, 3, 4]
    workers: int = Field(1, ge=1)
    rtol: float | None = Field(None, gt=0)


class OracleCheckRow(BaseModel):
    amplitude_mhz: float
    p: int
    side: str
    analytic_mag: float
    oracle_mag: float
    rel_dev: float


class OracleCheckResponse(BaseModel):
    max_rel_dev: float
    rows: list[OracleCheckRow]


class FitGuess(BaseModel):
    gamma1_mhz: float = Field(gt=0)
    gamma2_mhz: float = Field(gt=0)
    rabi_mhz: float = Field(gt=0)
    omega01_hz: float = 0.0


class FitRequest(BaseModel):
    curves: list[list[TransmissionPoint]]
    shared_rates: bool = True
    guess: FitGuess | None = None

    @model_validator(mode="after")
    def _nonempty(self) -> "FitRequest":
        if not self.curves or any(len(c) < 5 for c in self.curves):
            raise ValueError("every curve needs at least 5 points")
        return self


class FitResultModel(BaseModel):
    gamma1_mhz: float
    gamma2_mhz: float
    rabi_mhz: float
    omega01_hz: float
    gamma1_err_mhz: float
    gamma2_err_mhz: float
    rabi_err_mhz: float
    omega01_err_hz: float
    residual_norm: float
    converged: bool
    iterations: int


class FitResponse(BaseModel):
    results: list[FitResultModel]


class CalibrationSample(BaseModel):
    power_db: float
    omega_mhz: float = Field(gt=0)


class CalibrateRequest(BaseModel):
    samples: list[CalibrationSample]

    @model_validator(mode="after")
    def _enough(self) -> "CalibrateRequest":
        if len(self.samples) < 2:
            raise ValueError("need at least 2 calibration samples")
        return self


class CalibrateResponse(BaseModel):
    slope_mhz: float              # MHz of Omega/2pi per unit 10^(P/20)
    offset_mhz: float
    residual_norm_mhz: float
    samples: list[CalibrationSample]


class SynthRequest(BaseModel):
    atom: AtomModel = AtomModel()
    rabi_mhz: float = Field(gt=0)
    span_mhz: float = Field(12.0, gt=0)
    points: int = Field(201, ge=5)
    noise: float = Field(0.01, ge=0)
    seed: int = 0
    omega01_offset_khz: float = 0.0


class SynthResponse(BaseModel):
    points: list[TransmissionPoint]


class HealthResponse(BaseModel):
    status: str
    version: str
