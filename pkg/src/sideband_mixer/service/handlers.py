"""Bind the wire models to the toolkit.

Each handler takes a request model and returns a response model; the HTTP
layer in app.py and the local dispatch in the CLI both call these, so the
two paths cannot drift apart.
"""

from __future__ import annotations

import math

import numpy as np

from .. import __version__
from ..bloch import IntegrationSettings
from ..core import AtomParams, BichromaticDrive, khz, mhz, to_mhz, TWO_PI, derive_mixing_angles
from ..fitting import (
    FitResult,
    calibrate_power,
    fit_reflection,
    fit_reflection_shared,
    synth_reflection_curve,
)
from ..mixing import ReflectionPoint, reflection_coefficient, sideband_spectrum
from ..sweeps import (
    SweepSpec,
    SweepTable,
    oracle_check,
    sweep_amplitude,
    sweep_asymmetric,
    sweep_detuning_map,
    table_to_json,
)
from . import models as m

import json


def atom_from_model(model: m.AtomModel) -> AtomParams:
    gamma1 = mhz(model.gamma1_mhz)
    gamma1_nr = mhz(model.gamma1_nr_mhz)
    if model.gamma2_mhz is not None:
        return AtomParams.from_rates(gamma1, mhz(model.gamma2_mhz), gamma1_nr=gamma1_nr)
    if model.gamma_phi_mhz is not None:
        return AtomParams(gamma1=gamma1, gamma1_nr=gamma1_nr, gamma_phi=mhz(model.gamma_phi_mhz))
    return AtomParams(gamma1=gamma1, gamma1_nr=gamma1_nr)


def drive_from_model(model: m.DriveModel) -> BichromaticDrive:
    return BichromaticDrive(
        omega_minus_amp=mhz(model.omega_minus_mhz),
        omega_plus_amp=mhz(model.omega_plus_mhz),
        central_detuning=mhz(model.detuning_mhz),
        half_splitting=khz(model.dsplit_khz),
    )


def grid_from_model(grid: m.GridModel) -> tuple[float, ...]:
    if grid.points == 1:
        return (mhz(grid.start_mhz),)
    if grid.spacing == "log":
        values = np.geomspace(grid.start_mhz, grid.stop_mhz, grid.points)
    else:
        values = np.linspace(grid.start_mhz, grid.stop_mhz, grid.points)
    return tuple(mhz(float(v)) for v in values)


def _settings(rtol: float | None) -> IntegrationSettings | None:
    return IntegrationSettings(rtol=rtol) if rtol is not None else None


def health() -> m.HealthResponse:
    return m.HealthResponse(status="ok", version=__version__)


def spectrum(req: m.SpectrumRequest) -> m.SpectrumResponse:
    atom = atom_from_model(req.atom)
    drive = drive_from_model(req.drive)
    angles = derive_mixing_angles(atom, drive)
    spec = sideband_spectrum(angles, drive, req.pmax)
    entries = [
        m.HarmonicModel(
            n=n, re=a.real, im=a.imag, magnitude=abs(a), intensity=abs(a) ** 2
        )
        for n, a in spec
    ]
    return m.SpectrumResponse(pmax=spec.p_max, tail_bound=spec.tail_bound, entries=entries)


def reflection(req: m.ReflectionRequest) -> m.ReflectionResponse:
    atom = atom_from_model(req.atom)
    detunings = np.linspace(-mhz(req.span_mhz) / 2, mhz(req.span_mhz) / 2, req.points)
    pts = []
    for det in detunings:
        r = reflection_coefficient(atom, mhz(req.rabi_mhz), float(det))
        t = 1.0 - r
        pts.append(
            m.ReflectionCurvePoint(
                detuning_hz=float(det) / TWO_PI,
                re_r=r.real, im_r=r.imag, re_t=t.real, im_t=t.imag,
            )
        )
    return m.ReflectionResponse(points=pts)


def _sweep_response(table: SweepTable) -> m.SweepResponse:
    doc = json.loads(table_to_json(table))
    return m.SweepResponse(spec=doc["spec"], rows=doc["rows"], meta=doc["meta"])


def _common_spec(req: m.SweepCommon, base_drive: BichromaticDrive,
                 grid2: tuple[float, ...] | None = None,
                 param: str = "amplitude") -> SweepSpec:
    return SweepSpec(
        param=param,
        grid=grid_from_model(req.grid),
        grid2=grid2,
        atom=atom_from_model(req.atom),
        base_drive=base_drive,
        orders=tuple(req.orders),
        engine=req.engine,
        oracle_stride=req.oracle_stride,
        workers=req.workers,
        settings=_settings(req.rtol),
    )


def amplitude_sweep(req: m.SweepAmplitudeRequest) -> m.SweepResponse:
    base = BichromaticDrive(
        omega_minus_amp=req.ratio_minus_over_plus,
        omega_plus_amp=1.0,
        central_detuning=mhz(req.detuning_mhz),
        half_splitting=khz(req.dsplit_khz),
    )
    return _sweep_response(sweep_amplitude(_common_spec(req, base)))


def asymmetric_sweep(req: m.SweepAsymmetricRequest) -> m.SweepResponse:
    base = BichromaticDrive(
        omega_minus_amp=1.0,
        omega_plus_amp=1.0,
        central_detuning=mhz(req.detuning_mhz),
        half_splitting=khz(req.dsplit_khz),
    )
    spec = _common_spec(req, base)
    return _sweep_response(sweep_asymmetric(spec, req.offset_db))


def detuning_sweep(req: m.SweepDetuningRequest) -> m.SweepResponse:
    base = BichromaticDrive(
        omega_minus_amp=1.0,
        omega_plus_amp=1.0,
        central_detuning=mhz(req.detuning_mhz),
        half_splitting=khz(req.dsplit_khz),
    )
    # detuning grids may span zero, so they are built linear in MHz here
    spec = _common_spec(
        req, base, grid2=grid_from_model(req.amplitude_grid), param="detuning"
    )
    return _sweep_response(sweep_detuning_map(spec))


def run_oracle_check(req: m.OracleCheckRequest) -> m.OracleCheckResponse:
    atom = atom_from_model(req.atom)
    base = BichromaticDrive(
        omega_minus_amp=1.0,
        omega_plus_amp=1.0,
        central_detuning=mhz(req.detuning_mhz),
        half_splitting=khz(req.dsplit_khz),
    )
    rows, max_dev = oracle_check(
        atom,
        base,
        grid_from_model(req.grid),
        req.orders,
        settings=_settings(req.rtol),
        workers=req.workers,
    )
    return m.OracleCheckResponse(
        max_rel_dev=max_dev,
        rows=[
            m.OracleCheckRow(
                amplitude_mhz=to_mhz(r.grid_value),
                p=r.p,
                side="+" if r.side > 0 else "-",
                analytic_mag=r.analytic_mag,
                oracle_mag=r.oracle_mag,
                rel_dev=r.rel_dev,
            )
            for r in rows
        ],
    )


def _points_from_wire(points: list[m.TransmissionPoint]) -> list[ReflectionPoint]:
    return [
        ReflectionPoint.from_t(TWO_PI * p.detuning_hz, complex(p.re_t, p.im_t))
        for p in points
    ]


def _fit_model(res: FitResult) -> m.FitResultModel:
    return m.FitResultModel(
        gamma1_mhz=to_mhz(res.gamma1),
        gamma2_mhz=to_mhz(res.gamma2),
        rabi_mhz=to_mhz(res.rabi_amp),
        omega01_hz=res.omega01 / TWO_PI,
        gamma1_err_mhz=to_mhz(res.gamma1_err),
        gamma2_err_mhz=to_mhz(res.gamma2_err),
        rabi_err_mhz=to_mhz(res.rabi_amp_err),
        omega01_err_hz=res.omega01_err / TWO_PI,
        residual_norm=res.residual_norm,
        converged=res.converged,
        iterations=res.iterations,
    )


def fit(req: m.FitRequest) -> m.FitResponse:
    curves = [_points_from_wire(c) for c in req.curves]
    guess = None
    if req.guess is not None:
        guess = (
            mhz(req.guess.gamma1_mhz),
            mhz(req.guess.gamma2_mhz),
            mhz(req.guess.rabi_mhz),
            TWO_PI * req.guess.omega01_hz,
        )
    if len(curves) > 1 and req.shared_rates:
        results = fit_reflection_shared(curves, guess)
    else:
        results = [fit_reflection(c, guess) for c in curves]
    return m.FitResponse(results=[_fit_model(r) for r in results])


def calibrate(req: m.CalibrateRequest) -> m.CalibrateResponse:
    cal = calibrate_power([(s.power_db, mhz(s.omega_mhz)) for s in req.samples])
    return m.CalibrateResponse(
        slope_mhz=to_mhz(cal.slope),
        offset_mhz=to_mhz(cal.offset),
        residual_norm_mhz=to_mhz(cal.residual_norm),
        samples=req.samples,
    )


def synth(req: m.SynthRequest) -> m.SynthResponse:
    atom = atom_from_model(req.atom)
    rng = np.random.default_rng(req.seed)
    detunings = np.linspace(-mhz(req.span_mhz) / 2, mhz(req.span_mhz) / 2, req.points)
    points = synth_reflection_curve(
        atom,
        mhz(req.rabi_mhz),
        detunings,
        noise_rel=req.noise,
        rng=rng,
        omega01_offset=khz(req.omega01_offset_khz),
    )
    return m.SynthResponse(
        points=[
            m.TransmissionPoint(
                detuning_hz=p.detuning / TWO_PI, re_t=p.t.real, im_t=p.t.imag
            )
            for p in points
        ]
    )
