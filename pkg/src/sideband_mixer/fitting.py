"""Calibration fits: single-tone reflection curves and the power ladder.

Fitting minimizes complex residuals (real and imaginary parts jointly) of
the reflection coefficient model with damped iterative least squares; the
positive rates are parameterized by their logarithms, so the solver is
unconstrained and smooth.  The physical bound gamma2 >= gamma1/2 is
enforced after the fact: a violating optimum is refit with gamma2 pinned
to gamma1/2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .core import TWO_PI, AtomParams
from .mixing import ReflectionPoint, reflection_coefficient


class FitError(RuntimeError):
    """The least-squares fit failed (non-convergence, degeneracy...)."""


class CalibrationError(RuntimeError):
    """The power ladder is degenerate or non-monotonic."""


@dataclass(frozen=True)
class FitResult:
    """Fitted reflection-curve parameters with 1-sigma uncertainties (rad/s)."""

    gamma1: float
    gamma2: float
    rabi_amp: float
    omega01: float
    gamma1_err: float
    gamma2_err: float
    rabi_amp_err: float
    omega01_err: float
    residual_norm: float
    converged: bool
    iterations: int

    def atom(self) -> AtomParams:
        return AtomParams.from_rates(self.gamma1, self.gamma2, omega01=self.omega01)


@dataclass(frozen=True)
class PowerCalibration:
    """Linear map from generator amplitude 10^(P_dB/20) to Rabi amplitude."""

    samples: tuple[tuple[float, float], ...]   # (power dB, Omega rad/s)
    slope: float
    offset: float
    residual_norm: float


def _model(detunings: np.ndarray, gamma1: float, gamma2: float, om: float,
           omega01: float) -> np.ndarray:
    lam = gamma2 + 1j * (detunings - omega01)
    return 0.5 * lam * gamma1 / (np.abs(lam) ** 2 + om**2 * gamma2 / gamma1)


def _initial_guess(detunings: np.ndarray, r: np.ndarray) -> tuple[float, float, float, float]:
    # Resonance from the |r| peak, Gamma2 from its half width, Omega from
    # the on-resonance depth inverted through the reflection formula.
    mag = np.abs(r)
    i0 = int(np.argmax(mag))
    omega01 = float(detunings[i0])
    peak = mag[i0]
    above = mag >= 0.5 * peak
    width = float(detunings[above].max() - detunings[above].min())
    span = float(detunings.max() - detunings.min())
    gamma2 = 0.5 * width if width > 0 else 0.1 * span
    gamma2 = max(gamma2, 1e-6 * span if span > 0 else 1.0)
    gamma1 = 2.0 * gamma2
    om_sq = gamma1 * max(gamma1 / (2.0 * max(peak, 1e-3)) - gamma2, (0.05 * gamma2) ** 2 / gamma1)
    return gamma1, gamma2, math.sqrt(om_sq), omega01


def _covariance(jac: np.ndarray, residuals: np.ndarray, n_params: int) -> np.ndarray:
    m = residuals.size
    jtj = jac.T @ jac
    cond = np.linalg.cond(jtj)
    if not np.isfinite(cond) or cond > 1e14:
        raise FitError("singular Jacobian at the optimum (data uninformative)")
    dof = max(m - n_params, 1)
    s_sq = float(residuals @ residuals) / dof
    return np.linalg.inv(jtj) * s_sq


def _unpack(points: Sequence[ReflectionPoint]) -> tuple[np.ndarray, np.ndarray]:
    det = np.array([p.detuning for p in points], dtype=float)
    r = np.array([p.r for p in points], dtype=complex)
    return det, r


def fit_reflection(
    data: Sequence[ReflectionPoint],
    initial_guess: FitResult | tuple[float, float, float, float] | None = None,
    max_iterations: int = 2000,
) -> FitResult:
    """Fit (Gamma1, Gamma2, Omega, omega01) to a complex reflection curve.

    Parameters
    ----------
    data : sequence of ReflectionPoint
        At least 5 points spanning the resonance.
    initial_guess : optional
        A FitResult or (gamma1, gamma2, rabi_amp, omega01) tuple; when
        omitted a heuristic guess is derived from the data.

    Raises
    ------
    FitError
        On non-convergence or a singular Jacobian.
    """
    if len(data) < 5:
        raise FitError("need at least 5 data points spanning the resonance")
    det, r = _unpack(data)

    if initial_guess is None:
        g1_0, g2_0, om_0, w01_0 = _initial_guess(det, r)
    elif isinstance(initial_guess, FitResult):
        g1_0, g2_0, om_0, w01_0 = (
            initial_guess.gamma1,
            initial_guess.gamma2,
            initial_guess.rabi_amp,
            initial_guess.omega01,
        )
    else:
        g1_0, g2_0, om_0, w01_0 = initial_guess
    for name, v in (("gamma1", g1_0), ("gamma2", g2_0), ("rabi_amp", om_0)):
        if not (math.isfinite(v) and v > 0):
            raise FitError(f"initial guess for {name} must be finite and > 0")
    if not math.isfinite(w01_0):
        raise FitError("initial guess for omega01 must be finite")

    # The log-rates are O(1) parameters; omega01 is scaled by the width
    # guess so the Jacobian columns are comparably sized.
    w_scale = g2_0

    def residuals(q: np.ndarray) -> np.ndarray:
        g1, g2, om = np.exp(q[:3])
        d = _model(det, g1, g2, om, q[3] * w_scale) - r
        return np.concatenate([d.real, d.imag])

    q0 = np.array([math.log(g1_0), math.log(g2_0), math.log(om_0), w01_0 / w_scale])
    res = least_squares(
        residuals, q0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
        max_nfev=max_iterations,
    )
    g1, g2, om = np.exp(res.x[:3])
    w01 = float(res.x[3] * w_scale)

    pinned = g2 < 0.5 * g1
    if pinned:
        # Active physical bound: refit on the gamma2 = gamma1/2 boundary.
        def residuals_pinned(q: np.ndarray) -> np.ndarray:
            g1p, omp = np.exp(q[:2])
            d = _model(det, g1p, 0.5 * g1p, omp, q[2] * w_scale) - r
            return np.concatenate([d.real, d.imag])

        res = least_squares(
            residuals_pinned,
            np.array([math.log(g1), math.log(om), w01 / w_scale]),
            method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
            max_nfev=max_iterations,
        )
        g1, om = np.exp(res.x[:2])
        g2 = 0.5 * g1
        w01 = float(res.x[2] * w_scale)

    if not res.success:
        raise FitError(f"fit did not converge: {res.message}")

    cov = _covariance(res.jac, res.fun, res.x.size)
    sig = np.sqrt(np.diag(cov))
    if pinned:
        g1_err, om_err, w01_err = g1 * sig[0], om * sig[1], sig[2] * w_scale
        g2_err = 0.5 * g1_err
    else:
        g1_err, g2_err, om_err, w01_err = (
            g1 * sig[0], g2 * sig[1], om * sig[2], sig[3] * w_scale,
        )

    return FitResult(
        gamma1=float(g1),
        gamma2=float(g2),
        rabi_amp=float(om),
        omega01=w01,
        gamma1_err=float(g1_err),
        gamma2_err=float(g2_err),
        rabi_amp_err=float(om_err),
        omega01_err=float(w01_err),
        residual_norm=float(np.linalg.norm(res.fun)),
        converged=bool(res.success),
        iterations=int(res.nfev),
    )


def fit_reflection_shared(
    curves: Sequence[Sequence[ReflectionPoint]],
    initial_guess: FitResult | tuple[float, float, float, float] | None = None,
    max_iterations: int = 5000,
) -> list[FitResult]:
    """Jointly fit several curves sharing (Gamma1, Gamma2, omega01).

    Each curve keeps its own Rabi amplitude; this is the default mode for
    a power ladder measured on one device.  Returns one FitResult per
    curve (shared quantities repeat).
    """
    if not curves:
        raise FitError("no curves given")
    if len(curves) == 1:
        return [fit_reflection(curves[0], initial_guess)]
    per_curve = [_unpack(c) for c in curves]
    for det, _ in per_curve:
        if det.size < 5:
            raise FitError("every curve needs at least 5 points")

    if initial_guess is None:
        g1_0, g2_0, om_0, w01_0 = _initial_guess(*per_curve[0])
    elif isinstance(initial_guess, FitResult):
        g1_0, g2_0, om_0, w01_0 = (
            initial_guess.gamma1, initial_guess.gamma2,
            initial_guess.rabi_amp, initial_guess.omega01,
        )
    else:
        g1_0, g2_0, om_0, w01_0 = initial_guess

    n_curves = len(curves)
    w_scale = g2_0

    def residuals(q: np.ndarray) -> np.ndarray:
        g1, g2 = np.exp(q[:2])
        w01 = q[2] * w_scale
        chunks = []
        for i, (det, r) in enumerate(per_curve):
            om = math.exp(q[3 + i])
            d = _model(det, g1, g2, om, w01) - r
            chunks.append(d.real)
            chunks.append(d.imag)
        return np.concatenate(chunks)

    q0 = np.concatenate(
        [[math.log(g1_0), math.log(g2_0), w01_0 / w_scale], [math.log(om_0)] * n_curves]
    )
    res = least_squares(
        residuals, q0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
        max_nfev=max_iterations,
    )
    if not res.success:
        raise FitError(f"joint fit did not converge: {res.message}")
    g1, g2 = np.exp(res.x[:2])
    if g2 < 0.5 * g1:
        g2 = 0.5 * g1
    w01 = float(res.x[2] * w_scale)
    cov = _covariance(res.jac, res.fun, res.x.size)
    sig = np.sqrt(np.diag(cov))

    results = []
    for i in range(n_curves):
        om = math.exp(res.x[3 + i])
        results.append(
            FitResult(
                gamma1=float(g1),
                gamma2=float(g2),
                rabi_amp=float(om),
                omega01=w01,
                gamma1_err=float(g1 * sig[0]),
                gamma2_err=float(g2 * sig[1]),
                rabi_amp_err=float(om * sig[3 + i]),
                omega01_err=float(sig[2] * w_scale),
                residual_norm=float(np.linalg.norm(res.fun)),
                converged=bool(res.success),
                iterations=int(res.nfev),
            )
        )
    return results


def calibrate_power(fits: Sequence[tuple[float, FitResult | float]]) -> PowerCalibration:
    """Least-squares line Omega = a*10^(P/20) + b through the power ladder.

    ``fits`` pairs generator powers (dB) with fitted results (or bare Rabi
    amplitudes).  The offset b is expected to be ~0 for a linear chain.

    Raises
    ------
    CalibrationError
        With fewer than 2 samples, a single distinct power, or a ladder
        whose Omega is not strictly increasing with power.
    """
    if len(fits) < 2:
        raise CalibrationError("need at least 2 (power, fit) samples")
    power = np.array([p for p, _ in fits], dtype=float)
    omega = np.array(
        [f.rabi_amp if isinstance(f, FitResult) else float(f) for _, f in fits]
    )
    order = np.argsort(power)
    power, omega = power[order], omega[order]
    if np.unique(power).size < 2:
        raise CalibrationError("degenerate ladder: a single distinct power")
    if not np.all(np.diff(omega) > 0):
        raise CalibrationError("Omega must be strictly increasing with power")
    x = 10.0 ** (power / 20.0)
    a_mat = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(a_mat, omega, rcond=None)
    resid = a_mat @ coef - omega
    return PowerCalibration(
        samples=tuple(zip(power.tolist(), omega.tolist())),
        slope=float(coef[0]),
        offset=float(coef[1]),
        residual_norm=float(np.linalg.norm(resid)),
    )


def synth_reflection_curve(
    atom: AtomParams,
    rabi_amp: float,
    detunings: np.ndarray | Sequence[float],
    noise_rel: float = 0.0,
    rng: np.random.Generator | None = None,
    omega01_offset: float = 0.0,
) -> list[ReflectionPoint]:
    """Synthesize a (optionally noisy) reflection curve from the model.

    Gaussian noise of ``noise_rel`` relative to |r| is added independently
    to both quadratures.  Pass a seeded Generator for reproducibility.
    """
    det = np.asarray(detunings, dtype=float)
    r = np.array(
        [reflection_coefficient(atom, rabi_amp, d - omega01_offset) for d in det]
    )
    if noise_rel:
        if rng is None:
            rng = np.random.default_rng()
        scale = noise_rel * np.abs(r)
        r = r + scale * (rng.standard_normal(det.size) + 1j * rng.standard_normal(det.size))
    return [ReflectionPoint.from_r(float(d), complex(v)) for d, v in zip(det, r)]


# CSV interface: header detuning_hz,re_t,im_t -- transmission samples, with
# the reflection recovered through r = 1 - t.

def read_reflection_csv(path: str | Path) -> list[ReflectionPoint]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"detuning_hz", "re_t", "im_t"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"{path}: expected CSV header with columns detuning_hz,re_t,im_t"
            )
        points = []
        for row in reader:
            det = TWO_PI * float(row["detuning_hz"])
            t = complex(float(row["re_t"]), float(row["im_t"]))
            points.append(ReflectionPoint.from_t(det, t))
    if not points:
        raise ValueError(f"{path}: no data rows")
    return points


def write_reflection_csv(path: str | Path, points: Sequence[ReflectionPoint]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["detuning_hz", "re_t", "im_t"])
        for p in points:
            writer.writerow(
                [repr(p.detuning / TWO_PI), repr(p.t.real), repr(p.t.imag)]
            )
    return path
