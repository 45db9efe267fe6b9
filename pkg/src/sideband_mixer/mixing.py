"""Closed-form results for elastic scattering of one and two coherent tones.

All amplitudes are Rabi units (rad/s): the scattered wave is reported as
Omega_sc = -i*Gamma1*<sigma->, which folds the hbar/mu conversion of the
voltage picture into the drive-amplitude picture.  The single-tone
reflection coefficient fixes the global phase convention; two-tone results
should be compared through magnitudes and inter-harmonic phase differences,
which is what a spectrum analyzer sees.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .core import (
    AtomParams,
    BichromaticDrive,
    MixingAngles,
    SidebandSpectrum,
    derive_mixing_angles,
)


class DegenerateEvaluationError(ValueError):
    """The stationary-coherence denominator fell below the safe epsilon."""


@dataclass(frozen=True)
class ReflectionPoint:
    """One point of a single-tone reflection measurement, r + t = 1."""

    detuning: float        # rad/s
    r: complex             # reflection coefficient
    t: complex             # transmission coefficient, 1 - r

    def __post_init__(self) -> None:
        if abs(self.t - (1.0 - self.r)) > 1e-9 * max(1.0, abs(self.r)):
            raise ValueError("t must equal 1 - r")

    @classmethod
    def from_r(cls, detuning: float, r: complex) -> "ReflectionPoint":
        return cls(detuning=detuning, r=r, t=1.0 - r)

    @classmethod
    def from_t(cls, detuning: float, t: complex) -> "ReflectionPoint":
        return cls(detuning=detuning, r=1.0 - t, t=t)


def reflection_coefficient(atom: AtomParams, rabi_amp: float, detuning: float) -> complex:
    """Single-tone reflection coefficient of the atom in the line.

        r = (1/2) * lambda*Gamma1 / (|lambda|^2 + Omega^2*Gamma2/Gamma1),
        lambda = Gamma2 + i*detuning.

    Weak resonant drive with Gamma2 = Gamma1/2 gives r = 1: the scattered
    wave fully cancels the transmitted one.  |r| <= 1 whenever
    Gamma2 >= Gamma1/2.
    """
    if not (math.isfinite(rabi_amp) and math.isfinite(detuning)):
        raise ValueError("rabi_amp and detuning must be finite")
    if rabi_amp < 0:
        raise ValueError("rabi_amp must be >= 0")
    gamma1 = atom.gamma1
    gamma2 = atom.gamma2
    lam = complex(gamma2, detuning)
    return 0.5 * lam * gamma1 / (abs(lam) ** 2 + rabi_amp**2 * gamma2 / gamma1)


def stationary_coherence(
    angles: MixingAngles,
    drive: BichromaticDrive,
    time: float,
    eps: float = 1e-12,
) -> complex:
    """Quasi-static stationary coherence <sigma->(t) under two tones.

        <sigma-> = -(sin(theta)/Lambda)
                   * (Om- e^{-i dw t} + Om+ e^{+i dw t})
                   / (1 + sin(theta) cos(2 dw t)),   dw = half_splitting.

    The denominator is positive except exactly at theta = pi/2 with
    cos(2 dw t) = -1; a DegenerateEvaluationError is raised if it falls
    below ``eps``.
    """
    dw = drive.half_splitting
    sin_theta = math.sin(angles.theta)
    denom = 1.0 + sin_theta * math.cos(2.0 * dw * time)
    if denom < eps:
        raise DegenerateEvaluationError(
            f"denominator {denom} below eps={eps} (theta at the pi/2 edge)"
        )
    phase = cmath.exp(-1j * dw * time)
    carrier = drive.omega_minus_amp * phase + drive.omega_plus_amp / phase
    return -angles.coherence_prefactor * carrier / denom


def _series_scale(angles: MixingAngles) -> complex:
    # tan(theta)/Lambda evaluated through the cancelled prefactor, finite
    # even when one tone is absent (theta = 0).
    return angles.coherence_prefactor / math.cos(angles.theta)


def sideband_series_coherence(
    angles: MixingAngles, drive: BichromaticDrive, p_max: int = 40
) -> SidebandSpectrum:
    """Fourier coefficients of <sigma->(t) at e^{+/-i(2p+1) dw t}, p <= p_max.

    Expanding the stationary denominator as a geometric series in
    y = -tan(theta/2) gives, for p >= 0,

        c_{-(2p+1)} = -(tan(theta)/Lambda) y^p (Om- + y Om+)
        c_{+(2p+1)} = -(tan(theta)/Lambda) y^p (y Om- + Om+)

    The omitted tail is bounded by |y|^(p_max+1)/(1-|y|), reported on the
    returned spectrum; |y| < 1 always, so the series converges.
    """
    if p_max < 0:
        raise ValueError("p_max must be >= 0")
    scale = _series_scale(angles)
    y = angles.y
    om_m = drive.omega_minus_amp
    om_p = drive.omega_plus_amp
    entries = []
    y_pow = 1.0
    for p in range(p_max + 1):
        entries.append((-(2 * p + 1), -scale * y_pow * (om_m + y * om_p)))
        entries.append((+(2 * p + 1), -scale * y_pow * (y * om_m + om_p)))
        y_pow *= y
    tail = abs(y) ** (p_max + 1) / (1.0 - abs(y))
    return SidebandSpectrum(entries=tuple(entries), p_max=p_max, tail_bound=tail)


def sideband_amplitude(
    angles: MixingAngles, drive: BichromaticDrive, p: int, sign: int
) -> complex:
    """Scattered Rabi amplitude of the side component at +/-(2p+1).

        Omega_sc_{+/-(2p+1)} = ((-1)^p Gamma1 tan(theta) tan^p(theta/2) / Lambda)
                               * (Om_mp * tan(theta/2) - Om_pm)

    where Om_mp is the amplitude of the opposite tone and Om_pm the same
    tone as the requested side.  Evaluated through the cancelled prefactor,
    so single-tone drives (theta = 0) are safe: only the n = -1 component
    survives there and reproduces the Eq.-style reflection magnitude
    |r|*Om- of :func:`reflection_coefficient`.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    t_half = angles.tan_half
    if sign > 0:
        pair = drive.omega_minus_amp * t_half - drive.omega_plus_amp
    else:
        pair = drive.omega_plus_amp * t_half - drive.omega_minus_amp
    return (-1) ** p * angles.gamma1 * _series_scale(angles) * t_half**p * pair


def sideband_spectrum(
    angles: MixingAngles, drive: BichromaticDrive, p_max: int = 40
) -> SidebandSpectrum:
    """Scattered-wave spectrum: sideband_amplitude for all |n| <= 2*p_max+1."""
    if p_max < 0:
        raise ValueError("p_max must be >= 0")
    entries = []
    for p in range(p_max + 1):
        for sign in (-1, +1):
            entries.append(
                (sign * (2 * p + 1), sideband_amplitude(angles, drive, p, sign))
            )
    tail = abs(angles.y) ** (p_max + 1) / (1.0 - abs(angles.y))
    return SidebandSpectrum(entries=tuple(entries), p_max=p_max, tail_bound=tail)


def consecutive_intensity_ratio(angles: MixingAngles) -> float:
    """Intensity ratio of adjacent side components, |V_{2p+3}|^2/|V_{2p+1}|^2.

    Equals tan^2(theta/2) independently of p and side: the order dependence
    of the sideband amplitudes is entirely the geometric factor
    tan^p(theta/2).  Returns 0 for a single tone (theta = 0).
    """
    return angles.tan_half**2


def weak_drive_flux(atom: AtomParams, drive: BichromaticDrive, p: int) -> float:
    """Weak-drive photon flux <N_-,>^p <N_+>^(p+1) into the +(2p+1) mode.

    <N_k> = Omega_k^2/(Gamma1*Gamma2) is the mean photon number per
    coherence time in tone k.  Valid for Omega_± << Gamma1; the scattered
    flux |Omega_sc|^2/(Gamma1*Gamma2) approaches this value times
    (Gamma1/(2*Gamma2))^2, equal to one at ideal strong coupling.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    g1g2 = atom.gamma1 * atom.gamma2
    n_minus = drive.omega_minus_amp**2 / g1g2
    n_plus = drive.omega_plus_amp**2 / g1g2
    return n_minus**p * n_plus ** (p + 1)


def predicted_peak_drive(atom: AtomParams, p: int) -> float:
    """Asymptotic drive amplitude maximizing order p: sqrt(2)*Gamma1*(2p+1)/4."""
    if p < 0:
        raise ValueError("p must be >= 0")
    return math.sqrt(2.0) * atom.gamma1 * (2 * p + 1) / 4.0


def predicted_splitting(rabi_amp: float, p: int) -> float:
    """Guideline detuning of the split maxima of order p: 4*Omega/(2p+1)."""
    if p < 0:
        raise ValueError("p must be >= 0")
    if rabi_amp < 0:
        raise ValueError("rabi_amp must be >= 0")
    return 4.0 * rabi_amp / (2 * p + 1)


def single_tone_coherence(atom: AtomParams, rabi_amp: float, detuning: float) -> complex:
    """Quasi-static single-tone coherence magnitude anchor.

    Algebraic limit of the two-tone solution with one tone switched off:
    <sigma-> = -lambda*Gamma1*Omega / (2*(Gamma1*|lambda|^2 + Gamma2*Omega^2)).
    Matches -i*Gamma1*<sigma-> = r*Omega in magnitude (the two-tone and
    reflection conventions differ by a global phase only).
    """
    gamma1 = atom.gamma1
    gamma2 = atom.gamma2
    lam = complex(gamma2, detuning)
    denom = gamma1 * abs(lam) ** 2 + gamma2 * rabi_amp**2
    return -lam * gamma1 * rabi_amp / (2.0 * denom)
