"""Shared physical parameters and derived quantities.

Everything carries angular units (rad/s).  Drive strengths are Rabi
amplitudes Omega = mu*V/hbar, and scattered amplitudes are reported in the
same Rabi units, Omega_sc = -i*Gamma1*<sigma->, so the dipole moment never
enters a computation; it is kept only as an optional reporting constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

TWO_PI = 2.0 * math.pi

# sin(theta)/Lambda stays finite as Omega-*Omega+ -> 0, but the arcsine
# argument may exceed 1 by roundoff; anything above this slack is a bug.
_ARCSINE_SLACK = 1e-9


def mhz(value: float) -> float:
    """Convert an f/2pi value in MHz to an angular frequency in rad/s."""
    return TWO_PI * value * 1e6


def khz(value: float) -> float:
    """Convert an f/2pi value in kHz to an angular frequency in rad/s."""
    return TWO_PI * value * 1e3


def to_mhz(omega: float) -> float:
    """Convert an angular frequency in rad/s to an f/2pi value in MHz."""
    return omega / (TWO_PI * 1e6)


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if value is not None and not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class AtomParams:
    """Relaxation and dephasing rates of the two-level scatterer.

    Attributes
    ----------
    gamma1 : float
        Radiative relaxation rate into the line, rad/s.  Must be > 0.
    gamma1_nr : float
        Non-radiative relaxation rate, rad/s.
    gamma_phi : float
        Pure dephasing rate, rad/s.
    omega01 : float or None
        Transition angular frequency; used only when reporting absolute
        frequencies, never in the mixing formulas.
    dipole_moment : float or None
        Optional conversion constant between Rabi and voltage amplitudes.
        Unused by default (the toolkit works in Rabi units throughout).
    """

    gamma1: float
    gamma1_nr: float = 0.0
    gamma_phi: float = 0.0
    omega01: float | None = None
    dipole_moment: float | None = None

    def __post_init__(self) -> None:
        _require_finite(
            gamma1=self.gamma1,
            gamma1_nr=self.gamma1_nr,
            gamma_phi=self.gamma_phi,
            omega01=self.omega01,
        )
        if self.gamma1 <= 0:
            raise ValueError("gamma1 must be > 0")
        if self.gamma1_nr < 0:
            raise ValueError("gamma1_nr must be >= 0")
        if self.gamma_phi < 0:
            raise ValueError("gamma_phi must be >= 0")

    @property
    def gamma2(self) -> float:
        """Full dephasing rate (gamma1 + gamma1_nr)/2 + gamma_phi, >= gamma1/2."""
        return 0.5 * (self.gamma1 + self.gamma1_nr) + self.gamma_phi

    @classmethod
    def from_rates(cls, gamma1: float, gamma2: float, **kwargs) -> "AtomParams":
        """Build from (gamma1, gamma2), attributing the excess to pure dephasing.

        Raises ValueError if gamma2 < gamma1/2, which no physical split of
        the rates can produce.
        """
        _require_finite(gamma1=gamma1, gamma2=gamma2)
        excess = gamma2 - 0.5 * gamma1
        if excess < -1e-12 * max(gamma1, 1.0):
            raise ValueError("gamma2 must be >= gamma1/2")
        return cls(gamma1=gamma1, gamma_phi=max(excess, 0.0), **kwargs)


def dephasing_rate(atom: AtomParams) -> float:
    """Return the full dephasing rate Gamma2 of the atom, rad/s."""
    return atom.gamma2


@dataclass(frozen=True)
class BichromaticDrive:
    """Two coherent tones at omega_d +/- half_splitting.

    Attributes
    ----------
    omega_minus_amp, omega_plus_amp : float
        Rabi amplitudes of the lower/upper tone, rad/s, >= 0.
    central_detuning : float
        Detuning of the central frequency from the atomic transition, rad/s.
    half_splitting : float
        Half the tone separation, rad/s.  Strictly positive: degenerate
        (equal-frequency) tones are rejected as a distinct case.
    """

    omega_minus_amp: float
    omega_plus_amp: float
    central_detuning: float = 0.0
    half_splitting: float = 0.0

    def __post_init__(self) -> None:
        _require_finite(
            omega_minus_amp=self.omega_minus_amp,
            omega_plus_amp=self.omega_plus_amp,
            central_detuning=self.central_detuning,
            half_splitting=self.half_splitting,
        )
        if self.omega_minus_amp < 0 or self.omega_plus_amp < 0:
            raise ValueError("Rabi amplitudes must be >= 0")
        if self.half_splitting <= 0:
            raise ValueError(
                "half_splitting must be > 0 (equal-frequency tones are a "
                "degenerate case this toolkit rejects)"
            )

    @property
    def envelope_period(self) -> float:
        """Period pi/half_splitting of the drive-envelope magnitude, s."""
        return math.pi / self.half_splitting


@dataclass(frozen=True)
class MixingAngles:
    """Derived quantities of the stationary two-tone solution.

    ``coherence_prefactor`` is the combined quantity sin(theta)/Lambda.  It
    is stored instead of Lambda because Lambda alone diverges in the
    single-tone limit while the combination stays finite:

        sin(theta)/Lambda = lambda*Gamma1 / (2*(Gamma1*|lambda|^2
                             + Gamma2*(Om-^2 + Om+^2)))

    The originating rates are carried along so downstream amplitude
    formulas do not need the AtomParams again.
    """

    lam: complex           # Gamma2 + i*central_detuning, rad/s
    theta: float           # arcsine mixing angle, rad, in [0, pi/2]
    y: float               # -tan(theta/2), in (-1, 0]
    coherence_prefactor: complex  # sin(theta)/Lambda, finite for all inputs
    gamma1: float
    gamma2: float

    @property
    def tan_half(self) -> float:
        """tan(theta/2) = -y; the per-order geometric decay factor."""
        return -self.y


def derive_mixing_angles(atom: AtomParams, drive: BichromaticDrive) -> MixingAngles:
    """Compute the mixing angle, series factor and singularity-free prefactor.

    theta = arcsin(2*Gamma2*Om-*Om+ / (Gamma1*|lambda|^2 + Gamma2*(Om-^2+Om+^2)))

    The arcsine argument is provably in [0, 1): by AM-GM the denominator
    dominates the numerator, strictly so because Gamma1*|lambda|^2 > 0.

    Raises
    ------
    ValueError
        If both drive amplitudes are zero (no mixing to describe).
    """
    om_m = drive.omega_minus_amp
    om_p = drive.omega_plus_amp
    if om_m == 0.0 and om_p == 0.0:
        raise ValueError("at least one drive amplitude must be nonzero")

    gamma1 = atom.gamma1
    gamma2 = atom.gamma2
    lam = complex(gamma2, drive.central_detuning)
    # grouped so that swapping the two amplitudes is exactly neutral
    denom = gamma1 * (lam.real**2 + lam.imag**2) + gamma2 * (om_m**2 + om_p**2)
    arg = 2.0 * gamma2 * (om_m * om_p) / denom
    if arg > 1.0 + _ARCSINE_SLACK:
        raise AssertionError(f"arcsine argument {arg} > 1; invariant violated")
    theta = math.asin(min(arg, 1.0))

    return MixingAngles(
        lam=lam,
        theta=theta,
        y=-math.tan(0.5 * theta),
        coherence_prefactor=lam * gamma1 / (2.0 * denom),
        gamma1=gamma1,
        gamma2=gamma2,
    )


@dataclass(frozen=True)
class BlochState:
    """Expectation values (<sigma->, <sigma_z>) of the two-level atom."""

    coherence: complex
    inversion: float

    def bloch_excess(self) -> float:
        """How far the state sits outside the Bloch sphere (<= 0 inside).

        Computes 4*|<sigma->|^2 + <sigma_z>^2 - 1; physical states satisfy
        excess <= 0 up to numerical tolerance.
        """
        return 4.0 * abs(self.coherence) ** 2 + self.inversion**2 - 1.0


@dataclass(frozen=True)
class SidebandSpectrum:
    """Complex amplitudes of the odd harmonics, indexed by n = +/-(2p+1).

    Amplitudes are in Rabi units (rad/s).  Entries are ordered by
    ascending index.  ``tail_bound`` optionally carries the geometric
    truncation bound |y|^(p_max+1)/(1-|y|) of the series that produced the
    spectrum (None for spectra measured by the time-domain oracle).
    """

    entries: tuple[tuple[int, complex], ...]
    p_max: int
    tail_bound: float | None = None
    even_residual: float | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        seen = set()
        for n, _ in self.entries:
            if n % 2 == 0:
                raise ValueError(f"harmonic index {n} is even; only odd allowed")
            p = (abs(n) - 1) // 2
            if p > self.p_max:
                raise ValueError(f"index {n} exceeds truncation order {self.p_max}")
            if n in seen:
                raise ValueError(f"duplicate harmonic index {n}")
            seen.add(n)
        ordered = tuple(sorted(self.entries, key=lambda item: item[0]))
        object.__setattr__(self, "entries", ordered)

    def indices(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.entries)

    def amplitude(self, n: int) -> complex:
        """Complex amplitude at harmonic index n (KeyError if absent)."""
        for idx, amp in self.entries:
            if idx == n:
                return amp
        raise KeyError(f"no harmonic with index {n}")

    def intensity(self, n: int) -> float:
        """|amplitude(n)|^2, Rabi-squared units."""
        return abs(self.amplitude(n)) ** 2

    def __iter__(self) -> Iterator[tuple[int, complex]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)
