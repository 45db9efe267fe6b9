"""Two-tone wave mixing on a single two-level scatterer in a 1-D line.

Core layout:

- :mod:`sideband_mixer.core` -- parameters, derived mixing angles, spectra.
- :mod:`sideband_mixer.mixing` -- closed-form reflection and sideband results.
- :mod:`sideband_mixer.bloch` -- brute-force time-domain Bloch oracle.
- :mod:`sideband_mixer.fitting` -- reflection-curve fitting and power calibration.
- :mod:`sideband_mixer.sweeps` -- parameter-sweep harness with CSV/JSON/SVG output.
- :mod:`sideband_mixer.service` -- FastAPI service wrapping the toolkit.
- :mod:`sideband_mixer.cli` -- command-line client.

All rates, Rabi amplitudes and detunings are angular frequencies (rad/s)
everywhere inside the package; "/2pi" MHz and kHz values are accepted only
at the CLI/service boundary.
"""

from .core import (
    TWO_PI,
    AtomParams,
    BichromaticDrive,
    BlochState,
    MixingAngles,
    SidebandSpectrum,
    dephasing_rate,
    derive_mixing_angles,
)
from .mixing import (
    DegenerateEvaluationError,
    ReflectionPoint,
    consecutive_intensity_ratio,
    predicted_peak_drive,
    predicted_splitting,
    reflection_coefficient,
    sideband_amplitude,
    sideband_spectrum,
    sideband_series_coherence,
    stationary_coherence,
    weak_drive_flux,
)
from .bloch import (
    BlochTrajectory,
    IntegrationSettings,
    OracleError,
    integrate_bloch,
    steady_harmonics,
)
from .fitting import FitError, FitResult, PowerCalibration, calibrate_power, fit_reflection
from .sweeps import (
    SweepSpec,
    SweepTable,
    find_extrema,
    sweep_amplitude,
    sweep_asymmetric,
    sweep_detuning_map,
)

__version__ = "0.1.0"

__all__ = [
    "TWO_PI",
    "AtomParams",
    "BichromaticDrive",
    "BlochState",
    "BlochTrajectory",
    "DegenerateEvaluationError",
    "FitError",
    "FitResult",
    "IntegrationSettings",
    "MixingAngles",
    "OracleError",
    "PowerCalibration",
    "ReflectionPoint",
    "SidebandSpectrum",
    "SweepSpec",
    "SweepTable",
    "calibrate_power",
    "consecutive_intensity_ratio",
    "dephasing_rate",
    "derive_mixing_angles",
    "find_extrema",
    "fit_reflection",
    "integrate_bloch",
    "predicted_peak_drive",
    "predicted_splitting",
    "reflection_coefficient",
    "sideband_amplitude",
    "sideband_spectrum",
    "sideband_series_coherence",
    "stationary_coherence",
    "steady_harmonics",
    "sweep_amplitude",
    "sweep_asymmetric",
    "sweep_detuning_map",
    "weak_drive_flux",
    "__version__",
]
