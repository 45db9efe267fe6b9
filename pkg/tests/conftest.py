import hypothesis
import pytest

from sideband_mixer.core import AtomParams, BichromaticDrive, khz, mhz

hypothesis.settings.register_profile(
    "det", derandomize=True, max_examples=60, deadline=None
)
hypothesis.settings.load_profile("det")


@pytest.fixture
def atom():
    """The measured device rates: Gamma1/2pi = 2.2 MHz, Gamma2 = Gamma1/2."""
    return AtomParams(gamma1=mhz(2.2))


@pytest.fixture
def symmetric_drive():
    """Resonant symmetric two-tone drive at the sin(theta) = 1/2 point."""
    return BichromaticDrive(
        omega_minus_amp=mhz(1.1),
        omega_plus_amp=mhz(1.1),
        central_detuning=0.0,
        half_splitting=khz(5.0),
    )
