import math

import numpy as np
import pytest

from sideband_mixer.bloch import (
    AliasingError,
    IntegrationSettings,
    SettleError,
    integrate_bloch,
    steady_harmonics,
)
from sideband_mixer.core import (
    AtomParams,
    BichromaticDrive,
    BlochState,
    derive_mixing_angles,
    khz,
    mhz,
)
from sideband_mixer.mixing import reflection_coefficient, sideband_amplitude

FAST = IntegrationSettings(rtol=1e-10)


def drive(om_m, om_p, det=0.0, dsplit=khz(5.0)):
    return BichromaticDrive(om_m, om_p, det, dsplit)


class TestIntegrateBloch:
    def test_relaxation_to_ground_state(self, atom):
        traj = integrate_bloch(
            atom,
            drive(0.0, 0.0),
            FAST,
            initial_state=BlochState(0.25 - 0.31j, 0.6),
        )
        assert abs(traj.coherences[-1]) < 1e-9
        assert traj.inversions[-1] == pytest.approx(-1.0, abs=1e-9)

    def test_bloch_bound_along_strong_drive(self, atom):
        traj = integrate_bloch(
            atom, drive(mhz(6.0), mhz(6.0)), FAST,
            initial_state=BlochState(0.0, 1.0),  # start fully inverted
        )
        assert traj.max_bloch_excess() <= 1e-6

    def test_trajectory_record(self, atom):
        d = drive(mhz(0.5), mhz(0.5))
        traj = integrate_bloch(atom, d, FAST, duration=2e-5)
        assert traj.drive == d
        assert traj.atom == atom
        assert traj.times[-1] == pytest.approx(2e-5)
        assert np.all(np.isfinite(traj.scattered_amplitude().real))
        state = traj.state(0)
        assert state.coherence == 0.0 and state.inversion == -1.0

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            IntegrationSettings(rtol=0.0)
        with pytest.raises(ValueError):
            IntegrationSettings(n_periods=0)
        with pytest.raises(ValueError):
            IntegrationSettings(samples_per_period=4)


class TestConventionAnchor:
    def test_single_tone_reproduces_reflection(self, atom):
        # A lone lower tone has effective detuning (central + half_splitting)
        # in this envelope convention; the n = -1 harmonic must then match
        # the reflection formula exactly, to integrator precision.
        dsplit = khz(5.0)
        for om_mhz in (0.1, 1.0, 4.0):
            for det_mhz in (0.0, 1.5):
                d = drive(mhz(om_mhz), 0.0, mhz(det_mhz), dsplit)
                spec = steady_harmonics(atom, d, 1, FAST)
                r = reflection_coefficient(atom, mhz(om_mhz), mhz(det_mhz) + dsplit)
                assert abs(spec.amplitude(-1)) == pytest.approx(
                    abs(r) * mhz(om_mhz), rel=1e-6
                )

    def test_weak_resonant_full_reflection(self, atom):
        om = atom.gamma1 / 200
        d = drive(om, 0.0, det=-khz(5.0))  # cancel the envelope shift exactly
        spec = steady_harmonics(atom, d, 0, FAST)
        assert abs(spec.amplitude(-1)) == pytest.approx(om, rel=1e-3)

    def test_single_tone_other_harmonics_at_floor(self, atom):
        d = drive(mhz(1.5), 0.0)
        spec = steady_harmonics(atom, d, 3, FAST)
        dominant = abs(spec.amplitude(-1))
        others = [abs(a) for n, a in spec if n != -1]
        assert max(others) < 1e-8 * dominant


class TestSteadyHarmonics:
    def test_matches_analytic_at_small_splitting(self, atom):
        # quasi-static agreement threshold set by O(dsplit/Gamma2)
        dsplit = 1e-3 * atom.gamma2
        d = drive(mhz(1.1), mhz(1.1), dsplit=dsplit)
        spec = steady_harmonics(atom, d, 1, FAST)
        ang = derive_mixing_angles(atom, d)
        for sign in (+1, -1):
            ana = abs(sideband_amplitude(ang, d, 1, sign))
            osc = abs(spec.amplitude(sign * 3))
            assert osc == pytest.approx(ana, rel=1e-2)

    def test_halving_split_halves_discrepancy(self, atom):
        # at a detuned point the leading quasi-static error is first order
        # in dsplit, so halving dsplit should roughly halve it
        devs = []
        for dsplit_hz in (5e3, 2.5e3):
            d = drive(mhz(8.0), mhz(8.0), det=mhz(6.0), dsplit=khz(dsplit_hz / 1e3))
            spec = steady_harmonics(atom, d, 2, FAST)
            ang = derive_mixing_angles(atom, d)
            ana = abs(sideband_amplitude(ang, d, 2, +1))
            devs.append(abs(abs(spec.amplitude(5)) - ana) / ana)
        ratio = devs[0] / devs[1]
        assert 1.4 < ratio < 2.8

    def test_even_harmonics_below_parity_floor(self, atom, symmetric_drive):
        diag = {}
        steady_harmonics(atom, symmetric_drive, 2, FAST, diagnostics=diag)
        assert diag["even_residual"] < 1e-8
        assert diag["settle_periods"] >= 1

    def test_phase_differences_match_analytic(self, atom):
        # global phase is convention; differences between harmonics are not
        d = drive(mhz(2.0), mhz(2.0))
        spec = steady_harmonics(atom, d, 1, FAST)
        ang = derive_mixing_angles(atom, d)
        osc = spec.amplitude(3) / spec.amplitude(1)
        ana = sideband_amplitude(ang, d, 1, +1) / sideband_amplitude(ang, d, 0, +1)
        assert osc == pytest.approx(ana, rel=2e-2)

    def test_settle_error_when_period_too_short(self, atom):
        # envelope period much shorter than 1/Gamma1: consecutive periods
        # keep seeing the transient
        d = drive(mhz(0.5), mhz(0.5), dsplit=200.0 * atom.gamma1)
        settings = IntegrationSettings(
            rtol=1e-8, settle_time=1e-9, max_settle_periods=3, samples_per_period=256
        )
        with pytest.raises(SettleError):
            steady_harmonics(atom, d, 1, settings)

    def test_aliasing_guard(self, atom, symmetric_drive):
        settings = IntegrationSettings(samples_per_period=16)
        with pytest.raises(AliasingError):
            steady_harmonics(atom, symmetric_drive, 4, settings)

    def test_rejects_negative_order(self, atom, symmetric_drive):
        with pytest.raises(ValueError):
            steady_harmonics(atom, symmetric_drive, -1, FAST)
