import math

import pytest
from hypothesis import given, strategies as st

from spinlev.errors import NonPositiveError, StepTooLarge, UnderdampedViolation
from spinlev.params import (KB, DriveParams, MechanicalParams, ModelKind,
                            SimControl, SpinParams, langevin_psd_level,
                            static_shift, thermal_variance, torque_coefficient,
                            validate)
from conftest import TWO_PI, make_params


class TestTorqueCoefficient:
    def test_no_spins_no_torque(self):
        assert torque_coefficient(0.0, 260e6, 1e-22) == 0.0

    def test_frozen_value(self):
        # hbar * 1e8 * (2*pi*2.8e8) / 1.4e-22, computed independently
        assert torque_coefficient(1e8, 280e6, 1.4e-22) == pytest.approx(
            132521.40291880158, rel=1e-12)

    def test_order_of_magnitude_from_spin_torque_estimate(self):
        # 1e8 spins at 260 MHz/rad on a 1e-22 kg m^2 rotor sits at the
        # 1e3 rad/s^2 scale used throughout the simulations
        val = torque_coefficient(1e8, 260e6, 1e-22)
        assert 1e3 < val < 1e7

    @given(n=st.floats(1.0, 1e10), factor=st.floats(1.5, 100.0))
    def test_linear_in_spin_count(self, n, factor):
        base = torque_coefficient(n, 260e6, 1e-22)
        assert torque_coefficient(n * factor, 260e6, 1e-22) == pytest.approx(
            base * factor, rel=1e-12)

    @given(slope=st.floats(1e6, 1e9), factor=st.floats(1.5, 100.0))
    def test_linear_in_zeeman_slope(self, slope, factor):
        base = torque_coefficient(1e8, slope, 1e-22)
        assert torque_coefficient(1e8, slope * factor, 1e-22) == pytest.approx(
            base * factor, rel=1e-12)

    @given(inertia=st.floats(1e-24, 1e-20), factor=st.floats(1.5, 100.0))
    def test_inverse_in_inertia(self, inertia, factor):
        base = torque_coefficient(1e8, 260e6, inertia)
        assert torque_coefficient(1e8, 260e6, inertia * factor) == pytest.approx(
            base / factor, rel=1e-12)


class TestStaticShift:
    def test_zero_population(self):
        assert static_shift(1.5e3, 0.0, TWO_PI * 480) == 0.0

    def test_frozen_value(self):
        assert static_shift(1.5e3, 1.0, TWO_PI * 480) == pytest.approx(
            1.6491078066786753e-4, rel=1e-12)

    def test_millirad_scale_shift(self):
        # large magnetized ensemble on a ~500 Hz mode shifts the trap
        # minimum by a few mrad
        gamma_t = torque_coefficient(1e8, 280e6, 1.4e-22)
        shift = static_shift(gamma_t, 1.0, TWO_PI * 500)
        assert 5e-3 / 3 < shift < 5e-3 * 3

    def test_population_domain(self):
        with pytest.raises(ValueError):
            static_shift(1.5e3, 1.5, TWO_PI * 480)


class TestNoiseAndVariance:
    def test_langevin_level_frozen(self):
        mech = MechanicalParams(inertia_I=1e-22, omega_phi=TWO_PI * 480,
                                gamma=TWO_PI * 16, temperature_T=300.0)
        assert langevin_psd_level(mech) == pytest.approx(
            8.327878570725301e-41, rel=1e-12)

    def test_langevin_level_zero_temperature(self):
        mech = MechanicalParams(inertia_I=1e-22, omega_phi=TWO_PI * 480,
                                gamma=TWO_PI * 16, temperature_T=0.0)
        assert langevin_psd_level(mech) == 0.0

    def test_langevin_level_linear_in_gamma(self):
        a = MechanicalParams(1e-22, TWO_PI * 480, TWO_PI * 16, 300.0)
        b = MechanicalParams(1e-22, TWO_PI * 480, TWO_PI * 32, 300.0)
        assert langevin_psd_level(b) == pytest.approx(2 * langevin_psd_level(a))

    def test_thermal_variance_frozen(self):
        mech = MechanicalParams(inertia_I=1.4e-22, omega_phi=TWO_PI * 480,
                                gamma=TWO_PI * 16, temperature_T=300.0)
        assert thermal_variance(mech) == pytest.approx(
            3.252627205975866e-6, rel=1e-12)

    @given(temp=st.floats(1.0, 1000.0), omega=st.floats(100.0, 1e4),
           inertia=st.floats(1e-24, 1e-20))
    def test_equipartition_identity(self, temp, omega, inertia):
        mech = MechanicalParams(inertia_I=inertia, omega_phi=omega,
                                gamma=omega / 100.0, temperature_T=temp)
        assert thermal_variance(mech) * inertia * omega**2 == pytest.approx(
            KB * temp, rel=1e-12)

    def test_thermal_variance_linear_in_temperature(self):
        a = MechanicalParams(1e-22, TWO_PI * 480, TWO_PI * 16, 75.0)
        b = MechanicalParams(1e-22, TWO_PI * 480, TWO_PI * 16, 300.0)
        assert thermal_variance(b) == pytest.approx(4 * thermal_variance(a))


class TestConstruction:
    def test_paper_scale_values_are_valid(self):
        p = make_params()
        assert p.mech.omega_phi == pytest.approx(TWO_PI * 480)

    def test_gamma_must_be_positive(self):
        with pytest.raises(NonPositiveError):
            MechanicalParams(1e-22, TWO_PI * 480, 0.0, 300.0)

    def test_overdamped_rejected(self):
        with pytest.raises(UnderdampedViolation):
            MechanicalParams(1e-22, TWO_PI * 16, TWO_PI * 480, 300.0)

    def test_negative_temperature_rejected(self):
        with pytest.raises(NonPositiveError):
            MechanicalParams(1e-22, TWO_PI * 480, TWO_PI * 16, -1.0)

    def test_negative_rabi_rejected(self):
        with pytest.raises(NonPositiveError):
            DriveParams(rabi_omega=-1.0, detuning=0.0, torque_coeff=0.0)

    def test_short_t1_warns(self):
        with pytest.warns(UserWarning, match="t2_star"):
            SpinParams(t2_star=1e-3, t1=2e-3, gamma_las=0.0, n_spins=0.0,
                       zeeman_slope=0.0)

    def test_sigma_is_inverse_t2_star(self):
        spin = SpinParams(t2_star=50e-9, t1=1.0 / 600, gamma_las=0.0,
                          n_spins=0.0, zeeman_slope=0.0)
        assert spin.sigma == pytest.approx(2e7)


class TestValidate:
    def test_bloch_step_bound(self):
        with pytest.raises(StepTooLarge):
            make_params(sim={"model": ModelKind.FULL_BLOCH, "dt": 25e-9})

    def test_rate_step_bound_from_repolarization(self):
        with pytest.raises(StepTooLarge):
            make_params(spin={"gamma_las": 1e5}, sim={"dt": 1e-6})

    def test_mech_step_bound_from_period(self):
        with pytest.raises(StepTooLarge):
            make_params(sim={"model": ModelKind.MECH, "dt": 1e-4})

    def test_idempotent(self):
        p = make_params()
        assert validate(p) == validate(validate(p))

    @given(omega_hz=st.floats(100.0, 2000.0), t1_khz=st.floats(0.3, 5.0),
           rabi_khz=st.floats(1.0, 200.0))
    def test_idempotent_across_regimes(self, omega_hz, t1_khz, rabi_khz):
        p = make_params(mech={"omega_phi": TWO_PI * omega_hz},
                        spin={"t1": 1e-3 / t1_khz},
                        drive={"rabi_omega": TWO_PI * 1e3 * rabi_khz},
                        sim={"dt": 1e-8})
        assert validate(p) == validate(validate(p))

    def test_torque_coeff_derived_from_spin_count(self):
        p = make_params(spin={"n_spins": 1e8}, drive={"torque_coeff": 0.0})
        expected = torque_coefficient(1e8, 260e6, 1e-22)
        assert p.drive.torque_coeff == pytest.approx(expected, rel=1e-12)

    def test_inconsistent_torque_coeff_warns_and_keeps_configured(self):
        with pytest.warns(UserWarning, match="torque_coeff"):
            p = make_params(spin={"n_spins": 1e8}, drive={"torque_coeff": 1.0})
        assert p.drive.torque_coeff == 1.0
