import math

from spinlev.params import (DriveParams, MechanicalParams, ModelKind,
                            PhysicalParams, SimControl, SpinParams, validate)

TWO_PI = 2.0 * math.pi


def make_params(mech=None, spin=None, drive=None, sim=None) -> PhysicalParams:
    """Parameter bundle around the fitted-experiment values, with overrides."""
    m = dict(inertia_I=1e-22, omega_phi=TWO_PI * 480.0, gamma=TWO_PI * 16.0,
             temperature_T=300.0)
    s = dict(t2_star=50e-9, t1=1.0 / 600.0, gamma_las=2000.0, n_spins=0.0,
             zeeman_slope=TWO_PI * 260e6)
    d = dict(rabi_omega=TWO_PI * 30e3, detuning=-TWO_PI * 2.3e6,
             torque_coeff=3.4e5)
    c = dict(dt=1e-6, duration=0.1, model=ModelKind.RATE)
    m.update(mech or {})
    s.update(spin or {})
    d.update(drive or {})
    c.update(sim or {})
    return validate(PhysicalParams(
        mech=MechanicalParams(**m), spin=SpinParams(**s),
        drive=DriveParams(**d), sim=SimControl(**c)))
