"""Physical parameters, unit conventions and closed-form derived quantities.

Unit conventions
----------------
Config files accept ordinary frequencies (Hz, kHz, MHz suffixes in the key
names); everything here stores angular frequencies in rad/s.  Decay rates
(``1/t1``, ``1/t2_star``, ``gamma_las``) are plain rates in 1/s and are used
without a 2*pi factor, matching the way they enter the Bloch equations.
The single conversion boundary lives in :mod:`spinlev.config`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

HBAR = 1.054571817e-34   # J s
KB = 1.380649e-23        # J/K

TWO_PI = 2.0 * math.pi


class Lineshape(Enum):
    LORENTZIAN = "lorentzian"
    GAUSSIAN = "gaussian"


class ModelKind(Enum):
    MECH = "mech"          # bare damped oscillator, spin frozen
    RATE = "rate"          # adiabatic population rate equations
    FULL_BLOCH = "bloch"   # full coherence + population equations


def _require_positive(**fields):
    from .errors import NonPositiveError
    for name, value in fields.items():
        if not (value > 0.0) or not math.isfinite(value):
            raise NonPositiveError(name, value)


@dataclass(frozen=True)
class MechanicalParams:
    """Librational oscillator constants.

    gamma follows the amplitude-energy convention of the thermal PSD
    S_phi = 2*gamma*k*T / (I*((w0^2-w^2)^2 + gamma^2 w^2)).
    """

    inertia_I: float       # kg m^2
    omega_phi: float       # rad/s
    gamma: float           # rad/s
    temperature_T: float   # K

    def __post_init__(self):
        from .errors import UnderdampedViolation
        _require_positive(inertia_I=self.inertia_I, omega_phi=self.omega_phi,
                          gamma=self.gamma)
        if self.temperature_T < 0 or not math.isfinite(self.temperature_T):
            from .errors import NonPositiveError
            raise NonPositiveError("temperature_T", self.temperature_T)
        if not self.omega_phi > self.gamma:
            raise UnderdampedViolation(self.omega_phi, self.gamma)


@dataclass(frozen=True)
class SpinParams:
    """NV ensemble constants.  sigma = 1/t2_star is derived, never stored."""

    t2_star: float            # s
    t1: float                 # s
    gamma_las: float          # 1/s, laser repolarization toward |0>
    n_spins: float            # effective magnetized NV count
    zeeman_slope: float       # rad/s of detuning per rad of libration
    lineshape: Lineshape = Lineshape.LORENTZIAN
    gaussian_phi0: float = 0.0  # static angle offset in the Gaussian profile (rad)

    def __post_init__(self):
        _require_positive(t2_star=self.t2_star, t1=self.t1)
        from .errors import NonPositiveError
        for name in ("gamma_las", "n_spins", "zeeman_slope"):
            v = getattr(self, name)
            if v < 0 or not math.isfinite(v):
                raise NonPositiveError(name, v)
        if self.t2_star > self.t1 / 10.0:
            warnings.warn(
                f"t2_star={self.t2_star:g}s is not much smaller than "
                f"t1={self.t1:g}s; the rate-equation model may be inaccurate",
                stacklevel=2,
            )

    @property
    def sigma(self) -> float:
        """Inhomogeneous linewidth 1/T2* (1/s)."""
        return 1.0 / self.t2_star


@dataclass(frozen=True)
class DriveParams:
    rabi_omega: float          # rad/s
    detuning: float            # rad/s, negative = red of resonance
    torque_coeff: float        # rad/s^2 per unit population difference

    def __post_init__(self):
        from .errors import NonPositiveError
        if self.rabi_omega < 0 or not math.isfinite(self.rabi_omega):
            raise NonPositiveError("rabi_omega", self.rabi_omega)
        if not math.isfinite(self.torque_coeff) or not math.isfinite(self.detuning):
            raise NonPositiveError("torque_coeff/detuning", self.torque_coeff)


@dataclass(frozen=True)
class SimControl:
    dt: float                  # s
    duration: float            # s
    n_traj: int = 1
    seed: int = 0
    record_stride: int = 1
    model: ModelKind = ModelKind.RATE

    def __post_init__(self):
        _require_positive(dt=self.dt, duration=self.duration)
        from .errors import NonPositiveError
        if self.n_traj < 1:
            raise NonPositiveError("n_traj", self.n_traj)
        if self.record_stride < 1:
            raise NonPositiveError("record_stride", self.record_stride)


@dataclass(frozen=True)
class PhysicalParams:
    """Single source of truth for one simulated scenario."""

    mech: MechanicalParams
    spin: SpinParams
    drive: DriveParams
    sim: SimControl

    def with_(self, **kwargs) -> "PhysicalParams":
        return replace(self, **kwargs)


def torque_coefficient(n_spins: float, zeeman_slope_hz: float,
                       inertia_I: float) -> float:
    """Torque coefficient hbar*N*(2*pi*zeeman_slope)/I in rad/s^2.

    ``zeeman_slope_hz`` is the ordinary-frequency detuning shift per radian
    of libration (Hz/rad).
    """
    _require_positive(inertia_I=inertia_I)
    return HBAR * n_spins * (TWO_PI * zeeman_slope_hz) / inertia_I


def static_shift(torque_coeff: float, sz_population: float,
                 omega_phi: float) -> float:
    """Static displacement of the trap minimum, Gamma*S_z/omega_phi^2 (rad)."""
    if not 0.0 <= sz_population <= 1.0:
        raise ValueError(f"sz_population must be in [0,1], got {sz_population}")
    return torque_coeff * sz_population / omega_phi**2


def langevin_psd_level(params: MechanicalParams) -> float:
    """White torque-noise level 2*k*T*gamma*I (N^2 m^2 s)."""
    return 2.0 * KB * params.temperature_T * params.gamma * params.inertia_I


def thermal_variance(params: MechanicalParams) -> float:
    """Equipartition angle variance kT/(I*omega_phi^2) in rad^2."""
    return KB * params.temperature_T / (params.inertia_I * params.omega_phi**2)


def validate(params: PhysicalParams) -> PhysicalParams:
    """Check cross-field invariants and fill the derived torque coefficient.

    The dataclasses already enforce per-field positivity at construction;
    this checks the integrator step bound for the selected model and derives
    ``torque_coeff`` from (N, zeeman_slope, I) when it was left at 0.
    Returns a parameter bundle that validates to itself (idempotent).
    """
    from .errors import StepTooLarge

    mech, spin, drive, sim = params.mech, params.spin, params.drive, params.sim

    if sim.model is ModelKind.FULL_BLOCH:
        bound = spin.t2_star / 10.0
        if sim.dt > bound:
            raise StepTooLarge(sim.dt, bound, "dt <= t2_star/10 for the full Bloch model")
    elif sim.model is ModelKind.RATE:
        scales = [TWO_PI / mech.omega_phi, spin.t1]
        if spin.gamma_las > 0:
            scales.append(1.0 / spin.gamma_las)
        # resonant pumping rate also limits the explicit step
        w_res = drive.rabi_omega**2 * spin.t2_star / 2.0
        if w_res > 0:
            scales.append(1.0 / w_res)
        bound = min(scales) / 50.0
        if sim.dt > bound:
            raise StepTooLarge(sim.dt, bound, "dt too large for the rate model")
    else:
        bound = (TWO_PI / mech.omega_phi) / 50.0
        if sim.dt > bound:
            raise StepTooLarge(sim.dt, bound, "dt <= oscillation period/50")

    derived = torque_coefficient(spin.n_spins, spin.zeeman_slope / TWO_PI,
                                 mech.inertia_I) if spin.n_spins > 0 else 0.0
    if drive.torque_coeff == 0.0 and derived != 0.0:
        drive = replace(drive, torque_coeff=derived)
    elif drive.torque_coeff != 0.0 and derived != 0.0:
        if abs(drive.torque_coeff - derived) > 0.1 * abs(derived):
            warnings.warn(
                f"configured torque_coeff={drive.torque_coeff:g} rad/s^2 differs "
                f"from the value {derived:g} derived from (n_spins, zeeman_slope, "
                f"inertia) by more than 10%; keeping the configured value",
                stacklevel=2,
            )
    return PhysicalParams(mech=mech, spin=spin, drive=drive, sim=sim)
