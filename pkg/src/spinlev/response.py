"""Spin linear response to a small libration probe and the resulting
effective oscillator dynamics.

The angle is clamped to phi(t) = amp*cos(w t) and the spin block is
integrated until the per-period quadratures of the population difference
dS_z(t) = S_-1 - S_+1 settle.  Writing the oscillating part as
Re[xi * amp * e^{i w t}], the susceptibility xi = xi' + i*xi'' renormalizes
the oscillator:

    w_eff^2  = w_phi^2 - Gamma * xi'
    gamma_eff = gamma - (Gamma / w_eff) * xi''

A negative xi'' (red detuning) therefore raises the damping: cooling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (NoFixedPoint, NonFinite, NonLinearResponse,
                     NoSteadyState)
from .params import Lineshape, ModelKind, PhysicalParams


@dataclass(frozen=True)
class SpinResponse:
    xi: complex                  # susceptibility, population per rad
    probe_amp: float             # rad
    omega_probe: float           # rad/s
    n_periods: int               # measurement periods averaged
    spread: float                # relative spread of the per-period estimates
    mean_dsz: float              # cycle-averaged population difference


@dataclass(frozen=True)
class EffectiveDynamics:
    omega_eff: float             # rad/s
    gamma_eff: float             # rad/s
    xi: complex
    iterations: int


def default_probe_amplitude(params: PhysicalParams) -> float:
    """1% of the angular linewidth sigma/zeeman_slope, capped at 1 mrad."""
    gb = params.spin.zeeman_slope
    if gb <= 0:
        return 1e-4
    return min(0.01 * params.spin.sigma / gb, 1e-3)


def _probe_once(params: PhysicalParams, omega_probe, amp, model_kind,
                n_transient, n_meas):
    spin = params.spin
    use_bloch = model_kind is ModelKind.FULL_BLOCH
    if use_bloch:
        dt = spin.t2_star / 10.0
    else:
        w_res = params.drive.rabi_omega**2 * spin.t2_star / 2.0
        rates = [1.0 / spin.t1 + spin.gamma_las + w_res, omega_probe / (2 * math.pi)]
        dt = 1.0 / (20.0 * max(rates))
    period = 2.0 * math.pi / omega_probe
    dt = min(dt, period / 200.0)

    proj = np.zeros((n_meas, 3))
    shape = (_kernels.GAUSSIAN if spin.lineshape is Lineshape.GAUSSIAN
             else _kernels.LORENTZIAN)
    _kernels.spin_probe_kernel(
        use_bloch, amp, omega_probe, dt, n_transient, n_meas,
        spin.sigma, 1.0 / spin.t1, spin.gamma_las,
        params.drive.rabi_omega, params.drive.detuning,
        spin.zeeman_slope, shape, spin.gaussian_phi0, proj)
    if not np.all(np.isfinite(proj)):
        raise NonFinite("spin probe produced non-finite quadratures")
    # per-period xi estimates from the quadrature integrals
    xi_re = 2.0 * proj[:, 0] / (period * amp)
    xi_im = -2.0 * proj[:, 1] / (period * amp)
    return xi_re + 1j * xi_im, proj[:, 2] / period


def spin_response_xi(params: PhysicalParams, omega_probe: float,
                     probe_amp: Optional[float] = None,
                     model_kind: ModelKind = ModelKind.RATE,
                     n_transient: Optional[int] = None,
                     n_meas: int = 10,
                     check_linearity: bool = True,
                     rel_tol: float = 0.01) -> SpinResponse:
    """Complex spin susceptibility at the probe frequency.

    Raises NoSteadyState when the per-period estimates have not settled and
    NonLinearResponse when halving the probe amplitude moves xi by more
    than rel_tol, so the returned value is a genuine linear coefficient.
    """
    if omega_probe <= 0:
        raise ValueError("omega_probe must be positive")
    if params.drive.rabi_omega == 0.0:
        return SpinResponse(xi=0j, probe_amp=probe_amp or 0.0,
                            omega_probe=omega_probe, n_periods=0,
                            spread=0.0, mean_dsz=0.0)
    amp = probe_amp if probe_amp is not None else default_probe_amplitude(params)
    if amp <= 0:
        raise ValueError("probe_amp must be positive")

    if n_transient is None:
        # cover both the spin relaxation time and a 20-period floor
        period = 2.0 * math.pi / omega_probe
        relax = 1.0 / (1.0 / params.spin.t1 + params.spin.gamma_las)
        n_transient = max(20, int(math.ceil(8.0 * relax / period)))

    xi_k, dsz_k = _probe_once(params, omega_probe, amp,
                              model_kind, n_transient, n_meas)
    tail = xi_k[-5:]
    xi = complex(np.mean(tail))
    scale = max(abs(xi), 1e-30)
    spread = float(np.max(np.abs(tail - xi)) / scale)
    if spread > rel_tol:
        raise NoSteadyState(
            f"per-period response spread {spread:.2%} exceeds {rel_tol:.0%} "
            f"after {n_transient} transient periods")

    if check_linearity:
        xi_half_k, _ = _probe_once(params, omega_probe, amp / 2.0,
                                   model_kind, n_transient, n_meas)
        xi_half = complex(np.mean(xi_half_k[-5:]))
        if abs(xi_half - xi) > rel_tol * max(abs(xi), abs(xi_half), 1e-30):
            raise NonLinearResponse(
                f"xi moved from {xi:.6g} to {xi_half:.6g} when the probe "
                f"was halved; amplitude {amp:g} rad is outside the linear regime")

    return SpinResponse(xi=xi, probe_amp=amp, omega_probe=omega_probe,
                        n_periods=n_meas, spread=spread,
                        mean_dsz=float(np.mean(dsz_k[-5:])))


def effective_dynamics(params: PhysicalParams,
                       model_kind: ModelKind = ModelKind.RATE,
                       probe_amp: Optional[float] = None,
                       max_iter: int = 20,
                       rel_tol: float = 1e-6,
                       check_linearity: bool = True) -> EffectiveDynamics:
    """Self-consistent (omega_eff, gamma_eff) of the dressed oscillator.

    The susceptibility is evaluated at the effective frequency, which it
    itself shifts, so the pair is found by fixed-point iteration starting
    from the bare frequency.  Torque-free drives return the bare values.
    """
    mech = params.mech
    gamma_t = params.drive.torque_coeff
    if gamma_t == 0.0 or params.drive.rabi_omega == 0.0:
        return EffectiveDynamics(omega_eff=mech.omega_phi, gamma_eff=mech.gamma,
                                 xi=0j, iterations=0)

    omega = mech.omega_phi
    resp = None
    for it in range(1, max_iter + 1):
        resp = spin_response_xi(params, omega, probe_amp=probe_amp,
                                model_kind=model_kind,
                                check_linearity=check_linearity and it == 1)
        omega2 = mech.omega_phi**2 - gamma_t * resp.xi.real
        if omega2 <= 0:
            raise NoFixedPoint(
                f"spring softened past zero (omega_eff^2 = {omega2:g}) at "
                f"iteration {it}")
        omega_new = math.sqrt(omega2)
        if abs(omega_new - omega) <= rel_tol * omega:
            gamma_eff = mech.gamma - gamma_t / omega_new * resp.xi.imag
            return EffectiveDynamics(omega_eff=omega_new, gamma_eff=gamma_eff,
                                     xi=resp.xi, iterations=it)
        omega = omega_new
    raise NoFixedPoint(f"no fixed point after {max_iter} iterations")


SWEEP_CSV_HEADER = "detuning_hz,omega_eff_hz,gamma_eff_hz,re_xi,im_xi,status"

STATUS_OK = "ok"


@dataclass
class SweepRow:
    detuning: float              # rad/s
    omega_eff: float             # rad/s (nan on failure)
    gamma_eff: float
    xi: complex
    status: str


def detuning_sweep(params: PhysicalParams, detunings,
                   model_kind: ModelKind = ModelKind.RATE,
                   probe_amp: Optional[float] = None) -> list[SweepRow]:
    """Effective dynamics at each detuning; failures are recorded per row."""
    rows = []
    for det in np.asarray(detunings, dtype=float):
        p = params.with_(drive=type(params.drive)(
            rabi_omega=params.drive.rabi_omega, detuning=float(det),
            torque_coeff=params.drive.torque_coeff))
        try:
            eff = effective_dynamics(p, model_kind=model_kind,
                                     probe_amp=probe_amp)
            rows.append(SweepRow(detuning=float(det), omega_eff=eff.omega_eff,
                                 gamma_eff=eff.gamma_eff, xi=eff.xi,
                                 status=STATUS_OK))
        except (NoSteadyState, NonLinearResponse, NoFixedPoint,
                NonFinite) as exc:
            rows.append(SweepRow(detuning=float(det), omega_eff=math.nan,
                                 gamma_eff=math.nan, xi=complex(math.nan, math.nan),
                                 status=type(exc).__name__))
    return rows


def rabi_sweep(params: PhysicalParams, rabi_values,
               model_kind: ModelKind = ModelKind.RATE,
               probe_amp: Optional[float] = None) -> list[SweepRow]:
    """Effective dynamics versus drive strength; axis value stored in
    the detuning slot of each row (labelled by the CSV writer)."""
    rows = []
    for rabi in np.asarray(rabi_values, dtype=float):
        p = params.with_(drive=type(params.drive)(
            rabi_omega=float(rabi), detuning=params.drive.detuning,
            torque_coeff=params.drive.torque_coeff))
        try:
            eff = effective_dynamics(p, model_kind=model_kind,
                                     probe_amp=probe_amp)
            rows.append(SweepRow(detuning=float(rabi), omega_eff=eff.omega_eff,
                                 gamma_eff=eff.gamma_eff, xi=eff.xi,
                                 status=STATUS_OK))
        except (NoSteadyState, NonLinearResponse, NoFixedPoint,
                NonFinite) as exc:
            rows.append(SweepRow(detuning=float(rabi), omega_eff=math.nan,
                                 gamma_eff=math.nan,
                                 xi=complex(math.nan, math.nan),
                                 status=type(exc).__name__))
    return rows


RABI_SWEEP_CSV_HEADER = "rabi_khz,omega_eff_hz,gamma_eff_hz,re_xi,im_xi,status"


def sweep_to_csv(rows: list[SweepRow], path, metadata: Optional[dict] = None,
                 axis: str = "detuning"):
    two_pi = 2.0 * math.pi
    axis_scale = two_pi * 1e3 if axis == "rabi" else two_pi
    header = RABI_SWEEP_CSV_HEADER if axis == "rabi" else SWEEP_CSV_HEADER
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key} = {value}\n")
        fh.write(header + "\n")
        for r in rows:
            fh.write(f"{r.detuning / axis_scale:.12g},{r.omega_eff / two_pi:.12g},"
                     f"{r.gamma_eff / two_pi:.12g},{r.xi.real:.12g},"
                     f"{r.xi.imag:.12g},{r.status}\n")


def sweep_success_fraction(rows: list[SweepRow]) -> float:
    if not rows:
        return 0.0
    return sum(r.status == STATUS_OK for r in rows) / len(rows)
