"""Non-linear steady-state analysis: bistability, hysteresis, Kramers rates,
lasing threshold.

The adiabatic spin steady state at clamped angle follows from the rate
equations with pumping W = Omega^2 * P(Delta + gb*phi):

    S0  = 1 / (1 + a/(a+l) + (a+W)/(a+l+W))
    S+1 = a*S0/(a+l)
    S-1 = (a+W)*S0/(a+l+W)

with a = 1/T1, l = gamma_las.  The torque-relevant difference is

    dS = S-1 - S+1 = W*l / ((a+l)*(3a+l) + W*(3a+2l))

For the Lorentzian lineshape W = c/(sigma^2 + delta^2) with
c = Omega^2*sigma/2, so dS = A/(kappa + delta^2), which makes the steady
torque balance a cubic in phi.  (The same closed form is the exact steady
state of the full Bloch equations at clamped angle.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .dynamics import Protocol, Segment, SystemState, MechState, integrate_trajectory
from .errors import NoDoubleWell, NoSignChange
from .params import KB, Lineshape, ModelKind, PhysicalParams


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class SteadyBranch:
    phi_root: float
    stability: Stability
    residual: float


@dataclass
class BistabilityCurve:
    detunings: np.ndarray                 # rad/s
    branches: list[list[SteadyBranch]]


@dataclass
class EffectivePotential:
    phi_grid: np.ndarray
    values: np.ndarray                    # J
    minima: list[float]                   # well angles, ascending
    barrier: Optional[float]              # saddle angle (None if single well)
    depth_a: Optional[float]              # U(barrier) - U(first well), J
    depth_b: Optional[float]


@dataclass
class KramersResult:
    rate_ab: float
    rate_ba: float
    residence_ratio: float
    omega_a: float
    omega_b: float
    omega_c: float


@dataclass
class HysteresisResult:
    detunings: np.ndarray                 # rad/s, ascending
    phi_up: np.ndarray                    # sweep from detunings[0] upward
    phi_down: np.ndarray                  # sweep downward, same grid
    switch_up: float                      # rad/s
    switch_down: float
    loop_area: float                      # rad * rad/s


def _rates(params: PhysicalParams):
    a = 1.0 / params.spin.t1
    l = params.spin.gamma_las
    return a, l


def pump_rate(params: PhysicalParams, phi: float,
              detuning: Optional[float] = None,
              rabi: Optional[float] = None) -> float:
    """Pumping rate W = Omega^2 * P(Delta, phi) at clamped angle."""
    spin = params.spin
    det = params.drive.detuning if detuning is None else detuning
    omega = params.drive.rabi_omega if rabi is None else rabi
    sigma = spin.sigma
    delta = det + spin.zeeman_slope * phi
    if spin.lineshape is Lineshape.GAUSSIAN:
        d = delta + spin.zeeman_slope * spin.gaussian_phi0
        profile = 0.5 / sigma * math.exp(-(d / sigma) ** 2)
    else:
        profile = 0.5 / sigma / (1.0 + (delta / sigma) ** 2)
    return omega * omega * profile


def steady_populations(params: PhysicalParams, phi: float,
                       detuning: Optional[float] = None,
                       rabi: Optional[float] = None):
    """Steady (S0, S-1, S+1) of the spin block at clamped angle."""
    a, l = _rates(params)
    w = pump_rate(params, phi, detuning, rabi)
    if a == 0.0 and l == 0.0:
        third = 1.0 / 3.0
        return third, third, third
    s0 = 1.0 / (1.0 + a / (a + l) + (a + w) / (a + l + w))
    sp = a * s0 / (a + l)
    sm = (a + w) * s0 / (a + l + w)
    return s0, sm, sp


def sz_steady(params: PhysicalParams, phi: float,
              detuning: Optional[float] = None,
              rabi: Optional[float] = None) -> float:
    """Torque-relevant steady population difference S-1 - S+1."""
    a, l = _rates(params)
    if l == 0.0:
        return 0.0
    w = pump_rate(params, phi, detuning, rabi)
    return w * l / ((a + l) * (3 * a + l) + w * (3 * a + 2 * l))


def lorentzian_coefficients(params: PhysicalParams,
                            rabi: Optional[float] = None):
    """(A, kappa) such that dS = A/(kappa + delta^2) for the Lorentzian."""
    a, l = _rates(params)
    omega = params.drive.rabi_omega if rabi is None else rabi
    sigma = params.spin.sigma
    c = omega * omega * sigma / 2.0
    d1 = (a + l) * (3 * a + l)
    if d1 == 0.0 or l == 0.0:
        return 0.0, sigma**2
    return c * l / d1, sigma**2 + c * (3 * a + 2 * l) / d1


def steady_torque(params: PhysicalParams, phi, detuning=None) -> float:
    """Total steady angular acceleration -w_phi^2*phi + Gamma*dS(phi)."""
    return (-params.mech.omega_phi**2 * phi
            + params.drive.torque_coeff
            * sz_steady(params, phi, detuning=detuning))


def _dsz_dphi(params: PhysicalParams, phi: float, detuning=None) -> float:
    h = 1e-3 * params.spin.sigma / max(params.spin.zeeman_slope, 1.0)
    return (sz_steady(params, phi + h, detuning=detuning)
            - sz_steady(params, phi - h, detuning=detuning)) / (2 * h)


def bistability_roots(params: PhysicalParams,
                      detuning: Optional[float] = None) -> list[SteadyBranch]:
    """All steady angles, via the closed-form cubic (Lorentzian lineshape).

    Roots are polished by Newton iteration on the torque balance and
    classified by the slope of the total steady torque.
    """
    mech = params.mech
    det = params.drive.detuning if detuning is None else detuning
    gb = params.spin.zeeman_slope
    omega2 = mech.omega_phi**2
    gamma_t = params.drive.torque_coeff

    if params.spin.lineshape is Lineshape.LORENTZIAN and gb > 0:
        amp, kappa = lorentzian_coefficients(params)
        # gb^2 w^2 phi^3 + 2 det gb w^2 phi^2 + (kappa+det^2) w^2 phi - G A = 0
        coeffs = [gb * gb * omega2, 2 * det * gb * omega2,
                  (kappa + det * det) * omega2, -gamma_t * amp]
        raw = np.roots(coeffs)
        scale = max(abs(r) for r in raw) + 1e-300
        candidates = sorted(float(r.real) for r in raw
                            if abs(r.imag) < 1e-9 * scale)
    else:
        candidates = _grid_scan_roots(params, det)

    phi_scale = max(abs(gamma_t) * sz_steady(params, 0.0, detuning=0.0)
                    / omega2, params.spin.sigma / max(gb, 1.0), 1e-12)
    branches = []
    for phi in candidates:
        for _ in range(60):
            f = steady_torque(params, phi, detuning=det)
            h = 1e-9 * max(abs(phi), phi_scale)
            df = (steady_torque(params, phi + h, detuning=det)
                  - steady_torque(params, phi - h, detuning=det)) / (2 * h)
            if df == 0.0:
                break
            step = f / df
            phi -= step
            if abs(step) < 1e-15 * max(abs(phi), phi_scale):
                break
        res = steady_torque(params, phi, detuning=det) / (omega2 * max(abs(phi), phi_scale))
        slope = omega2 - gamma_t * _dsz_dphi(params, phi, detuning=det)
        stab = Stability.STABLE if slope > 0 else Stability.UNSTABLE
        branches.append(SteadyBranch(phi_root=phi, stability=stab, residual=res))

    # dedupe nearly-identical roots after polish
    out: list[SteadyBranch] = []
    for br in sorted(branches, key=lambda b: b.phi_root):
        if out and abs(br.phi_root - out[-1].phi_root) < 1e-9 * phi_scale:
            continue
        out.append(br)
    return out


def _grid_scan_roots(params: PhysicalParams, det: float,
                     n_grid: int = 100_000) -> list[float]:
    """Sign-change scan of the steady torque; oracle path for non-Lorentzian."""
    gb = max(params.spin.zeeman_slope, 1.0)
    omega2 = params.mech.omega_phi**2
    reach = abs(params.drive.torque_coeff) * 0.5 / omega2  # dS <= 1/2
    width = 10 * params.spin.sigma / gb + abs(det) / gb
    lo, hi = -reach - width, reach + width
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([steady_torque(params, p, detuning=det) for p in grid])
    roots = []
    sign = np.sign(vals)
    idx = np.nonzero(np.diff(sign) != 0)[0]
    for i in idx:
        roots.append(optimize.brentq(
            lambda p: steady_torque(params, p, detuning=det),
            grid[i], grid[i + 1], xtol=1e-15, rtol=8.9e-16))
    return roots


def bistability_curve(params: PhysicalParams,
                      detunings: np.ndarray) -> BistabilityCurve:
    return BistabilityCurve(
        detunings=np.asarray(detunings, dtype=float),
        branches=[bistability_roots(params, d) for d in detunings])


def effective_potential(params: PhysicalParams, phi_range,
                        n_grid: int = 2001,
                        detuning: Optional[float] = None) -> EffectivePotential:
    """U(phi) = -I * integral of the steady torque, zeroed at phi_range[0]."""
    det = params.drive.detuning if detuning is None else detuning
    inertia = params.mech.inertia_I
    lo, hi = float(phi_range[0]), float(phi_range[1])
    grid = np.linspace(lo, hi, n_grid)

    def du(phi):
        return -inertia * steady_torque(params, phi, detuning=det)

    values = np.zeros(n_grid)
    for i in range(1, n_grid):
        seg, _ = integrate.quad(du, grid[i - 1], grid[i], limit=200)
        values[i] = values[i - 1] + seg
    # reference U(0) = 0 even when 0 is outside the requested window
    offset, _ = integrate.quad(du, 0.0, lo, limit=400)
    values += offset

    roots = bistability_roots(params, detuning=det)
    minima = [b.phi_root for b in roots if b.stability is Stability.STABLE
              and lo < b.phi_root < hi]
    saddles = [b.phi_root for b in roots if b.stability is Stability.UNSTABLE
               and lo < b.phi_root < hi]

    def u_at(phi):
        seg, _ = integrate.quad(du, 0.0, phi, limit=400)
        return seg

    if len(minima) >= 2 and saddles:
        barrier = saddles[0]
        u_bar = u_at(barrier)
        depth_a = u_bar - u_at(minima[0])
        depth_b = u_bar - u_at(minima[-1])
    else:
        barrier, depth_a, depth_b = None, None, None
    return EffectivePotential(phi_grid=grid, values=values, minima=sorted(minima),
                              barrier=barrier, depth_a=depth_a, depth_b=depth_b)


def kramers_rates(potential: EffectivePotential,
                  params: PhysicalParams,
                  detuning: Optional[float] = None) -> KramersResult:
    """Escape rates over the barrier and the normalized residence ratio.

    Residence ratio is the fraction of time spent in well A (the smaller
    angle), from the Boltzmann weights of the two barrier heights,
    normalized so equal depths give 1/2.
    """
    if potential.barrier is None or len(potential.minima) < 2:
        raise NoDoubleWell("potential has fewer than two minima")
    det = params.drive.detuning if detuning is None else detuning
    inertia = params.mech.inertia_I
    gamma = params.mech.gamma
    kt = KB * params.mech.temperature_T

    def curvature(phi):
        # U''/I = w_phi^2 - Gamma * d(dS)/dphi
        return (params.mech.omega_phi**2
                - params.drive.torque_coeff * _dsz_dphi(params, phi, det))

    w_a = math.sqrt(curvature(potential.minima[0]))
    w_b = math.sqrt(curvature(potential.minima[-1]))
    w_c = math.sqrt(abs(curvature(potential.barrier)))

    def rate(w_well, depth):
        pref = (w_well / (2 * math.pi * w_c)) * (
            math.sqrt(w_c**2 + gamma**2 / 4) - gamma / 2)
        return pref * math.exp(-depth / kt)

    rate_ab = rate(w_a, potential.depth_a)
    rate_ba = rate(w_b, potential.depth_b)
    x = (potential.depth_b - potential.depth_a) / kt
    residence = 1.0 / (1.0 + math.exp(min(x, 700.0)))
    return KramersResult(rate_ab=rate_ab, rate_ba=rate_ba,
                         residence_ratio=residence,
                         omega_a=w_a, omega_b=w_b, omega_c=w_c)


def hysteresis_sweep(params: PhysicalParams, detuning_from: float,
                     detuning_to: float, n_points: int = 201,
                     settle_cycles: float = 12.0) -> HysteresisResult:
    """Quasi-static noise-free up/down sweep of the detuning.

    The detuning is stepped through n_points values; at every step the
    system relaxes for settle_cycles/gamma seconds (slow compared with the
    libration period, fast compared with noise-activated hopping, which is
    absent here since T is forced to 0).
    """
    mech = params.mech
    cold = params.with_(mech=type(mech)(
        inertia_I=mech.inertia_I, omega_phi=mech.omega_phi,
        gamma=mech.gamma, temperature_T=0.0))
    dwell = settle_cycles / mech.gamma
    dets = np.linspace(detuning_from, detuning_to, n_points)

    def sweep(values):
        phi = 0.0
        phi_dot = 0.0
        out = np.zeros(values.size)
        for i, det in enumerate(values):
            segs = (Segment(0.0, dwell, microwave_on=True,
                            detuning_override=float(det)),)
            sim = cold.sim
            control = type(sim)(dt=sim.dt, duration=dwell, n_traj=1,
                                seed=sim.seed, record_stride=max(
                                    1, int(dwell / sim.dt) // 200),
                                model=ModelKind.RATE)
            tr = integrate_trajectory(
                SystemState(mech=MechState(phi=phi, phi_dot=phi_dot)),
                cold, Protocol(segments=segs), control=control)
            phi = float(tr.phi[-1])
            phi_dot = float(tr.phi_dot[-1])
            out[i] = phi
        return out

    phi_up = sweep(dets)
    phi_down = sweep(dets[::-1])[::-1]

    def switch_point(values, trace):
        jumps = np.abs(np.diff(trace))
        k = int(np.argmax(jumps))
        return 0.5 * (values[k] + values[k + 1])

    area = float(np.trapezoid(np.abs(phi_up - phi_down), dets))
    return HysteresisResult(detunings=dets, phi_up=phi_up, phi_down=phi_down,
                            switch_up=switch_point(dets, phi_up),
                            switch_down=switch_point(dets, phi_down),
                            loop_area=area)


def lasing_threshold(params: PhysicalParams, rabi_grid,
                     verify: bool = False,
                     verify_duration: float = 20.0) -> float:
    """Rabi frequency at which the effective damping crosses zero (rad/s).

    The grid must bracket a sign change of gamma_eff; the zero is then
    located by bisection.  With verify=True a noise-free simulation above
    threshold must settle on an initial-condition-independent limit cycle,
    and one below threshold must decay.
    """
    from .response import effective_dynamics

    def gamma_eff(rabi):
        p = params.with_(drive=type(params.drive)(
            rabi_omega=float(rabi), detuning=params.drive.detuning,
            torque_coeff=params.drive.torque_coeff))
        return effective_dynamics(p).gamma_eff

    grid = np.asarray(sorted(rabi_grid), dtype=float)
    vals = np.array([gamma_eff(r) for r in grid])
    sign_change = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
    if sign_change.size == 0:
        raise NoSignChange(
            f"gamma_eff has no zero crossing on the grid "
            f"(range {vals.min():.3g}..{vals.max():.3g} rad/s)")
    lo, hi = grid[sign_change[0]], grid[sign_change[0] + 1]
    f_lo = vals[sign_change[0]]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = gamma_eff(mid)
        if f_mid == 0.0 or (hi - lo) < 1e-6 * hi:
            lo = hi = mid
            break
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    threshold = 0.5 * (lo + hi)

    if verify:
        _verify_limit_cycle(params, threshold, verify_duration)
    return threshold


def limit_cycle_amplitude(params: PhysicalParams, rabi: float,
                          initial_phi: float, duration: float) -> float:
    """Steady oscillation amplitude of a noise-free run (0 if decayed)."""
    mech = params.mech
    cold = params.with_(
        mech=type(mech)(inertia_I=mech.inertia_I, omega_phi=mech.omega_phi,
                        gamma=mech.gamma, temperature_T=0.0),
        drive=type(params.drive)(rabi_omega=float(rabi),
                                 detuning=params.drive.detuning,
                                 torque_coeff=params.drive.torque_coeff))
    sim = cold.sim
    control = type(sim)(dt=sim.dt, duration=duration, n_traj=1, seed=sim.seed,
                        record_stride=max(1, int(
                            (2 * math.pi / mech.omega_phi) / sim.dt) // 40),
                        model=ModelKind.RATE)
    tr = integrate_trajectory(SystemState(mech=MechState(phi=initial_phi)),
                              cold, Protocol.always_on(), control=control)
    tail = tr.phi[int(0.8 * tr.phi.size):]
    center = 0.5 * (tail.max() + tail.min())
    return 0.5 * (tail.max() - tail.min()), center


def _verify_limit_cycle(params, threshold, duration):
    above = 1.5 * threshold
    amp1, _ = limit_cycle_amplitude(params, above, 1e-3, duration)
    amp2, _ = limit_cycle_amplitude(params, above, 5e-3, duration)
    if amp1 <= 0 or abs(amp1 - amp2) > 0.05 * max(amp1, amp2):
        raise NoSignChange(
            f"limit cycle not initial-condition independent above threshold "
            f"({amp1:g} vs {amp2:g} rad)")
    amp_below, _ = limit_cycle_amplitude(params, 0.5 * threshold, 1e-3, duration)
    if amp_below > 0.2 * amp1:
        raise NoSignChange("motion below threshold did not decay")
