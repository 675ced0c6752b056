"""Time-domain integration of the coupled spin-libration equations.

The integrator is fixed-step stochastic Heun: deterministic drift via RK2,
one additive Gaussian velocity kick per step with standard deviation
sqrt(2*k*T*gamma*dt/I).  Noise is drawn from a counter-based Philox stream
keyed by (seed, trajectory index), so ensembles are reproducible regardless
of execution order or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import InvariantViolated, NonFinite
from .params import (KB, Lineshape, ModelKind, PhysicalParams, SimControl,
                     validate)

CSV_HEADER = "t,phi,phi_dot,pop0,pop_m1,pop_p1,re_S,im_S"


@dataclass(frozen=True)
class SpinState:
    coherence_S: complex = 0.0 + 0.0j
    pop0: float = 1.0
    pop_m1: float = 0.0
    pop_p1: float = 0.0


@dataclass(frozen=True)
class MechState:
    phi: float = 0.0
    phi_dot: float = 0.0


@dataclass(frozen=True)
class SystemState:
    mech: MechState = MechState()
    spin: SpinState = SpinState()


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    microwave_on: bool = True
    detuning_override: Optional[float] = None  # rad/s
    rabi_override: Optional[float] = None      # rad/s


@dataclass(frozen=True)
class Protocol:
    segments: tuple[Segment, ...] = ()

    def __post_init__(self):
        prev_end = -math.inf
        for seg in self.segments:
            if seg.t_end <= seg.t_start:
                raise ValueError(f"empty or inverted segment {seg}")
            if seg.t_start < prev_end:
                raise ValueError("protocol segments overlap or are unordered")
            prev_end = seg.t_end

    @classmethod
    def always_on(cls) -> "Protocol":
        return cls(segments=(Segment(0.0, math.inf, microwave_on=True),))

    @classmethod
    def always_off(cls) -> "Protocol":
        return cls(segments=())

    def timeline(self, duration: float, rabi: float, detuning: float):
        """Gap-free (t_end, rabi, detuning) arrays covering [0, duration]."""
        t1s, rabis, dets = [], [], []

        def emit(t_end, on, seg=None):
            t1s.append(t_end)
            if on:
                r = seg.rabi_override if seg and seg.rabi_override is not None else rabi
                d = (seg.detuning_override if seg and seg.detuning_override
                     is not None else detuning)
            else:
                r, d = 0.0, detuning
            rabis.append(r)
            dets.append(d)

        cursor = 0.0
        for seg in self.segments:
            if seg.t_start >= duration:
                break
            if seg.t_start > cursor:
                emit(seg.t_start, False)
            emit(min(seg.t_end, duration), seg.microwave_on, seg)
            cursor = min(seg.t_end, duration)
        if cursor < duration or not t1s:
            emit(duration, False)
        return (np.asarray(t1s), np.asarray(rabis), np.asarray(dets))


@dataclass
class Trajectory:
    times: np.ndarray                  # s, uniform grid dt*record_stride
    data: np.ndarray                   # (n, 7): phi, phi_dot, p0, pm, pp, reS, imS
    params: PhysicalParams
    seed: int
    model_kind: ModelKind
    protocol: Protocol = field(default_factory=Protocol.always_on)

    @property
    def phi(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def phi_dot(self) -> np.ndarray:
        return self.data[:, 1]

    @property
    def populations(self) -> np.ndarray:
        return self.data[:, 2:5]

    def to_csv(self, path, extra_metadata: Optional[dict] = None):
        mech = self.params.mech
        meta = {
            "model": self.model_kind.value,
            "seed": self.seed,
            "dt_s": self.params.sim.dt,
            "record_stride": self.params.sim.record_stride,
            "inertia_kgm2": mech.inertia_I,
            "omega_phi_rad_s": mech.omega_phi,
            "gamma_rad_s": mech.gamma,
            "temperature_k": mech.temperature_T,
        }
        if extra_metadata:
            meta.update(extra_metadata)
        with open(path, "w", encoding="utf-8") as fh:
            for key, value in meta.items():
                fh.write(f"# {key} = {value}\n")
            fh.write(CSV_HEADER + "\n")
            block = np.column_stack([self.times, self.data])
            np.savetxt(fh, block, delimiter=",", fmt="%.12g")


def read_trajectory_csv(path):
    """Load a trajectory CSV; returns (times, data, metadata dict)."""
    meta = {}
    body = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif line.strip() and not line.strip()[0].isalpha():
                body.append(line)
    if not body:
        raise ValueError(f"{path}: no data rows")
    block = np.loadtxt(body, delimiter=",", ndmin=2)
    return block[:, 0], block[:, 1:], meta


def noise_kick_std(params: PhysicalParams) -> float:
    """Per-step velocity kick, sqrt(2*k*T*gamma*dt/I)."""
    mech = params.mech
    return math.sqrt(2.0 * KB * mech.temperature_T * mech.gamma
                     * params.sim.dt / mech.inertia_I)


def trajectory_noise(params: PhysicalParams, traj_index: int,
                     n_steps: int) -> np.ndarray:
    """Philox noise stream keyed by (seed, trajectory index)."""
    std = noise_kick_std(params)
    if std == 0.0:
        return np.zeros(n_steps)
    key = np.array([params.sim.seed & 0xFFFFFFFFFFFFFFFF, traj_index],
                   dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return std * rng.standard_normal(n_steps)


def _state_vector(state: SystemState):
    return (state.mech.phi, state.mech.phi_dot, state.spin.pop0,
            state.spin.pop_m1, state.spin.pop_p1,
            state.spin.coherence_S.real, state.spin.coherence_S.imag)


def _drive_at(protocol: Protocol, params: PhysicalParams, t: float):
    for seg in protocol.segments:
        if seg.t_start <= t < seg.t_end:
            if not seg.microwave_on:
                return 0.0, params.drive.detuning
            rabi = (seg.rabi_override if seg.rabi_override is not None
                    else params.drive.rabi_omega)
            det = (seg.detuning_override if seg.detuning_override is not None
                   else params.drive.detuning)
            return rabi, det
    return 0.0, params.drive.detuning


def derivs_full_bloch(state: SystemState, params: PhysicalParams,
                      drive_at_t=None) -> SystemState:
    """Deterministic time-derivative of the full Bloch + libration system.

    drive_at_t is an optional (rabi, detuning) pair in rad/s; defaults to
    the always-on drive from params.
    """
    rabi, det = drive_at_t if drive_at_t is not None else (
        params.drive.rabi_omega, params.drive.detuning)
    phi, phi_dot, p0, pm, pp, re_s, im_s = _state_vector(state)
    d = _kernels._bloch_spin_derivs(
        p0, pm, pp, re_s, im_s, phi, params.spin.sigma, 1.0 / params.spin.t1,
        params.spin.gamma_las, rabi, det, params.spin.zeeman_slope)
    acc = (-params.mech.omega_phi**2 * phi - params.mech.gamma * phi_dot
           + params.drive.torque_coeff * (pm - pp))
    out = SystemState(
        mech=MechState(phi=phi_dot, phi_dot=acc),
        spin=SpinState(coherence_S=complex(d[3], d[4]), pop0=d[0],
                       pop_m1=d[1], pop_p1=d[2]),
    )
    for v in (acc, d[0], d[1], d[2], d[3], d[4]):
        if not math.isfinite(v):
            raise NonFinite(f"non-finite derivative: {v!r}")
    return out


def derivs_rate(state: SystemState, params: PhysicalParams,
                drive_at_t=None) -> SystemState:
    """Deterministic time-derivative of the rate-equation model."""
    rabi, det = drive_at_t if drive_at_t is not None else (
        params.drive.rabi_omega, params.drive.detuning)
    phi, phi_dot, p0, pm, pp, _, _ = _state_vector(state)
    shape = (_kernels.GAUSSIAN if params.spin.lineshape is Lineshape.GAUSSIAN
             else _kernels.LORENTZIAN)
    d = _kernels._rate_spin_derivs(
        p0, pm, pp, phi, params.spin.sigma, 1.0 / params.spin.t1,
        params.spin.gamma_las, rabi, det, params.spin.zeeman_slope,
        shape, params.spin.gaussian_phi0)
    acc = (-params.mech.omega_phi**2 * phi - params.mech.gamma * phi_dot
           + params.drive.torque_coeff * (pm - pp))
    for v in (acc, d[0], d[1], d[2]):
        if not math.isfinite(v):
            raise NonFinite(f"non-finite derivative: {v!r}")
    return SystemState(
        mech=MechState(phi=phi_dot, phi_dot=acc),
        spin=SpinState(coherence_S=0j, pop0=d[0], pop_m1=d[1], pop_p1=d[2]),
    )


def build_parametric_excitation(omega_phi: float, n_pulses: int,
                                duty: float = 0.5) -> Protocol:
    """Square-wave microwave gating at the libration period.

    n_pulses on-segments of width duty*period, one per period; the protocol
    is microwave-off afterwards, which is the ring-down window.
    """
    if n_pulses < 0:
        raise ValueError("n_pulses must be >= 0")
    period = 2.0 * math.pi / omega_phi
    segments = tuple(
        Segment(k * period, (k + duty) * period, microwave_on=True)
        for k in range(n_pulses)
    )
    return Protocol(segments=segments)


def integrate_trajectory(initial: SystemState, params: PhysicalParams,
                         protocol: Optional[Protocol] = None,
                         control: Optional[SimControl] = None,
                         traj_index: int = 0) -> Trajectory:
    """Fixed-step integration of one trajectory; bit-reproducible by seed."""
    if control is not None:
        params = params.with_(sim=control)
    params = validate(params)
    sim = params.sim
    protocol = protocol if protocol is not None else Protocol.always_on()

    n_steps = int(round(sim.duration / sim.dt))
    stride = sim.record_stride
    n_rec = n_steps // stride + 1
    rec = np.zeros((n_rec, 7))
    noise = trajectory_noise(params, traj_index, n_steps)

    mech = params.mech
    spin = params.spin
    phi, phi_dot, p0, pm, pp, re_s, im_s = _state_vector(initial)
    seg_t1, seg_rabi, seg_det = protocol.timeline(
        sim.duration, params.drive.rabi_omega, params.drive.detuning)
    shape = (_kernels.GAUSSIAN if spin.lineshape is Lineshape.GAUSSIAN
             else _kernels.LORENTZIAN)

    if sim.model is ModelKind.MECH:
        torque = params.drive.torque_coeff * (pm - pp)
        status, bad = _kernels.mech_kernel(
            phi, phi_dot, torque, sim.dt, n_steps, stride,
            mech.omega_phi**2, mech.gamma, noise, rec)
        rec[:, 2], rec[:, 3], rec[:, 4] = p0, pm, pp
        rec[:, 5], rec[:, 6] = re_s, im_s
    elif sim.model is ModelKind.RATE:
        status, bad = _kernels.rate_kernel(
            phi, phi_dot, p0, pm, pp, sim.dt, n_steps, stride,
            mech.omega_phi**2, mech.gamma, params.drive.torque_coeff,
            spin.zeeman_slope, spin.sigma, 1.0 / spin.t1, spin.gamma_las,
            shape, spin.gaussian_phi0, seg_t1, seg_rabi, seg_det, noise, rec)
    else:
        status, bad = _kernels.bloch_kernel(
            phi, phi_dot, p0, pm, pp, re_s, im_s, sim.dt, n_steps, stride,
            mech.omega_phi**2, mech.gamma, params.drive.torque_coeff,
            spin.zeeman_slope, spin.sigma, 1.0 / spin.t1, spin.gamma_las,
            seg_t1, seg_rabi, seg_det, noise, rec)

    if status == _kernels.STATUS_NONFINITE:
        raise NonFinite(f"state became non-finite at step {bad}")
    if status == _kernels.STATUS_PHI_RANGE:
        raise InvariantViolated(bad, "|phi| < pi/2 small-angle bound")

    times = np.arange(n_rec) * (sim.dt * stride)
    return Trajectory(times=times, data=rec, params=params,
                      seed=sim.seed, model_kind=sim.model, protocol=protocol)


@dataclass
class EnsembleResult:
    trajectories: list[Trajectory]
    times: np.ndarray
    phi_mean: np.ndarray
    phi_var: np.ndarray
    pop_mean: np.ndarray    # (n, 3)
    n_traj: int


def run_ensemble(params: PhysicalParams,
                 protocol: Optional[Protocol] = None,
                 control: Optional[SimControl] = None,
                 initial: Optional[SystemState] = None,
                 keep: Optional[int] = None,
                 threads: int = 1) -> EnsembleResult:
    """Monte-Carlo ensemble; trajectory k uses the Philox key (seed, k).

    keep limits how many full trajectories are retained (statistics always
    cover the whole ensemble).  Aggregation order is fixed by trajectory
    index, so the result is independent of the thread count.
    """
    if control is not None:
        params = params.with_(sim=control)
    params = validate(params)
    n_traj = params.sim.n_traj
    initial = initial if initial is not None else SystemState()
    keep = n_traj if keep is None else min(keep, n_traj)

    def one(k):
        return integrate_trajectory(initial, params, protocol, traj_index=k)

    # accumulate in trajectory-index order and retain only the first `keep`
    # full records, so memory stays flat for large ensembles
    kept: list[Trajectory] = []
    times = None
    phi_sum = phi_sq = pop_sum = None
    if threads > 1:
        pool = ThreadPoolExecutor(max_workers=threads)
        stream = pool.map(one, range(n_traj))
    else:
        pool = None
        stream = map(one, range(n_traj))
    try:
        for k, tr in enumerate(stream):
            if times is None:
                times = tr.times
                phi_sum = np.zeros_like(times)
                phi_sq = np.zeros_like(times)
                pop_sum = np.zeros((times.size, 3))
            phi_sum += tr.phi
            phi_sq += tr.phi**2
            pop_sum += tr.populations
            if k < keep:
                kept.append(tr)
    finally:
        if pool is not None:
            pool.shutdown()
    phi_mean = phi_sum / n_traj
    phi_var = phi_sq / n_traj - phi_mean**2
    return EnsembleResult(trajectories=kept, times=times,
                          phi_mean=phi_mean, phi_var=phi_var,
                          pop_mean=pop_sum / n_traj, n_traj=n_traj)
