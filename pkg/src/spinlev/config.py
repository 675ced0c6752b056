"""Flat structured-text configuration files.

One ``key = value`` pair per line, ``#`` comments, dotted keys.  Ordinary
frequencies carry their unit in the key name (``_hz``, ``_khz``, ``_mhz``)
and are converted to angular rad/s here; decay rates are plain 1/s.
Unknown keys are errors.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

from .dynamics import Protocol, Segment
from .errors import ConfigError
from .params import (DriveParams, Lineshape, MechanicalParams, ModelKind,
                     PhysicalParams, SimControl, SpinParams, validate)

TWO_PI = 2.0 * math.pi

SEED_ENV_VAR = "SPINLEV_SEED"

# key -> (target, converter); None target means handled separately
_SCALARS = {
    "mech.omega_phi_hz": ("mech.omega_phi", lambda v: TWO_PI * float(v)),
    "mech.gamma_hz": ("mech.gamma", lambda v: TWO_PI * float(v)),
    "mech.inertia_kgm2": ("mech.inertia_I", float),
    "mech.temperature_k": ("mech.temperature_T", float),
    "spin.t2_star_s": ("spin.t2_star", float),
    "spin.t1_s": ("spin.t1", float),
    "spin.gamma_las_per_s": ("spin.gamma_las", float),
    "spin.n_spins": ("spin.n_spins", float),
    "spin.zeeman_slope_mhz": ("spin.zeeman_slope", lambda v: TWO_PI * 1e6 * float(v)),
    "spin.lineshape": ("spin.lineshape", lambda v: Lineshape(v.lower())),
    "spin.gaussian_phi0_rad": ("spin.gaussian_phi0", float),
    "drive.rabi_khz": ("drive.rabi_omega", lambda v: TWO_PI * 1e3 * float(v)),
    "drive.detuning_mhz": ("drive.detuning", lambda v: TWO_PI * 1e6 * float(v)),
    "drive.torque_coeff": ("drive.torque_coeff", float),
    "sim.dt_s": ("sim.dt", float),
    "sim.duration_s": ("sim.duration", float),
    "sim.n_traj": ("sim.n_traj", int),
    "sim.seed": ("sim.seed", int),
    "sim.record_stride": ("sim.record_stride", int),
    "sim.model": ("sim.model", lambda v: ModelKind(v.lower())),
    "init.phi_rad": ("init.phi", float),
    "init.phi_dot_rad_s": ("init.phi_dot", float),
    # task blocks consumed by the command-line entry points
    "sweep.start_mhz": ("sweep.start", lambda v: TWO_PI * 1e6 * float(v)),
    "sweep.stop_mhz": ("sweep.stop", lambda v: TWO_PI * 1e6 * float(v)),
    "sweep.n_points": ("sweep.n_points", int),
    "hysteresis.settle_cycles": ("hysteresis.settle_cycles", float),
    "potential.phi_min_rad": ("potential.phi_min", float),
    "potential.phi_max_rad": ("potential.phi_max", float),
    "potential.n_grid": ("potential.n_grid", int),
    "threshold.inv_t1_khz": ("threshold.inv_t1_khz",
                             lambda v: tuple(float(x) for x in v.split(","))),
    "threshold.rabi_min_khz": ("threshold.rabi_min", lambda v: TWO_PI * 1e3 * float(v)),
    "threshold.rabi_max_khz": ("threshold.rabi_max", lambda v: TWO_PI * 1e3 * float(v)),
    "threshold.n_grid": ("threshold.n_grid", int),
    "threshold.verify": ("threshold.verify", lambda v: _parse_bool(v)),
    "analyze.segment_len": ("analyze.segment_len", int),
    "simulate.keep_traj": ("simulate.keep_traj", int),
}

_SEGMENT_FIELDS = {"t_start_s", "t_end_s", "microwave_on", "detuning_mhz",
                   "rabi_khz"}

_DEFAULTS = {
    "mech.omega_phi": TWO_PI * 480.0,
    "mech.gamma": TWO_PI * 16.0,
    "mech.inertia_I": 1e-22,
    "mech.temperature_T": 300.0,
    "spin.t2_star": 50e-9,
    "spin.t1": 1.0 / 600.0,
    "spin.gamma_las": 2000.0,
    "spin.n_spins": 0.0,
    "spin.zeeman_slope": TWO_PI * 260e6,
    "spin.lineshape": Lineshape.LORENTZIAN,
    "spin.gaussian_phi0": 0.0,
    "drive.rabi_omega": 0.0,
    "drive.detuning": 0.0,
    "drive.torque_coeff": 0.0,
    "sim.dt": 2e-5,
    "sim.duration": 1.0,
    "sim.n_traj": 1,
    "sim.seed": 0,
    "sim.record_stride": 1,
    "sim.model": ModelKind.RATE,
    "init.phi": 0.0,
    "init.phi_dot": 0.0,
    "sweep.start": -TWO_PI * 5e6,
    "sweep.stop": TWO_PI * 5e6,
    "sweep.n_points": 21,
    "hysteresis.settle_cycles": 12.0,
    "potential.phi_min": -0.05,
    "potential.phi_max": 0.25,
    "potential.n_grid": 801,
    "threshold.inv_t1_khz": (1.0,),
    "threshold.rabi_min": TWO_PI * 5e3,
    "threshold.rabi_max": TWO_PI * 500e3,
    "threshold.n_grid": 12,
    "threshold.verify": False,
    "analyze.segment_len": 4096,
    "simulate.keep_traj": 5,
}


@dataclass
class RunConfig:
    params: PhysicalParams
    protocol: Optional[Protocol]     # None means always-on drive
    initial_phi: float
    initial_phi_dot: float
    raw: dict                        # key/value pairs as given (post-override)
    extras: dict                     # resolved task-block values (sweep.*, ...)


def parse_flat_file(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = text.partition("=")
            key, value = key.strip(), value.strip()
            if key in entries:
                raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
            entries[key] = value
    return entries


def _parse_bool(value: str) -> bool:
    lv = value.lower()
    if lv in ("true", "on", "yes", "1"):
        return True
    if lv in ("false", "off", "no", "0"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _build_protocol(entries: dict[str, str]) -> Optional[Protocol]:
    indices = set()
    for key in entries:
        if key.startswith("protocol."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1].isdigit() \
                    or parts[2] not in _SEGMENT_FIELDS:
                raise ConfigError(f"unknown protocol key '{key}'")
            indices.add(int(parts[1]))
    if not indices:
        return None
    segments = []
    for i in sorted(indices):
        prefix = f"protocol.{i}."
        try:
            t0 = float(entries[prefix + "t_start_s"])
            t1 = float(entries[prefix + "t_end_s"])
        except KeyError as exc:
            raise ConfigError(f"protocol segment {i} missing {exc}") from exc
        on = _parse_bool(entries.get(prefix + "microwave_on", "true"))
        det = entries.get(prefix + "detuning_mhz")
        rabi = entries.get(prefix + "rabi_khz")
        segments.append(Segment(
            t_start=t0, t_end=t1, microwave_on=on,
            detuning_override=TWO_PI * 1e6 * float(det) if det else None,
            rabi_override=TWO_PI * 1e3 * float(rabi) if rabi else None,
        ))
    return Protocol(segments=tuple(segments))


def load_config(path, overrides: Optional[list[str]] = None) -> RunConfig:
    """Read a config file, apply --set overrides and the seed env var."""
    entries = parse_flat_file(path)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, value = item.partition("=")
        entries[key.strip()] = value.strip()
    if SEED_ENV_VAR in os.environ:
        entries["sim.seed"] = os.environ[SEED_ENV_VAR]

    resolved = dict(_DEFAULTS)
    for key, value in entries.items():
        if key.startswith("protocol."):
            continue
        if key not in _SCALARS:
            raise ConfigError(f"unknown config key '{key}'")
        target, conv = _SCALARS[key]
        try:
            resolved[target] = conv(value)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"bad value for '{key}': {value!r}") from exc

    def sub(prefix):
        return {k.split(".", 1)[1]: v for k, v in resolved.items()
                if k.startswith(prefix + ".")}

    try:
        params = PhysicalParams(
            mech=MechanicalParams(**sub("mech")),
            spin=SpinParams(**sub("spin")),
            drive=DriveParams(**sub("drive")),
            sim=SimControl(**sub("sim")),
        )
        params = validate(params)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc)) from exc

    extras = {k: v for k, v in resolved.items()
              if k.split(".")[0] not in ("mech", "spin", "drive", "sim", "init")}
    return RunConfig(
        params=params,
        protocol=_build_protocol(entries),
        initial_phi=resolved["init.phi"],
        initial_phi_dot=resolved["init.phi_dot"],
        raw={**{k: str(v) for k, v in entries.items()}},
        extras=extras,
    )
