"""Command-line entry points.

Every subcommand reads one flat config file, writes its outputs into the
--out directory (created on demand) and finishes by writing a run manifest.
All files are written atomically (temp file + rename).  Exit codes:

    0  success
    2  configuration problem (bad file, bad --set, bad arguments)
    3  numeric failure (non-finite state, no convergence, invariant hit)
    4  parameter sweep finished but with under 80% of points succeeding
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, analysis, response, steady
from .config import SEED_ENV_VAR, RunConfig, load_config
from .dynamics import (MechState, Protocol, SystemState, read_trajectory_csv,
                       run_ensemble)
from .errors import ConfigError, SpinlevError
from .params import TWO_PI, thermal_variance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_SWEEP_FAILED = 4

BISTABILITY_CSV_HEADER = "detuning_hz,root1,stab1,root2,stab2,root3,stab3"
THRESHOLD_CSV_HEADER = "inv_t1_khz,omega_th_khz"
HYSTERESIS_CSV_HEADER = "detuning_hz,phi_up,phi_down"
POTENTIAL_CSV_HEADER = "phi_rad,potential_j"
ENSEMBLE_CSV_HEADER = "t,phi_mean,phi_var,pop0_mean,pop_m1_mean,pop_p1_mean"


def atomic_write_text(path, text: str):
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _metadata_block(meta: dict) -> str:
    return "".join(f"# {k} = {v}\n" for k, v in meta.items())


def write_csv(path, header: str, rows, meta: dict):
    body = "\n".join(rows)
    atomic_write_text(path, _metadata_block(meta) + header + "\n"
                      + body + ("\n" if body else ""))


class Run:
    """Shared per-invocation state: config, output dir, manifest entries."""

    def __init__(self, args):
        self.args = args
        self.t0 = time.monotonic()
        self.outputs: list[str] = []
        os.makedirs(args.out, exist_ok=True)
        self.cfg: RunConfig = load_config(args.config, args.set)
        with open(args.config, "rb") as fh:
            self.config_sha = hashlib.sha256(fh.read()).hexdigest()

    def out_path(self, name: str) -> str:
        path = os.path.join(self.args.out, name)
        self.outputs.append(name)
        return path

    def say(self, message: str):
        if not self.args.quiet:
            print(message)

    def finish(self) -> int:
        lines = {
            "command": " ".join([self.args.command] + (self.args.set or [])),
            "version": __version__,
            "config_path": self.args.config,
            "config_sha256": self.config_sha,
            "seed": self.cfg.params.sim.seed,
            "seed_env_override": os.environ.get(SEED_ENV_VAR, ""),
            "wall_time_s": f"{time.monotonic() - self.t0:.3f}",
        }
        for i, name in enumerate(self.outputs):
            lines[f"output.{i}"] = name
        text = "".join(f"{k} = {v}\n" for k, v in lines.items())
        atomic_write_text(os.path.join(self.args.out, "manifest.txt"), text)
        return EXIT_OK


def _common_meta(run: Run) -> dict:
    return {"version": __version__, "seed": run.cfg.params.sim.seed,
            "config_sha256": run.config_sha}


def cmd_simulate(run: Run) -> int:
    cfg = run.cfg
    keep = int(cfg.extras["simulate.keep_traj"])
    initial = SystemState(mech=MechState(phi=cfg.initial_phi,
                                         phi_dot=cfg.initial_phi_dot))
    result = run_ensemble(cfg.params, protocol=cfg.protocol, initial=initial,
                          keep=keep, threads=run.args.threads)
    for k, traj in enumerate(result.trajectories):
        path = run.out_path(f"trajectory_{k:03d}.csv")
        traj.to_csv(path, extra_metadata={"trajectory_index": k,
                                          "config_sha256": run.config_sha})
    meta = _common_meta(run)
    meta["n_traj"] = result.n_traj
    rows = [f"{t:.12g},{m:.12g},{v:.12g},{p0:.12g},{pm:.12g},{pp:.12g}"
            for t, m, v, (p0, pm, pp) in zip(result.times, result.phi_mean,
                                             result.phi_var, result.pop_mean)]
    write_csv(run.out_path("ensemble.csv"), ENSEMBLE_CSV_HEADER, rows, meta)
    run.say(f"simulated {result.n_traj} trajectories, "
            f"kept {len(result.trajectories)} full records")
    return run.finish()


def cmd_sweep(run: Run) -> int:
    cfg = run.cfg
    if run.args.axis == "rabi":
        grid = np.linspace(cfg.extras["threshold.rabi_min"],
                           cfg.extras["threshold.rabi_max"],
                           int(cfg.extras["threshold.n_grid"]))
        rows = response.rabi_sweep(cfg.params, grid,
                                   model_kind=cfg.params.sim.model)
        header = response.RABI_SWEEP_CSV_HEADER
        axis_scale = TWO_PI * 1e3
    else:
        detunings = np.linspace(cfg.extras["sweep.start"],
                                cfg.extras["sweep.stop"],
                                int(cfg.extras["sweep.n_points"]))
        rows = response.detuning_sweep(cfg.params, detunings,
                                       model_kind=cfg.params.sim.model)
        header = response.SWEEP_CSV_HEADER
        axis_scale = TWO_PI
    lines = [f"{r.detuning / axis_scale:.12g},{r.omega_eff / TWO_PI:.12g},"
             f"{r.gamma_eff / TWO_PI:.12g},{r.xi.real:.12g},"
             f"{r.xi.imag:.12g},{r.status}" for r in rows]
    write_csv(run.out_path("sweep.csv"), header, lines, _common_meta(run))
    frac = response.sweep_success_fraction(rows)
    run.say(f"sweep finished: {frac:.0%} of {len(rows)} points succeeded")
    code = run.finish()
    return code if frac >= 0.8 else EXIT_SWEEP_FAILED


def cmd_analyze(run: Run) -> int:
    cfg = run.cfg
    try:
        times, data, _ = read_trajectory_csv(run.args.input)
        phi = data[:, 0]
        dt = float(times[1] - times[0])
    except (OSError, ValueError, IndexError) as exc:
        print(f"error: cannot read trajectory CSV: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    mech = cfg.params.mech
    mode = run.args.mode
    report = _common_meta(run)
    report["input"] = run.args.input
    report["mode"] = mode

    if mode == "psd":
        seg = min(int(cfg.extras["analyze.segment_len"]), phi.size // 2)
        psd = analysis.welch_psd(phi, dt, segment_len=seg)
        meta = _common_meta(run)
        meta["segment_count"] = psd.segment_count
        meta["resolution_bw_hz"] = psd.resolution_bw
        rows = [f"{f:.12g},{v:.12g}" for f, v in zip(psd.freqs, psd.values)]
        write_csv(run.out_path("psd.csv"), "freq_hz,psd_rad2_per_hz", rows, meta)
        fit = analysis.fit_psd_lorentzian(psd)
        report["omega0_hz"] = fit.omega0 / TWO_PI
        report["gamma_hz"] = fit.gamma / TWO_PI
        report["fit_residual_rms"] = fit.residual_norm
        report["effective_temperature_k"] = analysis.effective_temperature(
            mech.temperature_T, mech.gamma, fit.gamma)
        run.say(f"peak {fit.omega0 / TWO_PI:.2f} Hz, "
                f"linewidth {fit.gamma / TWO_PI:.3f} Hz")
    elif mode == "ringdown":
        fit = analysis.fit_ringdown(times, phi, two_modes=run.args.two_modes)
        for i, (a, w, g) in enumerate(zip(fit.amplitude, fit.omega, fit.gamma)):
            report[f"mode{i}.amplitude_rad"] = a
            report[f"mode{i}.freq_hz"] = w / TWO_PI
            report[f"mode{i}.gamma_hz"] = g / TWO_PI
        report["offset_rad"] = fit.offset
        report["fit_residual_rms"] = fit.residual_norm
        run.say(f"ring-down gamma {fit.gamma[0] / TWO_PI:.3f} Hz "
                f"at {fit.omega[0] / TWO_PI:.2f} Hz")
    elif mode == "histogram":
        stats = analysis.amplitude_histogram(phi)
        centers = 0.5 * (stats.bin_edges[:-1] + stats.bin_edges[1:])
        rows = [f"{c:.12g},{int(n)}" for c, n in zip(centers, stats.counts)]
        write_csv(run.out_path("histogram.csv"), "phi_rad,count", rows,
                  _common_meta(run))
        report["excess_kurtosis"] = stats.excess_kurtosis
        report["bimodal"] = stats.bimodal
        run.say("bimodal" if stats.bimodal else "unimodal")
    else:  # temperature
        t_hat = analysis.equipartition_temperature(phi, mech)
        report["equipartition_temperature_k"] = t_hat
        report["thermal_variance_rad2"] = thermal_variance(mech)
        run.say(f"equipartition temperature {t_hat:.1f} K")

    atomic_write_text(run.out_path("analysis.txt"),
                      "".join(f"{k} = {v}\n" for k, v in report.items()))
    return run.finish()


def _stab_name(branch) -> str:
    return branch.stability.value


def cmd_bistability(run: Run) -> int:
    cfg = run.cfg
    detunings = np.linspace(cfg.extras["sweep.start"], cfg.extras["sweep.stop"],
                            int(cfg.extras["sweep.n_points"]))
    rows = []
    n_multi = 0
    for det in detunings:
        branches = steady.bistability_roots(cfg.params, detuning=float(det))
        if len(branches) > 1:
            n_multi += 1
        cells = [f"{det / TWO_PI:.12g}"]
        for i in range(3):
            if i < len(branches):
                cells.append(f"{branches[i].phi_root:.12g}")
                cells.append(_stab_name(branches[i]))
            else:
                cells.append("nan")
                cells.append("none")
        rows.append(",".join(cells))
    write_csv(run.out_path("bistability.csv"), BISTABILITY_CSV_HEADER, rows,
              _common_meta(run))
    run.say(f"{n_multi}/{detunings.size} detunings show multiple branches")
    return run.finish()


def cmd_hysteresis(run: Run) -> int:
    cfg = run.cfg
    result = steady.hysteresis_sweep(
        cfg.params, cfg.extras["sweep.start"], cfg.extras["sweep.stop"],
        n_points=int(cfg.extras["sweep.n_points"]),
        settle_cycles=cfg.extras["hysteresis.settle_cycles"])
    meta = _common_meta(run)
    meta["switch_up_hz"] = result.switch_up / TWO_PI
    meta["switch_down_hz"] = result.switch_down / TWO_PI
    meta["loop_area"] = result.loop_area
    rows = [f"{d / TWO_PI:.12g},{u:.12g},{w:.12g}"
            for d, u, w in zip(result.detunings, result.phi_up, result.phi_down)]
    write_csv(run.out_path("hysteresis.csv"), HYSTERESIS_CSV_HEADER, rows, meta)
    run.say(f"switching at {result.switch_up / TWO_PI / 1e6:.3f} MHz up, "
            f"{result.switch_down / TWO_PI / 1e6:.3f} MHz down")
    return run.finish()


def cmd_potential(run: Run) -> int:
    cfg = run.cfg
    pot = steady.effective_potential(
        cfg.params,
        (cfg.extras["potential.phi_min"], cfg.extras["potential.phi_max"]),
        n_grid=int(cfg.extras["potential.n_grid"]))
    meta = _common_meta(run)
    meta["minima_rad"] = ";".join(f"{m:.9g}" for m in pot.minima)
    if pot.barrier is not None:
        meta["barrier_rad"] = f"{pot.barrier:.9g}"
        meta["depth_a_j"] = f"{pot.depth_a:.9g}"
        meta["depth_b_j"] = f"{pot.depth_b:.9g}"
        kram = steady.kramers_rates(pot, cfg.params)
        meta["rate_ab_hz"] = f"{kram.rate_ab:.9g}"
        meta["rate_ba_hz"] = f"{kram.rate_ba:.9g}"
        meta["residence_ratio"] = f"{kram.residence_ratio:.9g}"
    rows = [f"{p:.12g},{u:.12g}" for p, u in zip(pot.phi_grid, pot.values)]
    write_csv(run.out_path("potential.csv"), POTENTIAL_CSV_HEADER, rows, meta)
    run.say(f"{len(pot.minima)} minima"
            + (", barrier present" if pot.barrier is not None else ""))
    return run.finish()


def cmd_threshold(run: Run) -> int:
    cfg = run.cfg
    grid = np.linspace(cfg.extras["threshold.rabi_min"],
                       cfg.extras["threshold.rabi_max"],
                       int(cfg.extras["threshold.n_grid"]))
    rows = []
    for inv_t1_khz in cfg.extras["threshold.inv_t1_khz"]:
        spin = cfg.params.spin
        p = cfg.params.with_(spin=type(spin)(
            t2_star=spin.t2_star, t1=1.0 / (1e3 * inv_t1_khz),
            gamma_las=spin.gamma_las, n_spins=spin.n_spins,
            zeeman_slope=spin.zeeman_slope, lineshape=spin.lineshape,
            gaussian_phi0=spin.gaussian_phi0))
        omega_th = steady.lasing_threshold(
            p, grid, verify=bool(cfg.extras["threshold.verify"]))
        rows.append(f"{inv_t1_khz:.12g},{omega_th / TWO_PI / 1e3:.12g}")
        run.say(f"1/T1 = {inv_t1_khz:g} kHz: threshold "
                f"{omega_th / TWO_PI / 1e3:.2f} kHz")
    write_csv(run.out_path("threshold.csv"), THRESHOLD_CSV_HEADER, rows,
              _common_meta(run))
    return run.finish()


_COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "bistability": cmd_bistability,
    "hysteresis": cmd_hysteresis,
    "potential": cmd_potential,
    "threshold": cmd_threshold,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinlev",
        description="Spin-torque dynamics of a levitated librator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--quiet", action="store_true")
        if name == "analyze":
            p.add_argument("input", help="trajectory CSV to analyze")
            p.add_argument("--mode", default="psd",
                           choices=("psd", "ringdown", "histogram",
                                    "temperature"))
            p.add_argument("--two-modes", action="store_true",
                           help="fit two damped sinusoids in ringdown mode")
        if name == "sweep":
            p.add_argument("--axis", default="detuning",
                           choices=("detuning", "rabi"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = Run(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpinlevError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
