"""Phonon-lasing experiment: threshold pump strengths for three spin
relaxation rates, plus a noise-free above-threshold trajectory whose
amplitude histogram shows the limit cycle.

Usage: python scripts/run_lasing.py [outdir]
"""

import sys

from spinlev.cli import main

out = sys.argv[1] if len(sys.argv) > 1 else "out/lasing"
rc = main(["threshold", "--config", "configs/threshold.cfg", "--out", out])
if rc == 0:
    rc = main(["simulate", "--config", "configs/lasing.cfg",
               "--out", f"{out}/cycle", "--set", "mech.temperature_k=0",
               "--set", "sim.n_traj=1", "--set", "simulate.keep_traj=1"])
if rc == 0:
    rc = main(["analyze", "--config", "configs/lasing.cfg",
               "--out", f"{out}/cycle", "--mode", "histogram",
               f"{out}/cycle/trajectory_000.csv"])
sys.exit(rc)
