"""Thermal ensemble of the undriven librator, then check equipartition
and the spectral peak against the configured oscillator.

Usage: python scripts/run_brownian.py [outdir]
"""

import sys

from spinlev.cli import main

out = sys.argv[1] if len(sys.argv) > 1 else "out/brownian"
rc = main(["simulate", "--config", "configs/brownian.cfg", "--out", out])
if rc == 0:
    rc = main(["analyze", "--config", "configs/brownian.cfg",
               "--out", out, "--mode", "psd", f"{out}/trajectory_000.csv"])
if rc == 0:
    rc = main(["analyze", "--config", "configs/brownian.cfg",
               "--out", f"{out}/temp", "--mode", "temperature",
               f"{out}/trajectory_000.csv"])
sys.exit(rc)
