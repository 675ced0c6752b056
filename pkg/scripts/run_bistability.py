"""Steady-state branches and the quasi-static hysteresis loop in the
strong-torque regime.

Usage: python scripts/run_bistability.py [outdir]
"""

import sys

from spinlev.cli import main

out = sys.argv[1] if len(sys.argv) > 1 else "out/bistability"
rc = main(["bistability", "--config", "configs/bistable.cfg", "--out", out])
if rc == 0:
    rc = main(["hysteresis", "--config", "configs/bistable.cfg",
               "--out", f"{out}/loop"])
sys.exit(rc)
