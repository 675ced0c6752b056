"""Double-well jump statistics: effective potential with escape-rate
prediction, plus a long noisy trajectory that actually hops.

Usage: python scripts/run_kramers.py [outdir]
"""

import sys

from spinlev.cli import main

out = sys.argv[1] if len(sys.argv) > 1 else "out/kramers"
rc = main(["potential", "--config", "configs/kramers.cfg", "--out", out])
if rc == 0:
    rc = main(["simulate", "--config", "configs/kramers.cfg",
               "--out", f"{out}/jumps", "--set", "simulate.keep_traj=1"])
if rc == 0:
    rc = main(["analyze", "--config", "configs/kramers.cfg",
               "--out", f"{out}/jumps", "--mode", "histogram",
               f"{out}/jumps/trajectory_000.csv"])
sys.exit(rc)
