"""Effective frequency and damping versus microwave detuning.

Red detunings stiffen the damping (cooling), blue detunings soften it.

Usage: python scripts/run_cooling_sweep.py [outdir]
"""

import sys

from spinlev.cli import main

out = sys.argv[1] if len(sys.argv) > 1 else "out/cooling_sweep"
sys.exit(main(["sweep", "--config", "configs/cooling.cfg", "--out", out]))
