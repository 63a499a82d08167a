"""Regenerates the embedded Lebedev tables from scipy's generator orbits.

Usage: python3 generate_lebedev.py   (writes lebedev_<N>.txt next to this file)
"""
import os

import numpy as np
from scipy.integrate import lebedev_rule

# point count -> polynomial degree of exactness
RULES = {6: 3, 26: 7, 50: 11, 110: 17, 194: 23, 302: 29, 590: 41, 2030: 77}

here = os.path.dirname(os.path.abspath(__file__))
for npts, degree in RULES.items():
    x, w = lebedev_rule(degree)
    assert x.shape[1] == npts, (npts, x.shape)
    w = w / w.sum()
    x = x / np.linalg.norm(x, axis=0)
    with open(os.path.join(here, f"lebedev_{npts}.txt"), "w") as fh:
        fh.write(f"# exactness={degree} provenance=lebedev_table\n")
        for k in range(npts):
            fh.write(f"{float(x[0, k])!r} {float(x[1, k])!r} {float(x[2, k])!r} {float(w[k])!r}\n")
