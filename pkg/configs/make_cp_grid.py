"""Write a synthetic Casimir-Polder grid for the vacuum-lattice example.

The landscape is a square array of posts (period d): the full plane-surface
attraction above each post centre, reduced by the on-axis hole factor
midway between posts, blended with a cos^2 in-plane weight. It stands in
for externally computed CP data.

    python3 configs/make_cp_grid.py [out_path]
"""
import sys

import numpy as np

from pcwlattice.gridio import write_cp_grid
from pcwlattice.potentials import CPGrid, cp_hole_factor, cp_plane
from pcwlattice.species import species_lookup

NM = 1e-9


def build(d=120 * NM, R=35 * NM, n=3.25, shape=(25, 25, 41)):
    rb = species_lookup("Rb87-D2")
    x = np.linspace(-d, d, shape[0])
    y = np.linspace(-d, d, shape[1])
    z = np.linspace(20 * NM, 200 * NM, shape[2])
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    # weight 1 above a post centre, 0 midway between posts
    w = np.cos(np.pi * X / d) ** 2 * np.cos(np.pi * Y / d) ** 2
    factor = w + (1.0 - w) * cp_hole_factor(Z, R)
    return CPGrid(x, y, z, cp_plane(rb, n, Z) * factor)


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "cp_grid.txt"
    write_cp_grid(out, build(), per_line=8)
