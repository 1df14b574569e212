"""A tour of the ground state W and the constants it fixes.

Run: python demos/01_ground_state.py
"""
import numpy as np

from nls6.functionals import energy, mass, trapping_deltas
from nls6.grids import RadialGrid
from nls6.ground_state import elliptic_residual, ground_state_closed_form

# W is explicit, so the only error left is quadrature on the radial grid.
for n in (2 ** 12, 2 ** 13, 2 ** 14):
    gs = ground_state_closed_form(1.0, RadialGrid(n, 400.0))
    print(f"n={n:6d}  H_W/pi^3={gs.H_W / np.pi ** 3:.6f}  H_W/R_W={gs.H_W / gs.R_W:.9f}"
          f"  residual={max(elliptic_residual(gs)):.2e}")

# The threshold quantities scale linearly with kappa.
for kappa in (0.25, 0.5, 1.0, 2.0):
    gs = ground_state_closed_form(kappa, RadialGrid(2 ** 13, 400.0))
    print(f"kappa={kappa:4}  E_W={gs.E_W:12.3f}  C_GN={gs.C_GN:.3e}  M_W={mass(gs.pair):.4g}")

# Below threshold the kinetic energy is trapped away from H_W.
gs = ground_state_closed_form(0.5, RadialGrid(2 ** 13, 400.0))
for c in (0.5, 0.8, 0.95):
    fp = gs.scaled(c)
    d, d1, d2 = trapping_deltas(energy(fp), gs)
    print(f"c={c}: delta={d:.4f}  H(t)/H_W stays <= {1 - d1:.4f}  (now {c * c:.4f})  delta''={d2:.4f}")
