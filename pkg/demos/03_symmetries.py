"""Boosts, the virial identity and the frequency scale on small grids.

Run: python demos/03_symmetries.py
"""
import numpy as np

from nls6 import diagnostics as dg
from nls6 import functionals as fn
from nls6.dynamics import IntegratorConfig, evolve
from nls6.grids import FieldPair, RadialGrid, TensorGrid, random_gaussian_pair
from nls6.symmetry import BoostParams, boost_energy_identity_check, scale_transform

rng = np.random.default_rng(1)
g = TensorGrid(2, 20.0, 64)
fp = random_gaussian_pair(g, 0.5, rng)

# Kinetic energy shifts by 2 xi.P + |xi|^2 M under a boost (mass resonance only).
xi = (3 * g.dxi, -g.dxi)
lhs, rhs, dev = boost_energy_identity_check(fp, BoostParams(xi))
print(f"boost: lhs={lhs:.6f} rhs={rhs:.6f} dev={dev:.1e}")

# I'' from a finite difference of I(t) tracks the closed formula.
x, y = g.x
fp = FieldPair(np.exp(-(x * x + y * y) / 2) * (1 + 0.3j * x), 0.5 * np.exp(-(x * x + y * y) / 3), 0.5, g)
s = evolve(fp, IntegratorConfig(dt0=1e-3, t_end=0.5, record_every=50)).series
for t, a, b in zip(s["t"][1:-1], s["Iddot_fd"][1:-1], s["Iddot_formula"][1:-1]):
    print(f"t={t:.2f}  I'' fd={a: .6f}  formula={b: .6f}")

# The frequency scale moves by exactly the dilation factor.
rg = RadialGrid(4096, 400.0)
fp = random_gaussian_pair(rg, 0.5, rng)
eta = 0.1 * fn.kinetic(fp)
N = dg.frequency_scale(fp, eta)
for lam in (0.5, 2.0):
    print(f"lambda={lam}: N(lambda)/N = {dg.frequency_scale(scale_transform(fp, lam), eta) / N}")
