"""Scatter or blow up: evolve c W on both sides of c = 1.

Takes about a minute.  Run: python demos/02_dichotomy.py
"""
from nls6.experiments import run_cw

for c in (0.8, 1.3):
    row = run_cw(c, t_end=10.0)
    print(f"c={c}: predicted {row['prediction']}, run ended {row['outcome']} at t={row['t_final']:.2f}")
    print(f"   max H/H_W={row['H_max_over_HW']:.3f}  cut-off virial max={row['cutoff_max']:.3g}"
          f"  consistent={row['consistent']}")
