"""Conserved quantities, variational functionals and the energy-trapping constants."""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy.optimize import brentq

from .grids import dirichlet_integral, integrate


@dataclass(frozen=True)
class FunctionalReport:
    M: float
    E: float
    H: float
    R: float
    P: np.ndarray
    K: float
    J: float | None

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("M", "E", "H", "R", "K", "J")}
        out["P"] = [float(p) for p in self.P]
        return out


def mass(fp) -> float:
    """``||u||^2 + ||v||^2``."""
    return float(np.real(integrate(np.abs(fp.u) ** 2 + np.abs(fp.v) ** 2, fp.grid)))


def kinetic(fp) -> float:
    """``H = ||grad u||^2 + (kappa/2) ||grad v||^2``."""
    g = fp.grid
    return dirichlet_integral(fp.u, g) + 0.5 * fp.kappa * dirichlet_integral(fp.v, g)


def potential(fp) -> float:
    """``R = Re int conj(v) u^2``; may have either sign."""
    return float(np.real(integrate(np.conj(fp.v) * fp.u ** 2, fp.grid)))


def energy(fp) -> float:
    return kinetic(fp) - potential(fp)


def momentum(fp) -> np.ndarray:
    """``P = Im int (conj(u) grad u + 1/2 conj(v) grad v)``.

    Radial fields carry no momentum, so radial grids return an exact zero
    vector of length ``d``.
    """
    g = fp.grid
    if g.kind == "radial":
        return np.zeros(g.d)
    U, V = g.fft(fp.u), g.fft(fp.v)
    dens = np.abs(U) ** 2 + 0.5 * np.abs(V) ** 2
    return np.array([np.sum(k * dens) for k in g.xi_odd]) * g.spectral_norm()


def coercivity_K(fp) -> float:
    """Virial driver ``K = 2H - 3R``."""
    return 2.0 * kinetic(fp) - 3.0 * potential(fp)


def _J(H, R):
    return H ** 3 / R ** 2 if R > 0 else None


def action_J(fp):
    """``J = H^3 / R^2`` on the set ``R > 0``; ``None`` outside it."""
    return _J(kinetic(fp), potential(fp))


def report(fp) -> FunctionalReport:
    H = kinetic(fp)
    R = potential(fp)
    E = H - R
    return FunctionalReport(M=mass(fp), E=E, H=H, R=R, P=momentum(fp),
                            K=3.0 * E - H, J=_J(H, R))


def interaction_constant(kappa: float) -> float:
    """``C(kappa) = sqrt(8 / (27 kappa))`` bounding ``|R| <= C H^{3/2}``."""
    return sqrt(8.0 / (27.0 * kappa))


def interaction_bound_check(fp):
    """Return ``(|R|, C(kappa) H^{3/2}, ok)``."""
    lhs = abs(potential(fp))
    rhs = interaction_constant(fp.kappa) * kinetic(fp) ** 1.5
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-10))


# ---------------------------------------------------------------- trapping

def _profile(C_GN):
    return lambda y: y - C_GN * y ** 1.5


def trapping_deltas(E0: float, gs):
    """Constants ``(delta, delta', delta'')`` for data below both thresholds.

    ``delta = 1 - E0/E_W``; ``(1 - delta') H_W`` is the root of
    ``y - C_GN y^{3/2} = E0`` on the increasing branch ``[0, y0]``;
    ``delta'' = 2 (1 - sqrt(1 - delta'))``.

    Raises
    ------
    ValueError
        If ``E0 >= E_W``: the thresholds give no trapping there.
    """
    if not E0 < gs.E_W:
        raise ValueError(f"E0={E0} is not below E_W={gs.E_W}")
    f = _profile(gs.C_GN)
    y0 = 4.0 / (9.0 * gs.C_GN ** 2)
    delta = 1.0 - E0 / gs.E_W
    if E0 <= 0.0:
        # lower branch collapses to y = 0
        y = 0.0
    else:
        y = brentq(lambda s: f(s * gs.H_W) - E0, 0.0, y0 / gs.H_W, xtol=1e-14, rtol=1e-14) * gs.H_W
    dp = 1.0 - y / gs.H_W
    dpp = 2.0 * (1.0 - sqrt(max(1.0 - dp, 0.0)))
    return delta, dp, dpp


def trapping_deltas_above(E0: float, gs):
    """Constants ``(delta, delta~', delta~'')`` for data above the kinetic threshold.

    ``(1 + delta~') H_W`` is the root of ``y - C_GN y^{3/2} = E0`` on the
    decreasing branch ``y > y0``, so every solution with ``H(u0) > H_W``
    keeps ``H(u(t)) >= (1 + delta~') H_W``.  ``delta~'' = 1 - (1 - delta)/(1 + delta~')``.
    """
    if not E0 < gs.E_W:
        raise ValueError(f"E0={E0} is not below E_W={gs.E_W}")
    f = _profile(gs.C_GN)
    y0 = 4.0 / (9.0 * gs.C_GN ** 2)
    hi = 2.0 * y0
    while f(hi) > E0:
        hi *= 2.0
    y = brentq(lambda s: f(s * gs.H_W) - E0, y0 / gs.H_W, hi / gs.H_W, xtol=1e-14, rtol=1e-14) * gs.H_W
    delta = 1.0 - E0 / gs.E_W
    dtp = y / gs.H_W - 1.0
    dtpp = 1.0 - (1.0 - delta) / (1.0 + dtp)
    return delta, dtp, dtpp
