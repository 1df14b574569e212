"""Virial monitors, cut-off virial, frequency scale, scattering size and the dichotomy classifier."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import pi

import numpy as np
from scipy.special import jv

from . import functionals as fn
from .grids import gradient, gradient_sq_density, integrate

# ------------------------------------------------------------------ virial


@dataclass(frozen=True)
class VirialSample:
    t: float
    I: float
    I_dot: float
    I_ddot_formula: float
    I_ddot_fd: float = float("nan")


def _r2(grid):
    return grid.r ** 2 if grid.kind == "radial" else grid.r2


def virial_weight_density(fp):
    return 2 * fp.kappa * np.abs(fp.u) ** 2 + np.abs(fp.v) ** 2


def virial_ddot_formula(fp, H=None, R=None) -> float:
    """``8 kappa (2H - (d/2) R)``; in six dimensions this is ``8 kappa K``."""
    H = fn.kinetic(fp) if H is None else H
    R = fn.potential(fp) if R is None else R
    d = fp.grid.d
    if d == 6:
        return 8.0 * fp.kappa * (2.0 * H - 3.0 * R)
    return 8.0 * fp.kappa * (2.0 * H - 0.5 * d * R)


def virial_sample(fp, t: float = 0.0, H=None, R=None) -> VirialSample:
    """``I = int |x|^2 (2 kappa |u|^2 + |v|^2)`` and its first two derivatives.

    ``I_dot = 4 kappa Im int (2 conj(u) grad u + conj(v) grad v) . x``.  The
    nonlinear terms cancel in ``I_dot`` only when ``kappa = 1/2``.
    """
    g = fp.grid
    I = float(np.real(integrate(_r2(g) * virial_weight_density(fp), g)))
    gu, gv = gradient(fp.u, g), gradient(fp.v, g)
    xs = (g.r,) if g.kind == "radial" else g.x
    flux = sum(x * (2 * np.conj(fp.u) * a + np.conj(fp.v) * b) for x, a, b in zip(xs, gu, gv))
    I_dot = 4 * fp.kappa * float(np.imag(integrate(flux, g)))
    return VirialSample(t=t, I=I, I_dot=I_dot, I_ddot_formula=virial_ddot_formula(fp, H, R))


def second_difference(t, y):
    """Three-point second derivative on a nonuniform grid; NaN at both ends."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    out = np.full_like(y, np.nan)
    if len(t) >= 3:
        h0 = t[1:-1] - t[:-2]
        h1 = t[2:] - t[1:-1]
        out[1:-1] = 2 * (h0 * y[2:] - (h0 + h1) * y[1:-1] + h1 * y[:-2]) / (h0 * h1 * (h0 + h1))
    return out


# ----------------------------------------------------------- cut-off weight

def _smoothstep(x):
    """Septic smoothstep and its first three derivatives on [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    S = x ** 4 * (35 - 84 * x + 70 * x ** 2 - 20 * x ** 3)
    S1 = 140 * x ** 3 * (1 - x) ** 3
    S2 = 420 * x ** 2 * (1 - x) ** 2 * (1 - 2 * x)
    S3 = 840 * x * (1 - x) * (1 - 5 * x + 5 * x ** 2)
    return S, S1, S2, S3


@dataclass(frozen=True)
class CutoffWeight:
    """Weight ``a(x) = R_cut^2 Gamma(|x|^2 / R_cut^2)``.

    ``Gamma(s) = s`` for ``s <= 1`` and ``Gamma(s) = 2`` for ``s >= 3``.  On
    ``[1, 3]``, ``Gamma' = 1 - S((s - 1)/2)`` with ``S`` the septic
    smoothstep, so ``Gamma`` is C^4, concave, and ``Gamma''`` is smallest at
    ``s = 2``.  Derivative table with ``x = (s - 1)/2``::

        Gamma    = s - 2 (7x^5 - 14x^6 + 10x^7 - 2.5x^8)
        Gamma'   = 1 - S(x)
        Gamma''  = -S'(x) / 2
        Gamma''' = -S''(x) / 4
        Gamma''''= -S'''(x) / 8
    """

    R_cut: float

    def __post_init__(self):
        if not (np.isfinite(self.R_cut) and self.R_cut > 0):
            raise ValueError(f"R_cut must be positive, got {self.R_cut}")

    @staticmethod
    def profile(s):
        """``(Gamma, Gamma', Gamma'', Gamma''', Gamma'''')`` at ``s``."""
        s = np.asarray(s, float)
        x = np.clip((s - 1) / 2, 0.0, 1.0)
        S, S1, S2, S3 = _smoothstep(x)
        inner = x ** 5 * (7 - 14 * x + 10 * x ** 2 - 2.5 * x ** 3)
        G = np.where(s >= 3, 2.0, np.minimum(s, 1.0) + np.where(s > 1, (s - 1) - 2 * inner, 0.0))
        G1 = np.where(s <= 1, 1.0, 1 - S)
        G2 = np.where(s <= 1, 0.0, -S1 / 2)
        G3 = np.where(s <= 1, 0.0, -S2 / 4)
        G4 = np.where(s <= 1, 0.0, -S3 / 8)
        return G, G1, G2, G3, G4

    def derivatives(self, r, d):
        """``(a, a_rr, Lap a, Lap^2 a)`` at radii ``r`` in dimension ``d``."""
        R2 = self.R_cut ** 2
        s = np.asarray(r, float) ** 2 / R2
        G, G1, G2, G3, G4 = self.profile(s)
        a = R2 * G
        a_rr = 2 * G1 + 4 * s * G2
        lap = 2 * d * G1 + 4 * s * G2
        bilap = (4 * d * (d + 2) * G2 + (16 * d + 32) * s * G3 + 16 * s ** 2 * G4) / R2
        return a, a_rr, lap, bilap


def cutoff_virial_driver(fp, w: CutoffWeight | None = None) -> float:
    """Second time derivative of ``int a (2 kappa |u|^2 + |v|^2)`` for the cut-off weight.

    ``8k int (|u_r|^2 + k/2 |v_r|^2) a_rr - 2k int (|u|^2 + k/2 |v|^2) Lap^2 a
    - 2k Re int conj(v) u^2 Lap a`` with ``k = kappa``.  The gradient term uses
    the same face quadrature as :func:`~nls6.functionals.kinetic`, so with
    ``a = |x|^2`` on the support it reduces to ``8 kappa (2H - (d/2) R)``.
    Valid for ``kappa = 1/2``.
    """
    g = fp.grid
    if g.kind != "radial":
        raise TypeError("cutoff_virial_driver needs a RadialGrid")
    w = w or CutoffWeight(g.r_max / 4)
    k, d = fp.kappa, g.d
    _, a_rr_f, _, _ = w.derivatives(g.faces, d)
    _, _, lap, bilap = w.derivatives(g.r, d)
    du, dv = g.face_derivative(fp.u), g.face_derivative(fp.v)
    grad_term = np.sum(g.face_weights * a_rr_f * (np.abs(du) ** 2 + 0.5 * k * np.abs(dv) ** 2))
    mass_term = np.real(integrate((np.abs(fp.u) ** 2 + 0.5 * k * np.abs(fp.v) ** 2) * bilap, g))
    pot_term = np.real(integrate(np.conj(fp.v) * fp.u ** 2 * lap, g))
    return float(8 * k * grad_term - 2 * k * mass_term - 2 * k * pot_term)


# ---------------------------------------------------------- frequency scale

_OCT = 16  # log-spaced wavenumbers per octave for the radial transform


@lru_cache(maxsize=8)
def _hankel(n, r_max, d):
    """Wavenumbers and transform matrix ``F_ij`` with ``fhat(k_i) = F @ f``."""
    from .grids import RadialGrid

    g = RadialGrid(n, r_max, d)
    n_oct = int(np.ceil(np.log2(n))) + 3
    k = (pi / g.h) * 2.0 ** (-np.arange(_OCT * n_oct) / _OCT)
    kr = np.outer(k, g.r)
    nu = d / 2 - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = (2 * pi) ** (d / 2) * kr ** (-nu) * jv(nu, kr)
    F = ker * (g.weights / g.area)
    return k[::-1].copy(), F[::-1].copy()


def _tail_curve(fp):
    """Wavenumbers ``k`` (increasing) and kinetic tail ``T(k) = int_{|xi| >= k}``."""
    g = fp.grid
    k, F = _hankel(g.n, g.r_max, g.d)
    dens = np.abs(F @ fp.u) ** 2 + 0.5 * fp.kappa * np.abs(F @ fp.v) ** 2
    # integrand in log k: |S| (2 pi)^-d k^{d+2} dens
    f = g.area * (2 * pi) ** (-g.d) * k ** (g.d + 2) * dens
    dl = np.log(2.0) / _OCT
    seg = 0.5 * (f[1:] + f[:-1]) * dl
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    return k, tail


def kinetic_tail(fp, N: float) -> float:
    """``int_{|xi| >= N} |xi|^2 (|uhat|^2 + kappa/2 |vhat|^2) dxi / (2 pi)^d``."""
    g = fp.grid
    if g.kind == "tensor":
        dens = np.abs(g.fft(fp.u)) ** 2 + 0.5 * fp.kappa * np.abs(g.fft(fp.v)) ** 2
        mask = g.xi2 >= N ** 2
        return float(np.sum(g.xi2[mask] * dens[mask]) * g.spectral_norm())
    k, tail = _tail_curve(fp)
    if N <= k[0]:
        return float(tail[0])
    if N >= k[-1]:
        return 0.0
    return float(np.interp(np.log(N), np.log(k), tail))


def frequency_scale(fp, eta: float) -> float:
    """Smallest dyadic ``N`` whose kinetic tail above ``N`` is at most ``eta``.

    With the modulus convention ``C(eta) = 1`` this is the reported
    ``lambda``.  Radial grids use a discrete Fourier-Bessel transform
    sampled on log-spaced wavenumbers tied to the grid spacing, so the
    result is exactly covariant under ``r_max -> r_max / 2``.
    """
    g = fp.grid
    if g.kind == "tensor":
        kmax = np.sqrt(g.xi2.max())
        j = np.arange(int(np.floor(np.log2(g.dxi))), int(np.ceil(np.log2(kmax))) + 2)
        for N in 2.0 ** j:
            if kinetic_tail(fp, N) <= eta:
                return float(N)
        return float(2.0 ** j[-1])
    k, tail = _tail_curve(fp)
    lk = np.log(k)
    j = np.arange(int(np.floor(np.log2(k[0]))), int(np.ceil(np.log2(k[-1]))) + 1)
    for N in 2.0 ** j:
        T = tail[0] if N <= k[0] else np.interp(np.log(N), lk, tail)
        if T <= eta:
            return float(N)
    return float(2.0 ** (j[-1] + 1))


# ------------------------------------------------------ centre and tails

def kinetic_density(fp) -> np.ndarray:
    g = fp.grid
    return gradient_sq_density(fp.u, g) + 0.5 * fp.kappa * gradient_sq_density(fp.v, g)


def spatial_center(fp) -> np.ndarray:
    """Centroid of the kinetic density; the origin for radial fields."""
    g = fp.grid
    if g.kind == "radial":
        return np.zeros(g.d)
    dens = kinetic_density(fp)
    tot = dens.sum()
    if tot <= 0:
        return np.zeros(g.d)
    return np.array([np.sum(x * dens) / tot for x in g.x])


def tail_mass(fp, radius: float) -> float:
    """Kinetic energy outside the ball of given radius about :func:`spatial_center`."""
    g = fp.grid
    if g.kind == "radial":
        du, dv = g.face_derivative(fp.u), g.face_derivative(fp.v)
        dens = g.face_weights * (np.abs(du) ** 2 + 0.5 * fp.kappa * np.abs(dv) ** 2)
        return float(np.sum(dens[g.faces >= radius]))
    c = spatial_center(fp)
    dist2 = sum((x - ci) ** 2 for x, ci in zip(g.x, c))
    dens = kinetic_density(fp)
    return float(np.sum(dens[dist2 >= radius ** 2]) * g.dV)


# --------------------------------------------------------- scattering size

def scattering_size_window(series, t_a: float, t_b: float) -> float:
    """Time integral of ``int (|u|^4 + |v|^4)`` over ``[t_a, t_b]``.

    Integrates the piecewise-linear interpolant of the recorded ``L4``
    column, so windows add exactly.
    """
    t = np.asarray(series["t"], float)
    L4 = np.asarray(series["L4"], float)
    if not (t_a < t_b) or t_a < t[0] or t_b > t[-1]:
        raise ValueError(f"window [{t_a}, {t_b}] is outside [{t[0]}, {t[-1]}]")
    inside = (t > t_a) & (t < t_b)
    ts = np.concatenate([[t_a], t[inside], [t_b]])
    ys = np.concatenate([[np.interp(t_a, t, L4)], L4[inside], [np.interp(t_b, t, L4)]])
    return float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(ts)))


# ---------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class Prediction:
    kind: str  # "Scatter", "BlowUp" or "Outside"
    reason: str = ""

    def __str__(self):
        return f"Outside({self.reason})" if self.kind == "Outside" else self.kind


@dataclass(frozen=True)
class DichotomyVerdict:
    prediction: Prediction
    evidence: dict
    observed: str  # "Completed+decaying-R", "BlowUpDetected" or "Inconclusive"
    consistent: bool = False
    details: dict = field(default_factory=dict)

    def to_json(self, run_id: str = "") -> str:
        return json.dumps({"prediction": str(self.prediction), "evidence": self.evidence,
                           "observed": self.observed, "run_id": run_id,
                           "consistent": self.consistent, "details": self.details}, indent=2)


def evidence(fp0, gs) -> dict:
    return {"E0": fn.energy(fp0), "H0": fn.kinetic(fp0), "E_W": gs.E_W, "H_W": gs.H_W}


def classify(fp0, gs, ev: dict | None = None) -> Prediction:
    """Dichotomy prediction from the initial energies and the ground-state thresholds."""
    ev = ev or evidence(fp0, gs)
    E0, H0 = ev["E0"], ev["H0"]
    if abs(H0 - gs.H_W) < 1e-6 * gs.H_W:
        return Prediction("Outside", "threshold-degenerate")
    if not E0 < gs.E_W:
        return Prediction("Outside", "energy above threshold")
    return Prediction("Scatter" if H0 < gs.H_W else "BlowUp")


def scatter_windows(series, frac: float = 1 / 3, n_windows: int = 4):
    """Scattering size over equal windows covering the final ``frac`` of the run."""
    t = np.asarray(series["t"], float)
    edges = np.linspace(t[-1] - frac * (t[-1] - t[0]), t[-1], n_windows + 1)
    return [scattering_size_window(series, a, b) for a, b in zip(edges[:-1], edges[1:])]


def confirm(run, prediction: Prediction, gs, ev: dict | None = None) -> DichotomyVerdict:
    """Compare a finished run with the prediction.

    Blow-up is confirmed only by a ``BlowUpDetected`` outcome.  Scattering is
    at most "supported": the run completed, ``H < H_W`` at every row and the
    windowed scattering size decreased across the final third.
    """
    ev = ev or {}
    name = run.outcome.name
    details = {"outcome": name, "t_final": float(run.series["t"][-1])}
    observed = "Inconclusive"
    if name == "BlowUpDetected":
        observed = "BlowUpDetected"
        details["t_star"] = run.outcome.t
    elif name == "Completed":
        H = np.asarray(run.series["H"], float)
        below = bool(np.all(H < gs.H_W))
        try:
            win = scatter_windows(run.series)
            decaying = bool(np.all(np.diff(win) < 0) and win[-1] <= 0.9 * win[0])
        except ValueError:
            win, decaying = [], False
        details.update(H_max=float(H.max()), windows=win, decaying=decaying)
        if below and decaying:
            observed = "Completed+decaying-R"
    consistent = ((prediction.kind == "BlowUp" and observed == "BlowUpDetected")
                  or (prediction.kind == "Scatter" and observed == "Completed+decaying-R"))
    return DichotomyVerdict(prediction, ev, observed, consistent, details)
