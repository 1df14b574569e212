"""Strang-split time integration with conservation monitoring and blow-up detection.

One step is half a nonlinear step, a full linear step, then another half
nonlinear step.  The nonlinear flow ``u' = i v conj(u)``, ``v' = i u^2`` is
pointwise and integrated with RK4.  The linear flow is Crank-Nicolson on
radial grids and exact in Fourier space on tensor grids.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import isfinite

import numpy as np
from scipy.linalg import lapack

from . import diagnostics as dg
from . import functionals as fn
from .grids import FieldPair, integrate


@dataclass(frozen=True)
class IntegratorConfig:
    dt0: float = 1e-3
    dt_min: float = 1e-9
    t_end: float = 1.0
    cfl_c: float = 0.05
    sponge_width: float = 0.0
    sponge_strength: float = 0.0
    record_every: int = 100
    snapshot_every: int = 0
    blowup_H_factor: float = 5.0
    eta_fraction: float = 0.01  # lambda_scale uses eta = eta_fraction * H

    def __post_init__(self):
        if not (0 < self.dt_min < self.dt0):
            raise ValueError("need 0 < dt_min < dt0")
        if self.t_end < 0 or (self.t_end > 0 and self.dt0 > self.t_end):
            raise ValueError("need dt0 <= t_end (t_end = 0 means no steps)")
        if not self.cfl_c > 0:
            raise ValueError("cfl_c must be positive")
        if not 0 <= self.sponge_width < 1 or self.sponge_strength < 0:
            raise ValueError("sponge_width must lie in [0, 1) and sponge_strength >= 0")
        if self.record_every < 1 or self.snapshot_every < 0:
            raise ValueError("record_every >= 1 and snapshot_every >= 0 required")
        if not self.blowup_H_factor > 1:
            raise ValueError("blowup_H_factor must exceed 1")
        for v in (self.dt0, self.dt_min, self.t_end, self.cfl_c, self.sponge_strength):
            if not isfinite(v):
                raise ValueError("integrator parameters must be finite")


@dataclass(frozen=True)
class Outcome:
    name: str  # "Completed", "BlowUpDetected" or "DtFloor"
    t: float
    reason: str = ""

    def __str__(self):
        return self.name if self.name == "Completed" else f"{self.name}({self.t:.6g})"


@dataclass
class RunResult:
    series: dict
    snapshots: list = field(default_factory=list)
    outcome: Outcome | None = None
    final: FieldPair | None = None

    def column(self, name):
        return np.asarray(self.series[name])


# ------------------------------------------------------------ substeps

def _rhs(u, v):
    return 1j * v * np.conj(u), 1j * u * u


def _rk4(u, v, dt):
    with np.errstate(over="ignore", invalid="ignore"):
        a1, b1 = _rhs(u, v)
        a2, b2 = _rhs(u + 0.5 * dt * a1, v + 0.5 * dt * b1)
        a3, b3 = _rhs(u + 0.5 * dt * a2, v + 0.5 * dt * b2)
        a4, b4 = _rhs(u + dt * a3, v + dt * b3)
        u = u + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        v = v + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise FloatingPointError("non-finite values in the nonlinear substep")
    return u, v


def nonlinear_substep(fp: FieldPair, dt: float) -> FieldPair:
    """RK4 step of ``u' = i v conj(u)``, ``v' = i u^2`` at every grid point."""
    if dt == 0:
        return fp
    u, v = _rk4(fp.u, fp.v, dt)
    return fp.replace(u, v)


class _CNCache:
    """LU factors of ``W - i tau A`` keyed by ``tau`` (``A`` the stiffness matrix)."""

    def __init__(self, size=8):
        self.size = size
        self.store = {}

    def solve(self, grid, f, tau):
        key = (id(grid), tau)
        diag, off = grid._tridiag
        w = grid.weights
        if key not in self.store:
            dl = (-1j * tau * off).astype(complex)
            d = (w - 1j * tau * diag).astype(complex)
            du = dl.copy()
            dl2, d2, du2, du3, ipiv, info = lapack.zgttrf(dl, d, du)
            if info != 0:
                raise np.linalg.LinAlgError("singular Crank-Nicolson matrix")
            if len(self.store) >= self.size:
                self.store.pop(next(iter(self.store)))
            self.store[key] = (grid, dl2, d2, du2, du3, ipiv)
        _, dl2, d2, du2, du3, ipiv = self.store[key]
        rhs = w * f + 1j * tau * grid.stiffness_apply(f)
        x, info = lapack.zgttrs(dl2, d2, du2, du3, ipiv, rhs)
        return x


_cn = _CNCache()
_phases = {}


def _linear(u, v, kappa, grid, dt):
    if grid.kind == "radial":
        return _cn.solve(grid, u, 0.5 * dt), _cn.solve(grid, v, 0.5 * kappa * dt)
    key = (id(grid), kappa, dt)
    if key not in _phases:
        if len(_phases) >= 8:
            _phases.pop(next(iter(_phases)))
        ph = -1j * grid.xi2 * dt
        _phases[key] = (grid, np.exp(ph), np.exp(kappa * ph))
    _, eu, ev = _phases[key]
    return grid.ifft(eu * grid.fft(u)), grid.ifft(ev * grid.fft(v))


def linear_substep(fp: FieldPair, dt: float) -> FieldPair:
    """Free flow ``(e^{i t Lap} u, e^{i kappa t Lap} v)`` over ``dt``.

    Radial grids solve ``(W - i dt/2 c A) f+ = (W + i dt/2 c A) f`` where
    ``Lap = W^{-1} A``, a Cayley transform that preserves the discrete mass.
    """
    if dt == 0:
        return fp
    u, v = _linear(fp.u, fp.v, fp.kappa, fp.grid, dt)
    return fp.replace(u, v)


def strang_step(fp: FieldPair, dt: float) -> FieldPair:
    """Second-order step; negative ``dt`` runs the step backwards."""
    if dt == 0:
        return fp
    u, v = _rk4(fp.u, fp.v, 0.5 * dt)
    u, v = _linear(u, v, fp.kappa, fp.grid, dt)
    u, v = _rk4(u, v, 0.5 * dt)
    return fp.replace(u, v)


def sponge_profile(grid, config: IntegratorConfig) -> np.ndarray:
    """Absorption rate: zero inside, rising as ``strength * s^2 (3 - 2s)`` across the outer layer."""
    if grid.kind == "radial":
        rho, edge = grid.r, grid.r_max
    else:
        rho, edge = np.max(np.abs(np.stack(grid.x)), axis=0), grid.L / 2
    start = (1 - config.sponge_width) * edge
    s = np.clip((rho - start) / max(edge - start, 1e-300), 0.0, 1.0)
    return config.sponge_strength * s * s * (3 - 2 * s)


def apply_sponge(fp: FieldPair, dt: float, config: IntegratorConfig, sigma=None) -> FieldPair:
    """Damp both fields by ``exp(-dt sigma)`` near the outer boundary."""
    if config.sponge_width == 0 or config.sponge_strength == 0 or dt == 0:
        return fp
    sigma = sponge_profile(fp.grid, config) if sigma is None else sigma
    damp = np.exp(-abs(dt) * sigma)
    return fp.replace(fp.u * damp, fp.v * damp)


# --------------------------------------------------------------- driver

def _p_names(d):
    return ["Px", "Py", "Pz"][:d] if d <= 3 else [f"Px{i + 1}" for i in range(d)]


def series_columns(d):
    return (["t", "M", "E", "H", "R", "K"] + _p_names(d)
            + ["I", "Idot", "Iddot_formula", "Iddot_fd", "S_accum", "lambda_scale", "dt"])


def l4_density_integral(fp) -> float:
    return float(np.real(integrate(np.abs(fp.u) ** 4 + np.abs(fp.v) ** 4, fp.grid)))


_H_CHECK_EVERY = 10


def _reference_H(fp, thresholds):
    if thresholds is not None:
        return thresholds.H_W
    g = fp.grid
    if g.kind == "radial" and g.d == 6:
        from .ground_state import closed_form_kinetic
        return closed_form_kinetic(fp.kappa)
    return max(fn.kinetic(fp), 1.0)


def evolve(fp0: FieldPair, config: IntegratorConfig, t0: float = 0.0, thresholds=None,
           cutoff=None, on_state=None, on_row=None) -> RunResult:
    """Integrate from ``fp0`` until ``t_end``, a blow-up indicator, or the dt floor.

    ``dt = min(dt0, cfl_c / max(|u|, |v|, 1))``, clipped to land on
    ``t_end``.  Blow-up is flagged when ``H`` exceeds ``blowup_H_factor *
    H_W`` (checked every 10 steps, every step once the amplitude has
    doubled) or values stop being finite.  ``thresholds`` (a ground state)
    supplies ``H_W``; ``cutoff`` adds a cut-off virial column.
    ``on_state(t, fp)`` is called after every step and ``on_row(row)`` after
    every recorded row.
    """
    g = fp0.grid
    cols = series_columns(g.d)
    extra = ["L4", "Iddot_cutoff"] + [f"x{i + 1}" for i in range(g.d)]
    series = {c: [] for c in cols + extra}
    H_cap = config.blowup_H_factor * _reference_H(fp0, thresholds)
    sigma = sponge_profile(g, config) if config.sponge_width > 0 and config.sponge_strength > 0 else None
    p_names = _p_names(g.d)

    def record(fp, t, dt, S):
        rep = fn.report(fp)
        vs = dg.virial_sample(fp, t, rep.H, rep.R)
        L4 = l4_density_integral(fp)
        eta = config.eta_fraction * rep.H
        lam = dg.frequency_scale(fp, eta) if rep.H > 0 else float("nan")
        row = {"t": t, "M": rep.M, "E": rep.E, "H": rep.H, "R": rep.R, "K": rep.K,
               "I": vs.I, "Idot": vs.I_dot, "Iddot_formula": vs.I_ddot_formula,
               "Iddot_fd": float("nan"), "S_accum": S, "lambda_scale": lam, "dt": dt,
               "L4": L4,
               "Iddot_cutoff": dg.cutoff_virial_driver(fp, cutoff) if cutoff is not None else float("nan")}
        row.update(zip(p_names, rep.P))
        row.update((f"x{i + 1}", c) for i, c in enumerate(dg.spatial_center(fp)))
        for k, v in row.items():
            series[k].append(float(v))
        if on_row is not None:
            on_row(row)

    fp, t, S, step = fp0, float(t0), 0.0, 0
    t_end = t0 + config.t_end
    snaps = [(t, fp)] if config.snapshot_every else []
    L4_prev = l4_density_integral(fp)
    # past this amplitude H is checked every step
    amp_alarm = 2.0 * max(np.abs(fp.u).max(), np.abs(fp.v).max(), 1.0)
    record(fp, t, 0.0, S)
    outcome = None
    while t < t_end - 1e-12 * max(1.0, abs(t_end)):
        amp = max(np.abs(fp.u).max(), np.abs(fp.v).max(), 1.0)
        dt = min(config.dt0, config.cfl_c / amp, t_end - t)
        if dt < config.dt_min and t_end - t > config.dt_min:
            outcome = Outcome("DtFloor", t, "time step below dt_min")
            break
        try:
            new = strang_step(fp, dt)
        except FloatingPointError:
            outcome = Outcome("BlowUpDetected", t, "non-finite values")
            break
        if sigma is not None:
            new = apply_sponge(new, dt, config, sigma)
        fp, t, step = new, t + dt, step + 1
        L4 = l4_density_integral(fp)
        S += 0.5 * (L4 + L4_prev) * dt
        L4_prev = L4
        if on_state is not None:
            on_state(t, fp)
        H = fn.kinetic(fp) if step % _H_CHECK_EVERY == 0 or amp > amp_alarm else 0.0
        if not np.isfinite(H) or H > H_cap:
            record(fp, t, dt, S)
            outcome = Outcome("BlowUpDetected", t, "kinetic threshold crossed")
            break
        if step % config.record_every == 0:
            record(fp, t, dt, S)
        if config.snapshot_every and step % config.snapshot_every == 0:
            snaps.append((t, fp))
    if outcome is None:
        outcome = Outcome("Completed", t)
        if series["t"][-1] != t:
            record(fp, t, dt if step else 0.0, S)
    series = {k: np.asarray(v) for k, v in series.items()}
    series["Iddot_fd"] = dg.second_difference(series["t"], series["I"])
    return RunResult(series=series, snapshots=snaps, outcome=outcome, final=fp)
