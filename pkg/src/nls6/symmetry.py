"""Scaling, translation and Galilean boosts of field pairs."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import functionals as fn
from .grids import FieldPair


@dataclass(frozen=True)
class BoostParams:
    xi: tuple
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(float(x) for x in np.atleast_1d(self.xi)))
        if self.t != 0.0:
            raise NotImplementedError("only the t = 0 boost is implemented")


def scale_transform(fp: FieldPair, lam: float) -> FieldPair:
    """``g -> lam^2 g(lam x)`` for both components.

    The samples are reused on the grid shrunk by ``lam`` (``r_max / lam`` or
    ``L / lam``), which makes the map exact on the grid.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if lam == 1:
        return fp
    g = fp.grid.rescaled(lam)
    return FieldPair(lam ** 2 * fp.u, lam ** 2 * fp.v, fp.kappa, g)


def _phase(grid, xi):
    return sum(x * k for x, k in zip(grid.x, xi))


def galilean_boost(fp: FieldPair, bp: BoostParams) -> FieldPair:
    """``(e^{i x.xi} u, e^{2 i x.xi} v)``; an invariance of the flow only at ``kappa = 1/2``."""
    g = fp.grid
    if g.kind != "tensor":
        raise TypeError("galilean_boost needs a TensorGrid")
    if len(bp.xi) != g.d:
        raise ValueError(f"xi has {len(bp.xi)} components, grid has d = {g.d}")
    if not g.on_lattice(bp.xi):
        raise ValueError(f"xi = {bp.xi} is not on the frequency lattice 2 pi / L")
    if fp.kappa != 0.5:
        warnings.warn("boost applied at kappa != 1/2: not a symmetry of the flow", stacklevel=2)
    ph = _phase(g, bp.xi)
    return fp.replace(np.exp(1j * ph) * fp.u, np.exp(2j * ph) * fp.v)


def boost_energy_identity_check(fp: FieldPair, bp: BoostParams):
    """``H(boosted) - H - |xi|^2 M`` against ``2 xi . P``.

    Returns ``(lhs, rhs, dev)`` with ``dev = |lhs - rhs| / (1 + |rhs|)``.
    """
    if fp.kappa != 0.5:
        raise ValueError("mass-resonance required: the boost identity holds only at kappa = 1/2")
    xi = np.asarray(bp.xi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        boosted = galilean_boost(fp, bp)
    lhs = fn.kinetic(boosted) - fn.kinetic(fp) - xi @ xi * fn.mass(fp)
    rhs = 2 * xi @ fn.momentum(fp)
    return float(lhs), float(rhs), float(abs(lhs - rhs) / (1 + abs(rhs)))


def optimal_boost(fp: FieldPair) -> np.ndarray:
    """``xi* = -P / M``, the boost minimising ``H``; generally off the lattice."""
    return -fn.momentum(fp) / fn.mass(fp)


def translate(fp: FieldPair, x0) -> FieldPair:
    """Shift by ``x0`` with a spectral phase; exact for any ``x0``."""
    g = fp.grid
    if g.kind != "tensor":
        raise TypeError("translate needs a TensorGrid")
    x0 = np.atleast_1d(np.asarray(x0, float))
    if not np.any(x0):
        return fp
    ph = np.exp(-1j * sum(k * a for k, a in zip(g.xi_odd, x0)))
    return fp.replace(g.ifft(ph * g.fft(fp.u)), g.ifft(ph * g.fft(fp.v)))
