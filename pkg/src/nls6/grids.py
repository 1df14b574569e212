"""Grids, field storage, discrete operators and quadrature.

Two discretizations are provided:

* :class:`RadialGrid` -- cell-centred radial nodes ``r_j = (j + 1/2) h`` in
  dimension ``d`` (6 for production runs).  Operators are written in
  finite-volume form so that the Laplacian is symmetric with respect to the
  quadrature weights, which makes the Crank--Nicolson flow exactly unitary.
* :class:`TensorGrid` -- a small periodic box in ``d <= 3`` with spectral
  (FFT) operators, used to check dimension-independent identities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import gamma, pi

import numpy as np
from scipy.special import bernoulli


class GridMismatchError(ValueError):
    """A field's shape does not match the grid it is used with."""


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere ``S^{d-1}``."""
    return 2.0 * pi ** (d / 2) / gamma(d / 2)


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


def _midpoint_defect(poly, eta, mmax=8):
    """Exact value of ``int_0^1 P - eta * sum_j P(x_j)`` for a polynomial ``P``.

    Uses the midpoint Euler--Maclaurin expansion, which terminates for
    polynomials and avoids the cancellation of subtracting two O(1) numbers.
    """
    B = bernoulli(2 * mmax)
    out = 0.0
    for m in range(1, mmax + 1):
        b_half = (2.0 ** (1 - 2 * m) - 1.0) * B[2 * m]
        dp = poly.deriv(2 * m - 1)
        coef = b_half * eta ** (2 * m) / gamma(2 * m + 1)
        out -= coef * (dp(1.0) - dp(0.0))
    return out


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform cell-centred radial grid on ``[0, r_max]`` in dimension ``d``.

    Quadrature is the midpoint rule in ``r`` with a three-node end
    correction that makes ``integrate(1)`` reproduce the ball volume to
    rounding error.  The Laplacian is a symmetric finite-volume operator
    with zero flux at the origin and a harmonic-tail (``f ~ r^{2-d}``)
    condition at ``r_max``.
    """

    n: int
    r_max: float
    d: int = 6

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"RadialGrid needs n >= 16, got {self.n}")
        if not (np.isfinite(self.r_max) and self.r_max > 0):
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r_max", float(self.r_max))

    kind = "radial"

    @property
    def h(self) -> float:
        return self.r_max / self.n

    @property
    def shape(self):
        return (self.n,)

    @property
    def size(self) -> int:
        return self.n

    @cached_property
    def r(self) -> np.ndarray:
        return _frozen((np.arange(self.n) + 0.5) * self.h)

    @property
    def nodes(self) -> np.ndarray:
        return self.r

    @cached_property
    def faces(self) -> np.ndarray:
        """Interior cell faces ``rho_k = k h`` for ``k = 1 .. n-1``."""
        return _frozen(np.arange(1, self.n) * self.h)

    @cached_property
    def area(self) -> float:
        return sphere_area(self.d)

    @cached_property
    def weights(self) -> np.ndarray:
        d, n, h = self.d, self.n, self.h
        S = self.area
        w = S * self.r ** (d - 1) * h
        # end correction: exact for r^{d-1} (r - r_max)^k, k = 0, 1, 2
        p = 3
        eta = 1.0 / n
        x_end = (np.arange(n - p, n) + 0.5) * eta
        basis = np.vstack([((x_end - 1.0) / eta) ** k for k in range(p)])
        rhs = []
        for k in range(p):
            P = np.polynomial.Polynomial([0.0] * (d - 1) + [1.0]) * (
                np.polynomial.Polynomial([-1.0, 1.0]) ** k)
            rhs.append(_midpoint_defect(P, eta) / eta ** k)
        delta = np.linalg.solve(basis, np.array(rhs)) * S * self.r_max ** d
        w[n - p:] += delta
        return _frozen(w)

    @cached_property
    def face_coeff(self) -> np.ndarray:
        # c_k rho_k = d * V_k makes the operator exact on r^2
        V = np.cumsum(self.weights)[:-1]
        return _frozen(self.d * V / self.faces)

    @cached_property
    def _tridiag(self):
        """Symmetric stiffness matrix ``A`` with ``Lap = W^{-1} A`` (diag, off)."""
        h, d = self.h, self.d
        c = self.face_coeff / h
        diag = np.zeros(self.n)
        diag[:-1] -= c
        diag[1:] -= c
        # harmonic tail f ~ r^{2-d}: zero residual in the last cell
        if d > 2:
            r1, r0 = self.r[-1], self.r[-2]
            g1, g0 = r1 ** (2 - d), r0 ** (2 - d)
            diag[-1] += c[-1] * (g1 - g0) / g1
        return _frozen(diag), _frozen(c)

    def check(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != self.shape:
            raise GridMismatchError(
                f"field shape {f.shape} does not match radial grid {self.shape}")
        return f

    def stiffness_apply(self, f):
        diag, off = self._tridiag
        out = diag * f
        out[:-1] += off * f[1:]
        out[1:] += off * f[:-1]
        return out

    def ghosted(self, f, left=2, right=2):
        """Pad ``f`` with even mirror ghosts at 0 and harmonic-tail ghosts at r_max."""
        f = np.asarray(f)
        n = self.n
        lo = f[left - 1::-1] if left else f[:0]
        if right:
            r_ext = (np.arange(n, n + right) + 0.5) * self.h
            hi = f[-1] * (self.r[-1] / r_ext) ** max(self.d - 2, 0)
        else:
            hi = f[:0]
        return np.concatenate([lo, f, hi])

    def face_derivative(self, f):
        """Fourth-order derivative of ``f`` at the interior faces."""
        g = self.ghosted(f, 2, 2)
        k = np.arange(1, self.n)
        # g[i + 2] = f_i
        return (27.0 * (g[k + 2] - g[k + 1]) - (g[k + 3] - g[k])) / (24.0 * self.h)

    @cached_property
    def face_weights(self) -> np.ndarray:
        return _frozen(self.area * self.faces ** (self.d - 1) * self.h)

    def rescaled(self, lam: float) -> "RadialGrid":
        """Grid for ``x -> lam x``: same ``n``, radius ``r_max / lam``."""
        return RadialGrid(self.n, self.r_max / lam, self.d)

    def describe(self) -> dict:
        return {"type": "radial", "d": self.d, "n": self.n, "r_max": self.r_max}


@dataclass(frozen=True, eq=False)
class TensorGrid:
    """Periodic box ``[-L/2, L/2)^d`` with ``m`` points per axis (``d <= 3``)."""

    d: int
    L: float
    m: int

    kind = "tensor"

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"TensorGrid supports 1 <= d <= 3, got {self.d}")
        if self.m < 2 or self.m & (self.m - 1):
            raise ValueError(f"m must be a power of two, got {self.m}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def shape(self):
        return (self.m,) * self.d

    @property
    def size(self) -> int:
        return self.m ** self.d

    @property
    def h(self) -> float:
        return self.L / self.m

    @property
    def dV(self) -> float:
        return self.h ** self.d

    @cached_property
    def axis(self) -> np.ndarray:
        return _frozen(-self.L / 2 + self.h * np.arange(self.m))

    @cached_property
    def x(self):
        """Coordinate arrays, one per axis, each of shape ``self.shape``."""
        return tuple(_frozen(a) for a in np.meshgrid(*([self.axis] * self.d), indexing="ij"))

    @cached_property
    def r2(self) -> np.ndarray:
        return _frozen(sum(a ** 2 for a in self.x))

    @cached_property
    def freq_axis(self) -> np.ndarray:
        return _frozen(2 * pi * np.fft.fftfreq(self.m, d=self.h))

    @cached_property
    def xi(self):
        return tuple(_frozen(a) for a in np.meshgrid(*([self.freq_axis] * self.d), indexing="ij"))

    @cached_property
    def xi_odd(self):
        """Frequencies for first derivatives: the unpaired Nyquist mode is set to zero."""
        k = np.array(self.freq_axis)
        k[self.m // 2] = 0.0
        return tuple(_frozen(a) for a in np.meshgrid(*([k] * self.d), indexing="ij"))

    @cached_property
    def xi2(self) -> np.ndarray:
        return _frozen(sum(a ** 2 for a in self.xi))

    @property
    def dxi(self) -> float:
        return 2 * pi / self.L

    def check(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != self.shape:
            raise GridMismatchError(
                f"field shape {f.shape} does not match tensor grid {self.shape}")
        return f

    def fft(self, f):
        return np.fft.fftn(f)

    def ifft(self, F):
        return np.fft.ifftn(F)

    def spectral_norm(self) -> float:
        """Factor turning ``sum |fft(f)|^2 * weight`` into ``int |f|^2``."""
        return self.dV / self.size

    def on_lattice(self, xi, tol=1e-9) -> bool:
        k = np.asarray(xi, dtype=float) / self.dxi
        return bool(np.all(np.abs(k - np.round(k)) < tol))

    def rescaled(self, lam: float) -> "TensorGrid":
        return TensorGrid(self.d, self.L / lam, self.m)

    def describe(self) -> dict:
        return {"type": "tensor", "d": self.d, "m": self.m, "L": self.L}


@dataclass(frozen=True, eq=False)
class FieldPair:
    """The state ``(u, v)`` on a shared grid with coupling ``kappa``.

    Arrays are copied to read-only complex128 on construction.
    """

    u: np.ndarray
    v: np.ndarray
    kappa: float
    grid: RadialGrid | TensorGrid = field(repr=False)

    def __post_init__(self):
        k = float(self.kappa)
        if not (np.isfinite(k) and k > 0):
            raise ValueError(f"kappa must be finite and positive, got {self.kappa}")
        object.__setattr__(self, "kappa", k)
        for name in ("u", "v"):
            a = np.array(getattr(self, name), dtype=np.complex128)
            self.grid.check(a)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    def replace(self, u=None, v=None) -> "FieldPair":
        return FieldPair(self.u if u is None else u, self.v if v is None else v,
                         self.kappa, self.grid)

    def __mul__(self, c):
        return FieldPair(c * self.u, c * self.v, self.kappa, self.grid)

    __rmul__ = __mul__

    def __add__(self, other: "FieldPair"):
        if other.grid is not self.grid:
            raise GridMismatchError("FieldPair addition needs the identical grid")
        return FieldPair(self.u + other.u, self.v + other.v, self.kappa, self.grid)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))


# ---------------------------------------------------------------- operators

def laplacian(f, grid):
    """Discrete Laplacian of a field.

    Radial grids use the second-order finite-volume form of
    ``f'' + (d-1)/r f'``; tensor grids multiply by ``-|xi|^2`` in Fourier space.
    """
    f = grid.check(f)
    if grid.kind == "radial":
        return grid.stiffness_apply(f) / grid.weights
    return grid.ifft(-grid.xi2 * grid.fft(f))


def gradient(f, grid):
    """Gradient components. Radial: ``(f_r,)`` by centred differences."""
    f = grid.check(f)
    if grid.kind == "radial":
        g = grid.ghosted(f, 1, 1)
        return ((g[2:] - g[:-2]) / (2 * grid.h),)
    F = grid.fft(f)
    return tuple(grid.ifft(1j * k * F) for k in grid.xi_odd)


def gradient_sq_density(f, grid) -> np.ndarray:
    """Pointwise ``|grad f|^2`` (centred differences radially, spectral otherwise)."""
    return sum(np.abs(g) ** 2 for g in gradient(f, grid))


def integrate(density, grid) -> float:
    """Quadrature of a real or complex density over the domain."""
    density = grid.check(density)
    if grid.kind == "radial":
        return np.sum(grid.weights * density)
    return np.sum(density) * grid.dV


def dirichlet_integral(f, grid) -> float:
    """``int |grad f|^2 dx``.

    On radial grids this sums fourth-order face derivatives against the
    exact face areas; on tensor grids it is Parseval's identity.
    """
    f = grid.check(f)
    if grid.kind == "radial":
        df = grid.face_derivative(f)
        return float(np.sum(grid.face_weights * np.abs(df) ** 2))
    F = grid.fft(f)
    return float(np.sum(grid.xi2 * np.abs(F) ** 2) * grid.spectral_norm())


def inner(f, g, grid):
    """``int conj(f) g dx``."""
    return integrate(np.conj(f) * g, grid)


def l2_norm(f, grid) -> float:
    return float(np.sqrt(max(np.real(integrate(np.abs(f) ** 2, grid)), 0.0)))


def lp_project(f, grid, N: float):
    """Sharp Littlewood--Paley projection onto the shell ``N/2 < |xi| <= N``."""
    if grid.kind != "tensor":
        raise TypeError("lp_project is spectral and needs a TensorGrid")
    f = grid.check(f)
    kmax = np.sqrt(grid.d) * np.max(np.abs(grid.freq_axis))
    if not (N > 0 and N >= grid.dxi and N / 2 < kmax):
        raise ValueError(f"N={N} is outside the resolvable band [{grid.dxi}, {2 * kmax})")
    k = np.sqrt(grid.xi2)
    mask = (k > N / 2) & (k <= N)
    return grid.ifft(mask * grid.fft(f))


# ------------------------------------------------------------ trial fields

def random_gaussian_pair(grid, kappa, rng, n_bumps=None, complex_phase=True):
    """A smooth decaying pair built from 3-6 Gaussians per component.

    Centres, widths and phases are drawn from ``rng``.  On radial grids the
    bumps are spherical shells ``exp(-(r - r0)^2 / w^2)`` with ``r0`` near
    the origin; widths are kept above four grid spacings.
    """
    comps = []
    for _ in range(2):
        k = n_bumps or int(rng.integers(3, 7))
        f = np.zeros(grid.shape, dtype=complex)
        for _ in range(k):
            amp = rng.uniform(0.2, 1.0)
            phase = np.exp(1j * rng.uniform(0, 2 * pi)) if complex_phase else rng.choice([-1.0, 1.0])
            if grid.kind == "radial":
                scale = min(grid.r_max / 20, 8.0)
                lo = max(4 * grid.h, 0.15 * scale)
                w = rng.uniform(lo, max(scale, 1.5 * lo))
                r0 = rng.uniform(0, 1.5 * scale)
                f += amp * phase * np.exp(-((grid.r - r0) / w) ** 2)
            else:
                lo = max(4 * grid.h, grid.L / 30)
                w = rng.uniform(lo, max(grid.L / 10, 1.5 * lo))
                c = rng.uniform(-grid.L / 8, grid.L / 8, size=grid.d)
                d2 = sum((xa - ca) ** 2 for xa, ca in zip(grid.x, c))
                f += amp * phase * np.exp(-d2 / w ** 2)
        comps.append(f)
    return FieldPair(comps[0], comps[1], kappa, grid)
