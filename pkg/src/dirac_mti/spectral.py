"""Uniform periodic grid, Fourier pseudospectral transforms and mode symbols.

Fields are stored component-major: a two-component spinor on ``M`` nodes is a
complex array of shape ``(2, M)``.  Fourier coefficients keep the ``1/M``
normalisation on the forward transform,

    U~_l = (1/M) sum_j U_j exp(-2 i pi j l / M),
    U_j  = sum_l U~_l exp(i mu_l (x_j - a)),

and are stored in natural FFT order (``l = 0, 1, ..., M/2-1, -M/2, ..., -1``).
Use :meth:`ModeCoefficients.at` or :meth:`ModeCoefficients.centered` for
``l``-indexed access.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "SpinorField",
    "ModeCoefficients",
    "ModeTable",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "mode_table",
    "apply_projector",
    "mass",
    "energy",
    "fwd",
    "inv",
    "mix",
    "project",
    "GridMismatchError",
]


class GridMismatchError(ValueError):
    """Raised when two objects defined on different grids are combined."""


# ---------------------------------------------------------------------------
# raw array transforms (last axis), shared by every integrator
# ---------------------------------------------------------------------------


def fwd(u: np.ndarray) -> np.ndarray:
    """Forward DFT along the last axis with the 1/M factor."""
    return sfft.fft(u, axis=-1, norm="forward")


def inv(c: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fwd` (plain trigonometric sum, no scaling)."""
    return sfft.ifft(c, axis=-1, norm="forward")


def mix(m11, m12, m21, m22, u: np.ndarray) -> np.ndarray:
    """Apply a per-node (or per-mode) 2x2 matrix to ``u[..., 2, M]``."""
    u0 = u[..., 0, :]
    u1 = u[..., 1, :]
    out = np.empty(u.shape, dtype=complex)
    out[..., 0, :] = m11 * u0 + m12 * u1
    out[..., 1, :] = m21 * u0 + m22 * u1
    return out


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid ``x_j = a + j h`` on ``[a, b)`` with ``M`` nodes."""

    a: float
    b: float
    M: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.b <= self.a:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.M) != self.M or self.M < 4 or self.M % 2:
            raise ValueError(f"M must be an even integer >= 4, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.M

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.a + self.h * np.arange(self.M)
        x.setflags(write=False)
        return x

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers ``l`` in FFT storage order."""
        l = np.fft.fftfreq(self.M, d=1.0 / self.M).round().astype(np.int64)
        l.setflags(write=False)
        return l

    @cached_property
    def mu(self) -> np.ndarray:
        """Wavenumbers ``mu_l = 2 l pi / (b - a)`` in FFT storage order."""
        m = 2.0 * np.pi * self.modes / self.length
        m.setflags(write=False)
        return m

    def index(self, l: int) -> int:
        """Storage index of mode ``l``."""
        if not -self.M // 2 <= l < self.M // 2:
            raise IndexError(f"mode {l} outside [-{self.M // 2}, {self.M // 2 - 1}]")
        return l % self.M

    def is_subgrid_of(self, other: "Grid") -> bool:
        """True if every node of ``self`` is a node of ``other``."""
        return (
            self.a == other.a
            and self.b == other.b
            and other.M % self.M == 0
        )


def make_grid(a: float, b: float, M: int) -> Grid:
    """Build a :class:`Grid`; rejects ``b <= a`` and odd or tiny ``M``."""
    return Grid(float(a), float(b), M)


def _check_same_grid(g1: Grid, g2: Grid) -> None:
    if g1 != g2:
        raise GridMismatchError(f"grid mismatch: {g1} vs {g2}")


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Nodal values of a two-component spinor; ``values`` has shape ``(2, M)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (2, self.grid.M):
            raise ValueError(f"expected values of shape (2, {self.grid.M}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("spinor field has non-finite entries")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_functions(cls, grid: Grid, phi1, phi2) -> "SpinorField":
        x = grid.nodes
        return cls(grid, np.stack([np.broadcast_to(phi1(x), x.shape), np.broadcast_to(phi2(x), x.shape)]))

    @classmethod
    def zeros(cls, grid: Grid) -> "SpinorField":
        return cls(grid, np.zeros((2, grid.M), dtype=complex))

    def restrict(self, grid: Grid) -> "SpinorField":
        """Subsample onto a coarser grid whose nodes are a subset of ours."""
        if not grid.is_subgrid_of(self.grid):
            raise GridMismatchError(f"{grid} is not a sub-grid of {self.grid}")
        stride = self.grid.M // grid.M
        return SpinorField(grid, self.values[:, ::stride].copy())


@dataclass(frozen=True, eq=False)
class ModeCoefficients:
    """Fourier coefficients ``U~_l`` of a spinor, natural FFT order, shape ``(2, M)``."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (2, self.grid.M):
            raise ValueError(f"expected coeffs of shape (2, {self.grid.M}), got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    def at(self, l: int) -> np.ndarray:
        """The 2-vector coefficient of mode ``l`` (``-M/2 <= l < M/2``)."""
        return self.coeffs[:, self.grid.index(l)].copy()

    def centered(self) -> np.ndarray:
        """Coefficients ordered ``l = -M/2, ..., M/2 - 1``."""
        return np.fft.fftshift(self.coeffs, axes=-1)

    @classmethod
    def from_centered(cls, grid: Grid, centered: np.ndarray) -> "ModeCoefficients":
        return cls(grid, np.fft.ifftshift(np.asarray(centered, dtype=complex), axes=-1))

    def norm(self) -> float:
        """Euclidean norm over all modes and components."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


def forward_transform(f: SpinorField) -> ModeCoefficients:
    return ModeCoefficients(f.grid, fwd(f.values))


def inverse_transform(c: ModeCoefficients) -> SpinorField:
    return SpinorField(c.grid, inv(c.coeffs))


# ---------------------------------------------------------------------------
# mode symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModeTable:
    """Per-mode symbols of ``T = -i eps sigma_1 d/dx + sigma_3`` on a grid.

    ``pi_plus`` and ``pi_minus`` hold the symmetric projector entries
    ``(P11, P12, P22)`` as real arrays in FFT order.
    """

    grid: Grid
    eps: float
    mu: np.ndarray
    delta: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    pi_plus: tuple[np.ndarray, np.ndarray, np.ndarray]
    pi_minus: tuple[np.ndarray, np.ndarray, np.ndarray]

    def projector(self, l: int, sign: int) -> np.ndarray:
        """Dense 2x2 matrix ``Pi_l^sign``."""
        k = self.grid.index(l)
        p11, p12, p22 = self.pi_plus if sign > 0 else self.pi_minus
        return np.array([[p11[k], p12[k]], [p12[k], p22[k]]])

    def symbol(self, l: int) -> np.ndarray:
        """Dense 2x2 symbol ``T_l = eps mu_l sigma_1 + sigma_3``."""
        k = self.grid.index(l)
        em = self.eps * self.mu[k]
        return np.array([[1.0, em], [em, -1.0]])


def mode_table(grid: Grid, eps: float) -> ModeTable:
    """Precompute ``mu_l``, ``delta_l``, ``delta_l^{+-}`` and the projectors."""
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    mu = np.array(grid.mu)
    em = eps * mu
    em2 = em * em
    delta = np.sqrt(1.0 + em2)
    # delta - 1 without cancellation; exactly 0 at l = 0
    delta_minus = em2 / (delta + 1.0)
    delta_plus = delta + 1.0

    diag_big = (1.0 + delta) / (2.0 * delta)
    off = em / (2.0 * delta)
    diag_small = delta_minus / (2.0 * delta)
    arrays = [mu, delta, delta_plus, delta_minus, diag_big, off, diag_small, -off]
    for arr in arrays:
        arr.setflags(write=False)
    neg_off = arrays[-1]
    return ModeTable(
        grid=grid,
        eps=float(eps),
        mu=mu,
        delta=delta,
        delta_plus=delta_plus,
        delta_minus=delta_minus,
        pi_plus=(diag_big, off, diag_small),
        pi_minus=(diag_small, neg_off, diag_big),
    )


def project(P, c: np.ndarray) -> np.ndarray:
    """Multiply coefficient array ``c[..., 2, M]`` by symmetric per-mode ``P``."""
    p11, p12, p22 = P
    return mix(p11, p12, p12, p22, c)


def apply_projector(c: ModeCoefficients, table: ModeTable, sign: int) -> ModeCoefficients:
    """Multiply every mode by ``Pi_l^+`` (``sign > 0``) or ``Pi_l^-``."""
    _check_same_grid(c.grid, table.grid)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    P = table.pi_plus if sign > 0 else table.pi_minus
    return ModeCoefficients(c.grid, project(P, c.coeffs))


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def mass(f: SpinorField) -> float:
    """Discrete mass ``h * sum_j |Phi_j|^2``."""
    return float(f.grid.h * np.sum(np.abs(f.values) ** 2))


def energy(f: SpinorField, V, A1, table: ModeTable) -> float:
    """Discrete energy for time-independent potentials.

    The free part ``(1/eps^2) <Phi, T Phi>`` is evaluated mode by mode, the
    potential part by nodal quadrature.
    """
    _check_same_grid(f.grid, table.grid)
    g = f.grid
    c = fwd(f.values)
    em = table.eps * table.mu
    Tc0 = c[0] + em * c[1]
    Tc1 = em * c[0] - c[1]
    kinetic = g.length * np.real(np.sum(np.conj(c[0]) * Tc0 + np.conj(c[1]) * Tc1)) / table.eps**2
    u0, u1 = f.values
    dens = np.abs(u0) ** 2 + np.abs(u1) ** 2
    # Phi^* sigma_1 Phi = 2 Re(conj(u0) u1)
    s1 = 2.0 * np.real(np.conj(u0) * u1)
    potential = g.h * np.sum(np.asarray(V) * dens - np.asarray(A1) * s1)
    return float(kinetic + potential)
