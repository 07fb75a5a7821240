"""Periodic spectral substrate: grids, fields, transforms, multipliers, norms.

All computations live on the torus [-L, L)^dim sampled with n points per
axis. Transforms use the unitary (norm-preserving) FFT convention, and
integrals are plain quadrature sums weighted by the cell volume h^dim.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from .errors import GridMismatchError, SymmetryViolationError

_SUPPORTED_DIMS = (1, 2, 3)

# Relative imaginary residue tolerated when casting an inverse transform
# back to a real field.
_IMAG_TOL = 1e-8


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [-half_width, half_width)^dim.

    Nodes are x_i = -L + i*h with h = 2L/n, and the discrete wavenumbers
    are xi_j = pi*j/L for j in {-n/2, ..., n/2 - 1}.
    """

    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim not in _SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension {self.dim}, expected one of {_SUPPORTED_DIMS}")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        n = self.points_per_axis
        if n < 8 or n % 2 != 0:
            raise ValueError("points_per_axis must be an even integer >= 8")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def origin_index(self) -> tuple[int, ...]:
        """Index of the node at x = 0."""
        return (self.points_per_axis // 2,) * self.dim

    @cached_property
    def coordinate_axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_axis)

    @cached_property
    def frequency_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    @cached_property
    def coordinate_mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.coordinate_axis] * self.dim), indexing="ij"))

    @cached_property
    def frequency_mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.frequency_axis] * self.dim), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        """Euclidean distance of every node from the origin."""
        return np.sqrt(sum(m * m for m in self.coordinate_mesh))

    @cached_property
    def frequency_norm(self) -> np.ndarray:
        return np.sqrt(sum(m * m for m in self.frequency_mesh))

    def periodic_distance2(self, center) -> np.ndarray:
        """Squared torus distance of every node from an arbitrary point."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.shape != (self.dim,):
            raise ValueError(f"center must have {self.dim} components")
        span = 2.0 * self.half_width
        out = np.zeros(self.shape)
        for mesh, c in zip(self.coordinate_mesh, center):
            d = np.mod(mesh - c + self.half_width, span) - self.half_width
            out += d * d
        return out

    def nearest_index(self, point) -> tuple[int, ...]:
        """Index tuple of the grid node closest to a point (periodic wrap)."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.shape != (self.dim,):
            raise ValueError(f"point must have {self.dim} components")
        n = self.points_per_axis
        idx = np.rint((point + self.half_width) / self.spacing).astype(int) % n
        return tuple(int(i) for i in idx)


def build_grid(dim: int, half_width: float, points_per_axis: int) -> TorusGrid:
    """Construct a TorusGrid, validating dimension, box size and resolution."""
    return TorusGrid(dim=dim, half_width=float(half_width), points_per_axis=int(points_per_axis))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids")


@dataclass(frozen=True)
class RealField:
    """Real-valued nodal samples on a TorusGrid."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must all be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "RealField":
        return cls(grid, np.zeros(grid.shape))

    def __add__(self, other: "RealField") -> "RealField":
        _check_same_grid(self, other)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        _check_same_grid(self, other)
        return RealField(self.grid, self.values - other.values)

    def __mul__(self, factor) -> "RealField":
        if isinstance(factor, RealField):
            _check_same_grid(self, factor)
            return RealField(self.grid, self.values * factor.values)
        return RealField(self.grid, self.values * float(factor))

    __rmul__ = __mul__

    def __neg__(self) -> "RealField":
        return RealField(self.grid, -self.values)


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients of a field, in FFT layout."""

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {coeffs.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("spectral coefficients must all be finite")
        object.__setattr__(self, "coeffs", coeffs)


def forward_transform(field: RealField) -> SpectralField:
    """Unitary FFT of a real field."""
    return SpectralField(field.grid, np.fft.fftn(field.values, norm="ortho"))


def _to_real(grid: TorusGrid, complex_values: np.ndarray, reference: float) -> RealField:
    # The residue is judged against the input coefficient scale, not the
    # output: a multiplier may legitimately annihilate the field, leaving
    # pure roundoff where any output-relative test would misfire.
    scale = max(float(np.max(np.abs(complex_values))), reference)
    if scale > 0.0:
        residue = float(np.max(np.abs(complex_values.imag))) / scale
        if residue > _IMAG_TOL:
            raise SymmetryViolationError(
                f"imaginary residue {residue:.3e} exceeds {_IMAG_TOL:.0e}; spectrum is not Hermitian"
            )
    return RealField(grid, np.ascontiguousarray(complex_values.real))


def inverse_transform(field: SpectralField) -> RealField:
    """Unitary inverse FFT, discarding a small imaginary residue.

    Raises SymmetryViolationError when the residue exceeds 1e-8 relative
    to the coefficient magnitude, which indicates the coefficients did
    not satisfy the Hermitian symmetry of a real field.
    """
    reference = float(np.max(np.abs(field.coeffs)))
    return _to_real(field.grid, np.fft.ifftn(field.coeffs, norm="ortho"), reference)


def multiplier_values(grid: TorusGrid, multiplier) -> np.ndarray:
    """Evaluate a wavenumber multiplier on the grid's frequency mesh."""
    values = np.asarray(multiplier(*grid.frequency_mesh), dtype=float)
    values = np.broadcast_to(values, grid.shape)
    if not np.all(np.isfinite(values)):
        raise ValueError("multiplier takes non-finite values on the grid")
    return values


def apply_multiplier_values(field: RealField, values: np.ndarray) -> RealField:
    """Apply precomputed multiplier values to a real field."""
    spectrum = np.fft.fftn(field.values, norm="ortho")
    reference = float(np.max(np.abs(spectrum)))
    return _to_real(field.grid, np.fft.ifftn(values * spectrum, norm="ortho"), reference)


def apply_multiplier(field: RealField, multiplier) -> RealField:
    """Apply a real Fourier multiplier m(xi) to a field.

    The multiplier is a callable receiving one mesh array per axis and
    returning real values; the result equals
    inverse_transform(m * forward_transform(field)).
    """
    return apply_multiplier_values(field, multiplier_values(field.grid, multiplier))


def lq_norm(field: RealField, q: float) -> float:
    """Quadrature L^q norm, (h^dim * sum |f|^q)^(1/q); q = inf gives the max norm."""
    if math.isinf(q):
        return float(np.max(np.abs(field.values)))
    if q < 1:
        raise ValueError("q must be >= 1")
    total = float(np.sum(np.abs(field.values) ** q))
    return (field.grid.cell_volume * total) ** (1.0 / q)


def inner_product(f: RealField, g: RealField) -> float:
    """Quadrature L^2 pairing h^dim * sum f*g."""
    _check_same_grid(f, g)
    return float(f.grid.cell_volume * np.sum(f.values * g.values))


def translate(field: RealField, cells) -> RealField:
    """Translate a field by whole grid cells (periodic roll).

    A positive shift of c cells along an axis moves content from node i
    to node i + c, i.e. the result samples f(x - c*h).
    """
    cells = np.atleast_1d(np.asarray(cells, dtype=int))
    if cells.shape != (field.grid.dim,):
        raise ValueError(f"cells must have {field.grid.dim} components")
    return RealField(field.grid, np.roll(field.values, tuple(int(c) for c in cells), axis=tuple(range(field.grid.dim))))
