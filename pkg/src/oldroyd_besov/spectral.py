"""Periodic grids, Fourier-coefficient fields and spectral calculus.

A field lives on the box ``[0, 2*pi*L)^d`` sampled at ``N`` points per axis.
It is stored through its discrete Fourier coefficients in the ``forward``
normalisation, so that

    f(x) = sum_k  f_hat[k] * exp(i * (k / L) . x),

and the physical wavevector of the integer index ``k`` is ``xi = k / L``.
With this convention the L2 norm is ``(2*pi*L)^d * sum |f_hat|^2``.

Tensor ranks
------------
``scalar``  one component.
``vector``  ``d`` components.
``sym``     ``d(d+1)/2`` components, the upper triangle ``i <= j`` in
            row-major order, e.g. ``(11, 12, 22)`` in two dimensions.
``matrix``  ``d*d`` components in row-major order, used for ``grad u`` and
            the antisymmetric vorticity tensor.

All fields are immutable; every operation returns a new field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import (
    ConfigurationError,
    FieldFormatError,
    MeanNonzeroError,
    RankError,
    SingularMultiplierError,
)

RANKS = ("scalar", "vector", "sym", "matrix")

#: Relative size below which a zero-mode coefficient counts as roundoff.
MEAN_TOL = 1e-13


def _valid_points(n: int) -> bool:
    # powers of two, and three times a power of two (e.g. 192)
    m = n
    if m % 3 == 0:
        m //= 3
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """A ``d``-dimensional periodic grid with ``n`` points per axis.

    Parameters
    ----------
    dim
        Spatial dimension, 2 or 3.
    n
        Points per axis; a power of two or three times a power of two,
        at least 16.
    scale
        Box scale ``L``; the box is ``[0, 2*pi*L)^d`` and the smallest
        nonzero wavevector has length ``1/L``.
    """

    dim: int
    n: int
    scale: float = 8.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {self.dim}")
        if int(self.n) != self.n or self.n < 16 or not _valid_points(int(self.n)):
            raise ConfigurationError(
                f"n must be >= 16 and a power of two (or 3 * 2^k), got {self.n}")
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise ConfigurationError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[int, ...]:
        """Spatial axes of a component-major coefficient array."""
        return tuple(range(1, self.dim + 1))

    @property
    def volume(self) -> float:
        return float((2.0 * np.pi * self.scale) ** self.dim)

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers, shape ``(d, *shape)``."""
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return np.stack(np.meshgrid(*([k1] * self.dim), indexing="ij"))

    @cached_property
    def xi(self) -> np.ndarray:
        """Physical wavevectors ``k / L``, shape ``(d, *shape)``."""
        return self.k / self.scale

    @cached_property
    def xi_odd(self) -> np.ndarray:
        """Wavevectors with the Nyquist component zeroed.

        Odd symbols such as ``i xi_j`` cannot keep a real field real at the
        Nyquist index ``k_j = -n/2``, so first derivatives use this array.
        """
        out = self.xi.copy()
        if self.n % 2 == 0:
            out[self.k == -self.n // 2] = 0.0
        return out

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.xi ** 2, axis=0))

    @cached_property
    def xi_norm_sq(self) -> np.ndarray:
        return np.sum(self.xi ** 2, axis=0)

    @cached_property
    def zero_mode(self) -> tuple[int, ...]:
        return (0,) * self.dim

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the two-thirds rule (``3|k_i| < n``)."""
        return np.all(3 * np.abs(self.k) < self.n, axis=0)

    @cached_property
    def max_dealiased_xi(self) -> float:
        return float(self.xi_norm[self.dealias_mask].max())

    @cached_property
    def max_dealiased_xi_axis(self) -> float:
        """Largest ``|xi_i|`` on a single axis among dealiased modes."""
        return float(np.abs(self.xi[:, self.dealias_mask]).max())

    def points(self) -> np.ndarray:
        """Physical grid coordinates, shape ``(d, *shape)``."""
        x1 = 2.0 * np.pi * self.scale * np.arange(self.n) / self.n
        return np.stack(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    def to_dict(self) -> dict:
        return {"d": self.dim, "N": self.n, "L": self.scale}


def n_components(rank: str, dim: int) -> int:
    if rank == "scalar":
        return 1
    if rank == "vector":
        return dim
    if rank == "sym":
        return dim * (dim + 1) // 2
    if rank == "matrix":
        return dim * dim
    raise RankError(f"unknown rank {rank!r}")


def sym_pairs(dim: int) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)``, ``i <= j``, in storage order."""
    return [(i, j) for i in range(dim) for j in range(i, dim)]


def sym_index(dim: int) -> np.ndarray:
    """``idx[i, j]`` is the storage slot of entry ``(i, j)`` of a sym tensor."""
    idx = np.empty((dim, dim), dtype=int)
    for c, (i, j) in enumerate(sym_pairs(dim)):
        idx[i, j] = idx[j, i] = c
    return idx


def component_weights(rank: str, dim: int) -> np.ndarray:
    """Weights turning a sum over stored components into a Frobenius sum."""
    if rank == "sym":
        return np.array([1.0 if i == j else 2.0 for i, j in sym_pairs(dim)])
    return np.ones(n_components(rank, dim))


def component_names(rank: str, dim: int) -> list[str]:
    if rank == "scalar":
        return ["f"]
    if rank == "vector":
        return [f"x{i + 1}" for i in range(dim)]
    if rank == "sym":
        return [f"{i + 1}{j + 1}" for i, j in sym_pairs(dim)]
    return [f"{i + 1}{j + 1}" for i in range(dim) for j in range(dim)]


# --------------------------------------------------------------------------
# transforms

def _negate_index(arr: np.ndarray, axis: int) -> np.ndarray:
    """Reindex ``axis`` by ``k -> -k mod n``."""
    return np.roll(np.flip(arr, axis=axis), 1, axis=axis)


def _forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(values.ndim - grid.dim, values.ndim))
    return sfft.fftn(values, axes=axes, norm="forward")


def _backward(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(coeffs.ndim - grid.dim, coeffs.ndim))
    m = grid.n // 2 + 1
    return sfft.irfftn(coeffs[..., :m], s=grid.shape, axes=axes, norm="forward")


class SpectralField:
    """Fourier coefficients of a real scalar, vector or tensor field.

    ``coeffs`` has shape ``(ncomp, *grid.shape)`` in FFT index order.
    """

    __slots__ = ("grid", "rank", "coeffs")

    def __init__(self, grid: Grid, rank: str, coeffs: np.ndarray):
        if rank not in RANKS:
            raise RankError(f"unknown rank {rank!r}")
        arr = np.asarray(coeffs, dtype=np.complex128)
        expected = (n_components(rank, grid.dim),) + grid.shape
        if arr.shape != expected:
            raise ConfigurationError(
                f"coefficient shape {arr.shape} does not match {expected}")
        if arr.flags.writeable:
            arr = arr.view()
            arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    def __repr__(self) -> str:
        return (f"SpectralField(rank={self.rank!r}, d={self.grid.dim}, "
                f"N={self.grid.n}, L={self.grid.scale})")

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, grid: Grid, rank: str = "scalar") -> "SpectralField":
        return cls(grid, rank, np.zeros((n_components(rank, grid.dim),) + grid.shape,
                                        dtype=np.complex128))

    @classmethod
    def from_real(cls, grid: Grid, rank: str, values: np.ndarray,
                  dealias: bool = False) -> "SpectralField":
        """Transform real samples of shape ``(ncomp, *shape)`` (or ``shape``
        for scalars) into a field; optionally apply the two-thirds rule."""
        return transform_forward(values, grid, rank, dealias=dealias)

    # views ----------------------------------------------------------------
    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    def real(self) -> np.ndarray:
        """Real-space samples, shape ``(ncomp, *shape)``."""
        return transform_backward(self)

    def component(self, c: int) -> "SpectralField":
        return SpectralField(self.grid, "scalar", self.coeffs[c:c + 1])

    @property
    def mean(self) -> np.ndarray:
        """Zero-mode coefficients per component (the spatial means)."""
        return self.coeffs[(slice(None),) + self.grid.zero_mode].copy()

    def full_matrix_coeffs(self) -> np.ndarray:
        """Coefficients as a ``(d, d, *shape)`` array (sym or matrix rank)."""
        d = self.grid.dim
        if self.rank == "sym":
            return self.coeffs[sym_index(d)]
        if self.rank == "matrix":
            return self.coeffs.reshape((d, d) + self.grid.shape)
        raise RankError(f"expected a tensor field, got {self.rank}")

    def hermitian_defect(self) -> float:
        """``max |c(k) - conj(c(-k))|`` relative to ``max |c|``."""
        flipped = self.coeffs
        for ax in self.grid.axes:
            flipped = _negate_index(flipped, ax)
        scale = max(float(np.abs(self.coeffs).max()), np.finfo(float).tiny)
        return float(np.abs(self.coeffs - np.conj(flipped)).max()) / scale

    def max_abs_coeff(self) -> float:
        return float(np.abs(self.coeffs).max())

    # arithmetic -----------------------------------------------------------
    def _check_compatible(self, other: "SpectralField"):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.grid != self.grid or other.rank != self.rank:
            raise RankError("fields differ in grid or rank")
        return None

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.rank, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return SpectralField(self.grid, self.rank, self.coeffs - other.coeffs)

    def __mul__(self, c):
        if isinstance(c, SpectralField):
            return NotImplemented
        return SpectralField(self.grid, self.rank, self.coeffs * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return SpectralField(self.grid, self.rank, self.coeffs / c)

    def __neg__(self):
        return SpectralField(self.grid, self.rank, -self.coeffs)


def transform_forward(values: np.ndarray, grid: Grid, rank: str = "scalar",
                      dealias: bool = False) -> SpectralField:
    """Discrete Fourier transform of real samples into a :class:`SpectralField`."""
    vals = np.asarray(values, dtype=float)
    ncomp = n_components(rank, grid.dim)
    if vals.shape == grid.shape and ncomp == 1:
        vals = vals[None]
    if vals.shape != (ncomp,) + grid.shape:
        raise ConfigurationError(
            f"samples of shape {vals.shape} do not fit rank {rank!r} on "
            f"grid {grid.shape}")
    coeffs = _forward(vals, grid)
    if dealias:
        coeffs *= grid.dealias_mask
    return SpectralField(grid, rank, coeffs)


def transform_backward(field: SpectralField) -> np.ndarray:
    """Inverse transform; returns real samples of shape ``(ncomp, *shape)``."""
    return _backward(field.coeffs, field.grid)


def truncate(field: SpectralField) -> SpectralField:
    """Zero every coefficient outside the two-thirds dealiasing mask."""
    return SpectralField(field.grid, field.rank, field.coeffs * field.grid.dealias_mask)


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product of two scalar fields with the two-thirds rule.

    Exact (alias-free) when both inputs are already dealiased.
    """
    if f.rank != "scalar" or g.rank != "scalar":
        raise RankError("dealiased_product takes scalar fields")
    return transform_forward(f.real()[0] * g.real()[0], f.grid, "scalar", dealias=True)


# --------------------------------------------------------------------------
# inner products

def weighted_total(w: np.ndarray, x: np.ndarray) -> float:
    """``sum_c w[c] * sum(x[c])`` for a component-major array ``x``."""
    return float(np.dot(w, x.reshape(len(w), -1).sum(axis=1)))


def inner(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product ``(f | g)`` on the box, Frobenius for tensors."""
    if f.rank != g.rank or f.grid != g.grid:
        raise RankError("inner product needs fields of equal rank and grid")
    w = component_weights(f.rank, f.grid.dim)
    return f.grid.volume * weighted_total(w, np.real(np.conj(f.coeffs) * g.coeffs))


def l2_norm(f: SpectralField) -> float:
    w = component_weights(f.rank, f.grid.dim)
    return float(np.sqrt(f.grid.volume * weighted_total(w, np.abs(f.coeffs) ** 2)))


def linf_norm(f: SpectralField) -> float:
    """Max over grid points of the pointwise Euclidean/Frobenius magnitude."""
    vals = f.real()
    w = component_weights(f.rank, f.grid.dim)
    return float(np.sqrt(np.einsum("c,c...->...", w, vals ** 2).max()))


# --------------------------------------------------------------------------
# multipliers

@dataclass(frozen=True)
class Multiplier:
    """A Fourier multiplier ``m(D)``.

    ``symbol`` maps the wavevector array ``xi`` of shape ``(d, *shape)`` to
    either an array of shape ``shape`` (scalar symbol, applied to every
    component) or ``(p, q, *shape)`` (matrix symbol acting on ``q`` input
    components and producing ``p``). Homogeneous symbols are usually
    undefined at ``xi = 0``, so the value there is given by ``at_zero``.
    """

    symbol: Callable[[np.ndarray], np.ndarray]
    at_zero: complex | np.ndarray = 0.0
    out_rank: str | None = None


def apply_multiplier(field: SpectralField, m: Multiplier) -> SpectralField:
    """Multiply the coefficients by ``m(xi)`` mode by mode."""
    grid = field.grid
    with np.errstate(all="ignore"):
        sym = np.asarray(m.symbol(grid.xi), dtype=np.complex128)
    zero = grid.zero_mode
    if sym.shape == grid.shape:
        sym = sym.copy()
        sym[zero] = m.at_zero
        bad = ~np.isfinite(sym)
        if bad.any():
            raise SingularMultiplierError(grid.xi[(slice(None),) + tuple(np.argwhere(bad)[0])])
        return SpectralField(grid, m.out_rank or field.rank, field.coeffs * sym)
    if sym.ndim == grid.dim + 2 and sym.shape[2:] == grid.shape:
        if sym.shape[1] != field.ncomp:
            raise RankError("matrix symbol does not match the field's components")
        sym = sym.copy()
        sym[(slice(None), slice(None)) + zero] = m.at_zero
        bad = ~np.all(np.isfinite(sym), axis=(0, 1))
        if bad.any():
            raise SingularMultiplierError(grid.xi[(slice(None),) + tuple(np.argwhere(bad)[0])])
        out_rank = m.out_rank or field.rank
        out = np.einsum("pq...,q...->p...", sym, field.coeffs)
        return SpectralField(grid, out_rank, out)
    raise ConfigurationError(f"symbol returned an array of shape {sym.shape}")


def _check_mean_free(field: SpectralField) -> None:
    mean = np.abs(field.mean).max()
    scale = max(field.max_abs_coeff(), np.finfo(float).tiny)
    if mean > MEAN_TOL * scale:
        raise MeanNonzeroError(
            f"field has a nonzero mean ({mean:.3e}); negative powers of |D| "
            "are only defined on mean-free fields")


def lambda_power(field: SpectralField, sigma: float) -> SpectralField:
    """Apply ``Lambda^sigma = |D|^sigma``; the zero mode is sent to zero."""
    if sigma == 0:
        return field
    if sigma < 0:
        _check_mean_free(field)
    grid = field.grid
    with np.errstate(divide="ignore"):
        sym = grid.xi_norm ** sigma
    sym[grid.zero_mode] = 0.0
    return SpectralField(grid, field.rank, field.coeffs * sym)


# --------------------------------------------------------------------------
# differential operators

def grad(f: SpectralField) -> SpectralField:
    """Gradient: scalar -> vector, vector u -> matrix ``(grad u)_ij = d_j u_i``."""
    grid = f.grid
    ik = 1j * grid.xi_odd
    if f.rank == "scalar":
        return SpectralField(grid, "vector", ik * f.coeffs[0])
    if f.rank == "vector":
        out = f.coeffs[:, None] * ik[None, :]
        return SpectralField(grid, "matrix", out.reshape((-1,) + grid.shape))
    raise RankError(f"grad takes a scalar or vector field, got {f.rank}")


def partial(f: SpectralField, j: int) -> SpectralField:
    """Derivative along axis ``j`` of every component."""
    return SpectralField(f.grid, f.rank, 1j * f.grid.xi_odd[j] * f.coeffs)


def div(v: SpectralField) -> SpectralField:
    if v.rank != "vector":
        raise RankError(f"div takes a vector field, got {v.rank}")
    out = np.sum(1j * v.grid.xi_odd * v.coeffs, axis=0)
    return SpectralField(v.grid, "scalar", out[None])


def div_tensor(tau: SpectralField) -> SpectralField:
    """``(div tau)^k = sum_j d_j tau^{jk}`` for a sym or matrix tensor."""
    if tau.rank not in ("sym", "matrix"):
        raise RankError(f"div_tensor takes a tensor field, got {tau.rank}")
    full = tau.full_matrix_coeffs()
    out = np.einsum("j...,jk...->k...", 1j * tau.grid.xi_odd, full)
    return SpectralField(tau.grid, "vector", out)


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.rank, -f.grid.xi_norm_sq * f.coeffs)


def _leray_parts(v: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    if v.rank != "vector":
        raise RankError(f"Leray projection takes a vector field, got {v.rank}")
    grid = v.grid
    with np.errstate(invalid="ignore", divide="ignore"):
        inv = 1.0 / grid.xi_norm_sq
    inv[grid.zero_mode] = 0.0  # the constant mode belongs to P
    longitudinal = grid.xi * (np.sum(grid.xi * v.coeffs, axis=0) * inv)
    return v.coeffs - longitudinal, longitudinal


def leray_P(v: SpectralField) -> SpectralField:
    """Divergence-free part ``(Id - xi xi^T / |xi|^2) v``."""
    return SpectralField(v.grid, "vector", _leray_parts(v)[0])


def leray_Pperp(v: SpectralField) -> SpectralField:
    """Gradient part ``(xi xi^T / |xi|^2) v``; zero on constants."""
    return SpectralField(v.grid, "vector", _leray_parts(v)[1])


def transpose(m: SpectralField) -> SpectralField:
    full = m.full_matrix_coeffs()
    return SpectralField(m.grid, "matrix",
                         np.swapaxes(full, 0, 1).reshape((-1,) + m.grid.shape))


def sym_to_matrix(tau: SpectralField) -> SpectralField:
    return SpectralField(tau.grid, "matrix",
                         tau.full_matrix_coeffs().reshape((-1,) + tau.grid.shape))


def matrix_to_sym(m: SpectralField) -> SpectralField:
    """Symmetric part of a matrix field, in sym storage."""
    full = m.full_matrix_coeffs()
    pairs = sym_pairs(m.grid.dim)
    out = np.stack([0.5 * (full[i, j] + full[j, i]) for i, j in pairs])
    return SpectralField(m.grid, "sym", out)


def deformation(u: SpectralField) -> SpectralField:
    """``D(u) = (grad u + grad u^T) / 2`` as a sym tensor."""
    return matrix_to_sym(grad(u))


def vorticity(u: SpectralField) -> SpectralField:
    """``W(u) = (grad u - grad u^T) / 2`` as a full matrix field."""
    g = grad(u)
    return (g - transpose(g)) * 0.5


def lame_operator(u: SpectralField, omega: float) -> SpectralField:
    """``A u = (1 - omega)(Laplacian u + grad div u)``."""
    return (laplacian(u) + grad(div(u))) * (1.0 - omega)


# --------------------------------------------------------------------------
# resampling and random data

def _axis_map(n_from: int, n_to: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.fft.fftfreq(n_from, d=1.0 / n_from).astype(int)
    keep = np.abs(k) < min(n_from, n_to) / 2
    src = np.nonzero(keep)[0]
    return src, k[keep] % n_to


def resample(field: SpectralField, grid: Grid, strict: bool = True) -> SpectralField:
    """Move a field to another resolution of the same box by zero padding or
    truncation. With ``strict``, refuse to drop nonzero coefficients."""
    src_grid = field.grid
    if grid.dim != src_grid.dim or grid.scale != src_grid.scale:
        raise ConfigurationError("resample needs grids with equal d and L")
    if grid == src_grid:
        return field
    maps = [_axis_map(src_grid.n, grid.n) for _ in range(grid.dim)]
    src_idx = np.ix_(*[m[0] for m in maps])
    dst_idx = np.ix_(*[m[1] for m in maps])
    out = np.zeros((field.ncomp,) + grid.shape, dtype=np.complex128)
    kept = field.coeffs[(slice(None),) + src_idx]
    out[(slice(None),) + dst_idx] = kept
    if strict:
        dropped = np.ones(src_grid.shape, dtype=bool)
        dropped[src_idx] = False
        lost = float(np.sum(np.abs(field.coeffs[:, dropped]) ** 2))
        total = max(float(np.sum(np.abs(field.coeffs) ** 2)), np.finfo(float).tiny)
        if lost > 1e-24 * total:
            raise ConfigurationError("resample would discard nonzero coefficients")
    return SpectralField(grid, field.rank, out)


def random_field(grid: Grid, rank: str, rng: np.random.Generator,
                 base_n: int | None = None, dealias: bool = True) -> SpectralField:
    """Real white noise, transformed and (by default) dealiased.

    With ``base_n``, the noise is drawn on a grid with ``base_n`` points per
    axis and then zero-padded, so different target resolutions receive the
    same physical field.
    """
    base = Grid(grid.dim, base_n, grid.scale) if base_n else grid
    ncomp = n_components(rank, grid.dim)
    vals = rng.standard_normal((ncomp,) + base.shape)
    f = transform_forward(vals, base, rank, dealias=dealias)
    return resample(f, grid) if base != grid else f


def single_mode(grid: Grid, k: Sequence[int], amplitude: float = 1.0,
                phase: str = "sin") -> SpectralField:
    """The scalar ``amplitude * sin(k . x / L)`` (or ``cos``) for integer ``k``."""
    x = grid.points()
    arg = np.tensordot(np.asarray(k, dtype=float) / grid.scale, x, axes=(0, 0))
    vals = amplitude * (np.sin(arg) if phase == "sin" else np.cos(arg))
    return transform_forward(vals, grid, "scalar")


def stack(fields: Sequence[SpectralField], rank: str) -> SpectralField:
    """Assemble scalar fields into one field of the given rank."""
    grid = fields[0].grid
    return SpectralField(grid, rank, np.concatenate([f.coeffs for f in fields]))


# --------------------------------------------------------------------------
# snapshot files
#
# Layout (version 1):
#   bytes 0..5   magic  b"OBSF1\n"
#   then         one UTF-8 JSON header line ending in b"\n" with keys
#                d, N, L, rank, components, dtype ("<c16"), order
#   then         ncomp * N^d little-endian complex128 values, component
#                major, each component in row-major FFT index order.

MAGIC = b"OBSF1\n"


def save_field(path: str | Path, field: SpectralField, field_id: str = "") -> None:
    header = {
        "d": field.grid.dim,
        "N": field.grid.n,
        "L": field.grid.scale,
        "rank": field.rank,
        "components": component_names(field.rank, field.grid.dim),
        "dtype": "<c16",
        "order": "component-major, row-major FFT index order",
        "id": field_id,
    }
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes())


def load_field(path: str | Path) -> tuple[SpectralField, dict]:
    """Read a snapshot; returns the field and its header dictionary."""
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise FieldFormatError("missing OBSF1 magic", 0)
    end = data.find(b"\n", len(MAGIC))
    if end < 0:
        raise FieldFormatError("unterminated header line", len(MAGIC))
    try:
        header = json.loads(data[len(MAGIC):end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"header is not valid JSON: {exc}", len(MAGIC)) from exc
    try:
        grid = Grid(int(header["d"]), int(header["N"]), float(header["L"]))
        rank = header["rank"]
        ncomp = n_components(rank, grid.dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"bad header: {exc}", len(MAGIC)) from exc
    if header.get("dtype", "<c16") != "<c16":
        raise FieldFormatError(f"unsupported dtype {header['dtype']!r}", len(MAGIC))
    start = end + 1
    expected = ncomp * grid.n ** grid.dim * 16
    if len(data) - start != expected:
        raise FieldFormatError(
            f"payload has {len(data) - start} bytes, expected {expected}",
            start + min(len(data) - start, expected))
    coeffs = np.frombuffer(data, dtype="<c16", offset=start).reshape(
        (ncomp,) + grid.shape)
    return SpectralField(grid, rank, coeffs.astype(np.complex128)), header
