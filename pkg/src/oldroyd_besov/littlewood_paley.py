"""Dyadic frequency decomposition and Besov-type norms on a periodic grid.

The radial cutoff ``chi`` equals 1 for ``|xi| <= 3/4`` and 0 for
``|xi| >= 4/3``. In between it follows the smooth transition
``s(t) = h(t) / (h(t) + h(1 - t))`` with ``h(t) = exp(-1/t)``. The annulus
function ``phi(xi) = chi(xi/2) - chi(xi)`` is supported in
``3/4 <= |xi| <= 8/3``. The blocks are

    block(f, q)      = phi(2^-q D) f        (the dyadic piece at scale 2^q)
    low_cutoff(f, q) = chi(2^-q D) f        (everything below 2^q, mean included)

Because ``h`` vanishes identically for ``t <= 0``, every support statement
holds exactly in floating point, not just approximately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigurationError, RankError, TraceError
from .spectral import (
    Grid,
    SpectralField,
    _backward,
    component_weights,
    grad,
    l2_norm,
    lambda_power,
    linf_norm,
    partial,
    random_field,
    resample,
    transform_forward,
    weighted_total,
)

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0
PHI_INNER = 3.0 / 4.0
PHI_OUTER = 8.0 / 3.0
MIN_BANDS = 5


def smooth_transition(t: np.ndarray) -> np.ndarray:
    """``h(t) / (h(t) + h(1 - t))``: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        ht = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        u = 1.0 - t
        hu = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    return ht / (ht + hu)


def chi(r: np.ndarray) -> np.ndarray:
    """Radial cutoff as a function of ``|xi|``."""
    r = np.asarray(r, dtype=float)
    return smooth_transition((CHI_OUTER - r) / (CHI_OUTER - CHI_INNER))


def phi(r: np.ndarray) -> np.ndarray:
    """Annulus function ``chi(r/2) - chi(r)``."""
    r = np.asarray(r, dtype=float)
    return chi(r / 2.0) - chi(r)


def _annulus_hit(r: np.ndarray, q: int) -> np.ndarray:
    x = r * 2.0 ** (-q)
    return (x > PHI_INNER) & (x < PHI_OUTER)


@dataclass(frozen=True)
class BesovSpec:
    """Homogeneous Besov index ``(s, p, r)`` with ``p`` in {2, inf}, ``r`` in {1, inf}."""

    s: float
    p: float = 2
    r: float = 1

    def __post_init__(self):
        if self.p not in (2, math.inf) or self.r not in (1, math.inf):
            raise ConfigurationError(
                f"unsupported Besov exponents p={self.p}, r={self.r}; "
                "only p in {2, inf} and r in {1, inf}")


@dataclass(frozen=True)
class HybridSpec:
    """Hybrid index: regularity ``s`` for ``q <= q0`` and ``t`` for ``q > q0``."""

    s: float
    t: float
    q0: int

    def __post_init__(self):
        if not (np.isfinite(self.s) and np.isfinite(self.t)):
            raise ConfigurationError("hybrid regularities must be finite")


class DyadicFrame:
    """Precomputed dyadic multiplier tables for one grid.

    The resolved range ``[q_min, q_max]`` contains every ``q`` whose open
    annulus ``3/4 < 2^-q |xi| < 8/3`` meets a nonzero dealiased wavevector.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        r = grid.xi_norm
        live = grid.dealias_mask.copy()
        live[grid.zero_mode] = False
        radii = r[live]
        lo = int(math.floor(math.log2(radii.min() / PHI_OUTER))) - 1
        hi = int(math.ceil(math.log2(radii.max() / PHI_INNER))) + 1
        hits = [q for q in range(lo, hi + 1) if _annulus_hit(radii, q).any()]
        self.q_min = min(hits)
        self.q_max = max(hits)
        if self.q_max - self.q_min + 1 < MIN_BANDS:
            raise ConfigurationError(
                f"grid resolves only {self.q_max - self.q_min + 1} dyadic bands "
                f"(need {MIN_BANDS}); increase N or L")
        self.qs = np.arange(self.q_min, self.q_max + 1)
        self._phi = np.stack([phi(r * 2.0 ** (-int(q))) for q in self.qs])
        self._phi.flags.writeable = False

    def __repr__(self) -> str:
        return f"DyadicFrame(q_min={self.q_min}, q_max={self.q_max}, grid={self.grid})"

    @property
    def nbands(self) -> int:
        return len(self.qs)

    def index(self, q: int) -> int | None:
        if self.q_min <= q <= self.q_max:
            return int(q - self.q_min)
        return None

    def phi_table(self, q: int) -> np.ndarray:
        i = self.index(q)
        if i is None:
            return np.zeros(self.grid.shape)
        return self._phi[i]

    def chi_table(self, q: int) -> np.ndarray:
        return chi(self.grid.xi_norm * 2.0 ** (-q))

    @cached_property
    def phi_sq_flat(self) -> np.ndarray:
        return (self._phi ** 2).reshape(self.nbands, -1)

    def partition_sum(self) -> np.ndarray:
        """``sum_q phi(2^-q xi)`` over the resolved range, on every mode."""
        return self._phi.sum(axis=0)


def build_frame(grid: Grid) -> DyadicFrame:
    return DyadicFrame(grid)


# --------------------------------------------------------------------------
# blocks

def _scaled(f: SpectralField, table: np.ndarray) -> SpectralField:
    return SpectralField(f.grid, f.rank, f.coeffs * table)


def block(frame: DyadicFrame, f: SpectralField, q: int) -> SpectralField:
    """The dyadic block at index ``q``; zero outside the resolved range."""
    return _scaled(f, frame.phi_table(q))


def low_cutoff(frame: DyadicFrame, f: SpectralField, q: int) -> SpectralField:
    """``chi(2^-q D) f``, i.e. all frequencies below ``2^q`` (mean included)."""
    return _scaled(f, frame.chi_table(q))


def block_widened(frame: DyadicFrame, f: SpectralField, q: int) -> SpectralField:
    """Sum of the blocks ``q-1``, ``q`` and ``q+1``."""
    table = frame.phi_table(q - 1) + frame.phi_table(q) + frame.phi_table(q + 1)
    return _scaled(f, table)


def band_l2_norms(frame: DyadicFrame, f: SpectralField) -> np.ndarray:
    """``||block(f, q)||_{L2}`` for every resolved ``q`` (via Parseval)."""
    w = component_weights(f.rank, f.grid.dim)
    energy = np.einsum("c,c...->...", w, np.abs(f.coeffs) ** 2).ravel()
    return np.sqrt(f.grid.volume * (frame.phi_sq_flat @ energy))


def band_norms(frame: DyadicFrame, f: SpectralField, p: float = 2) -> np.ndarray:
    """Block ``L^p`` norms for ``p`` in {2, inf}."""
    if p == 2:
        return band_l2_norms(frame, f)
    if p == math.inf:
        return np.array([linf_norm(block(frame, f, int(q))) for q in frame.qs])
    raise ConfigurationError(f"unsupported Lebesgue exponent p={p}")


def _weighted_sum(values: np.ndarray, weights: np.ndarray, r: float) -> float:
    terms = weights * values
    if r == 1:
        return float(terms.sum())
    return float(terms.max()) if terms.size else 0.0


def _weights(frame: DyadicFrame, spec: BesovSpec | HybridSpec) -> np.ndarray:
    q = frame.qs.astype(float)
    if isinstance(spec, HybridSpec):
        return np.where(frame.qs <= spec.q0, 2.0 ** (spec.s * q), 2.0 ** (spec.t * q))
    return 2.0 ** (spec.s * q)


def besov_norm(frame: DyadicFrame, f: SpectralField, spec: BesovSpec) -> float:
    """``|| 2^{qs} ||block(f, q)||_{L^p} ||_{l^r}`` over the resolved range."""
    return _weighted_sum(band_norms(frame, f, spec.p), _weights(frame, spec), spec.r)


def hybrid_parts(frame: DyadicFrame, f: SpectralField, spec: HybridSpec) -> tuple[float, float]:
    """Low-frequency part (``q <= q0``) and high-frequency part (``q > q0``)."""
    terms = _weights(frame, spec) * band_l2_norms(frame, f)
    low = frame.qs <= spec.q0
    return float(terms[low].sum()), float(terms[~low].sum())


def hybrid_norm(frame: DyadicFrame, f: SpectralField, spec: HybridSpec) -> float:
    low, high = hybrid_parts(frame, f, spec)
    return low + high


def _check_times(times: np.ndarray, n: int, rho: float) -> float:
    if n == 0:
        raise TraceError("empty trace")
    if rho == 1 and n < 2:
        raise TraceError("an L1-in-time norm needs at least two samples")
    if len(times) != n:
        raise TraceError("times and samples differ in length")
    if n < 2:
        return 0.0
    dt = np.diff(times)
    if dt.min() <= 0 or (dt.max() - dt.min()) > 1e-9 * max(abs(dt.mean()), 1e-300):
        raise TraceError("trace is not uniformly sampled")
    return float(dt.mean())


def time_norm(values: np.ndarray, times: np.ndarray, rho: float) -> np.ndarray:
    """``L^rho`` in time along axis 0 (trapezoid rule for ``rho = 1``)."""
    values = np.asarray(values, dtype=float)
    _check_times(np.asarray(times, dtype=float), values.shape[0], rho)
    if rho == math.inf:
        return values.max(axis=0)
    if rho == 1:
        return np.trapezoid(values, x=times, axis=0)
    raise ConfigurationError(f"unsupported time exponent rho={rho}")


def time_norm_running(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Running ``L^1`` norm ``int_0^t`` at every sample (trapezoid rule)."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    _check_times(times, values.shape[0], math.inf)
    if values.shape[0] < 2:
        return np.zeros_like(values)
    return cumulative_trapezoid(values, x=times, axis=0, initial=0.0)


def chemin_lerner_norm(frame: DyadicFrame, trace: Sequence[SpectralField],
                       times: Sequence[float], rho: float,
                       spec: BesovSpec | HybridSpec) -> float:
    """Time norm of each block first, then the weighted ``l^r`` sum over blocks.

    ``HybridSpec`` is accepted and always summed with ``r = 1``.
    """
    times = np.asarray(times, dtype=float)
    p = spec.p if isinstance(spec, BesovSpec) else 2
    r = spec.r if isinstance(spec, BesovSpec) else 1
    _check_times(times, len(trace), rho)
    per_band = np.stack([band_norms(frame, f, p) for f in trace])
    return _weighted_sum(time_norm(per_band, times, rho), _weights(frame, spec), r)


def classical_time_norm(frame: DyadicFrame, trace: Sequence[SpectralField],
                        times: Sequence[float], rho: float,
                        spec: BesovSpec | HybridSpec) -> float:
    """``L^rho`` in time of the Besov (or hybrid) norm; the Minkowski partner
    of :func:`chemin_lerner_norm`."""
    times = np.asarray(times, dtype=float)
    _check_times(times, len(trace), rho)
    if isinstance(spec, HybridSpec):
        vals = np.array([hybrid_norm(frame, f, spec) for f in trace])
    else:
        vals = np.array([besov_norm(frame, f, spec) for f in trace])
    return float(time_norm(vals, times, rho))


# --------------------------------------------------------------------------
# Bony decomposition

def _require_scalar(*fields: SpectralField) -> None:
    for f in fields:
        if f.rank != "scalar":
            raise RankError("paraproducts act on scalar fields")


def _real_blocks(frame: DyadicFrame, f: SpectralField, tables: np.ndarray) -> np.ndarray:
    return _backward(f.coeffs[0][None] * tables, f.grid)


def _low_tables(frame: DyadicFrame, shift: int) -> np.ndarray:
    return np.stack([frame.chi_table(int(q) + shift) for q in frame.qs])


def bony_parts(frame: DyadicFrame, f: SpectralField, g: SpectralField
               ) -> tuple[SpectralField, SpectralField, SpectralField]:
    """``(T_f g, T_g f, R(f, g))`` computed together, sharing the block transforms.

    All products are formed in real space and truncated once with the
    two-thirds rule, which is exact for dealiased inputs. The identity
    ``f g = T_f g + T_g f + R(f, g)`` then holds up to roundoff whenever
    ``f`` or ``g`` is mean-free (otherwise the product of the means is the
    residual).
    """
    _require_scalar(f, g)
    phis = frame._phi
    lows = _low_tables(frame, -1)
    fb = _real_blocks(frame, f, phis)
    gb = _real_blocks(frame, g, phis)
    fl = _real_blocks(frame, f, lows)
    gl = _real_blocks(frame, g, lows)
    grid = f.grid
    t_fg = np.einsum("q...,q...->...", fl, gb)
    t_gf = np.einsum("q...,q...->...", gl, fb)
    # widened blocks of g: q-1, q, q+1
    gw = gb.copy()
    gw[1:] += gb[:-1]
    gw[:-1] += gb[1:]
    rem = np.einsum("q...,q...->...", fb, gw)
    out = [transform_forward(x, grid, "scalar", dealias=True) for x in (t_fg, t_gf, rem)]
    return out[0], out[1], out[2]


def paraproduct(frame: DyadicFrame, f: SpectralField, g: SpectralField) -> SpectralField:
    """``T_f g = sum_q low_cutoff(f, q-1) * block(g, q)``."""
    _require_scalar(f, g)
    fl = _real_blocks(frame, f, _low_tables(frame, -1))
    gb = _real_blocks(frame, g, frame._phi)
    return transform_forward(np.einsum("q...,q...->...", fl, gb), f.grid, "scalar",
                             dealias=True)


def remainder(frame: DyadicFrame, f: SpectralField, g: SpectralField) -> SpectralField:
    """``R(f, g) = sum_q block(f, q) * (block(g, q-1) + block(g, q) + block(g, q+1))``."""
    _require_scalar(f, g)
    fb = _real_blocks(frame, f, frame._phi)
    gb = _real_blocks(frame, g, frame._phi)
    gw = gb.copy()
    gw[1:] += gb[:-1]
    gw[:-1] += gb[1:]
    return transform_forward(np.einsum("q...,q...->...", fb, gw), f.grid, "scalar",
                             dealias=True)


def product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Dealiased pointwise product of scalar fields."""
    _require_scalar(f, g)
    return transform_forward(f.real()[0] * g.real()[0], f.grid, "scalar", dealias=True)


# --------------------------------------------------------------------------
# commutator and audits

def _advect(v: SpectralField, w: SpectralField) -> SpectralField:
    """``(v . grad) w`` for vector ``v`` and scalar ``w``, dealiased."""
    vr = v.real()
    acc = np.zeros(v.grid.shape)
    for j in range(v.grid.dim):
        acc += vr[j] * partial(w, j).real()[0]
    return transform_forward(acc, v.grid, "scalar", dealias=True)


def _zero_mean(f: SpectralField) -> SpectralField:
    c = f.coeffs.copy()
    c[(slice(None),) + f.grid.zero_mode] = 0.0
    return SpectralField(f.grid, f.rank, c)


def commutator_lambda_inv(frame: DyadicFrame, v: SpectralField, u: SpectralField,
                          q: int) -> SpectralField:
    """``Lambda^-1 (S_{q-1} v . grad) block(u, q) - (S_{q-1} v . grad) Lambda^-1 block(u, q)``.

    ``u`` is scalar (vector fields are handled component by component by the
    caller). The advected block has no zero-frequency content in exact
    arithmetic; its roundoff mean is removed after the check in
    :func:`lambda_power`.
    """
    if v.rank != "vector":
        raise RankError("commutator_lambda_inv needs a vector field v")
    _require_scalar(u)
    vq = low_cutoff(frame, v, q - 1)
    uq = block(frame, u, q)
    first = lambda_power(_advect(vq, uq), -1.0)
    second = _advect(vq, lambda_power(uq, -1.0))
    return _zero_mean(first - second)


@dataclass(frozen=True)
class AuditRow:
    """One line of an audit table."""

    audit: str
    sample: int
    ratio: float
    bound: float
    passed: bool
    skipped: bool = False

    def csv_fields(self) -> list:
        return [self.audit, self.sample, self.ratio, self.bound,
                int(self.passed), int(self.skipped)]


AUDIT_COLUMNS = ["audit", "sample_id", "ratio", "bound", "pass", "skipped"]


def commutator_ratio(frame: DyadicFrame, v: SpectralField, u: SpectralField,
                     q: int) -> float | None:
    """``||commutator|| / (||grad S_{q-1} v||_inf ||Lambda^-1 block(u, q)||)``,
    or ``None`` when the denominator vanishes."""
    vq = low_cutoff(frame, v, q - 1)
    denom = linf_norm(grad(vq)) * l2_norm(lambda_power(block(frame, u, q), -1.0))
    if denom <= 0.0 or not np.isfinite(denom):
        return None
    return l2_norm(commutator_lambda_inv(frame, v, u, q)) / denom


@dataclass(frozen=True)
class BernsteinReport:
    q: int
    ratio: float
    lower: float
    upper: float
    passed: bool


def audit_bernstein(frame: DyadicFrame, f: SpectralField, q: int) -> BernsteinReport:
    """Check ``3/4 2^q ||f|| <= ||grad f|| <= 8/3 2^q ||f||`` for an annulus field.

    ``||grad f||`` is the Frobenius L2 norm of the componentwise gradient.
    """
    grid = f.grid
    scaled = grid.xi_norm * 2.0 ** (-q)
    outside = (scaled <= PHI_INNER) | (scaled >= PHI_OUTER)
    mag2 = np.abs(f.coeffs) ** 2
    peak = mag2.max()
    if peak > 0 and mag2[:, outside].max(initial=0.0) > 1e-28 * peak:
        raise ConfigurationError(f"field is not supported in the annulus of block {q}")
    lower, upper = PHI_INNER * 2.0 ** q, PHI_OUTER * 2.0 ** q
    w = component_weights(f.rank, grid.dim)
    base = weighted_total(w, mag2)
    if base == 0.0:
        return BernsteinReport(q, 0.0, lower, upper, True)
    grad_sq = weighted_total(w, mag2 * np.sum(grid.xi_odd ** 2, axis=0))
    ratio = float(np.sqrt(grad_sq / base))
    return BernsteinReport(q, ratio, lower, upper, bool(lower <= ratio <= upper))


def audit_product_estimate(frame: DyadicFrame, u: SpectralField, v: SpectralField,
                           s1: float, s2: float) -> float:
    """``||u v||_{B^{s1+s2-d/2}} / (||u||_{B^{s1}} ||v||_{B^{s2}})`` with ``(2, 1)`` exponents.

    The product estimate requires ``s1 + s2 > 0`` and ``s1, s2 <= d/2``.
    """
    d = u.grid.dim
    if not (s1 + s2 > 0 and s1 <= d / 2 and s2 <= d / 2):
        raise ConfigurationError("product estimate needs s1 + s2 > 0 and s1, s2 <= d/2")
    num = besov_norm(frame, product(u, v), BesovSpec(s1 + s2 - d / 2))
    den = besov_norm(frame, u, BesovSpec(s1)) * besov_norm(frame, v, BesovSpec(s2))
    return num / den if den > 0 else math.nan


# --------------------------------------------------------------------------
# norm report rows

NORM_COLUMNS = ["field_id", "norm_kind", "s", "t", "p", "r", "q0", "value"]


@dataclass(frozen=True)
class NormRow:
    field_id: str
    kind: str
    s: float
    t: float
    p: float
    r: float
    q0: float
    value: float

    def csv_fields(self) -> list:
        return [self.field_id, self.kind, self.s, self.t, self.p, self.r, self.q0,
                self.value]


def band_random_field(frame: DyadicFrame, rank: str, rng: np.random.Generator,
                      q_lo: int, q_hi: int, base_n: int | None = None) -> SpectralField:
    """White noise filtered to the dyadic bands ``q_lo..q_hi`` (dealiased)."""
    grid = frame.grid
    base = Grid(grid.dim, base_n, grid.scale) if base_n else grid
    noise = random_field(base, rank, rng)
    base_frame = frame if base == grid else DyadicFrame(base)
    table = sum((base_frame.phi_table(q) for q in range(q_lo, q_hi + 1)),
                np.zeros(base.shape))
    f = SpectralField(base, rank, noise.coeffs * table * base.dealias_mask)
    if base != grid:
        f = resample(f, grid)
    return f
