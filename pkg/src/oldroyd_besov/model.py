"""The nondimensional compressible Oldroyd-B system on the torus.

Unknowns are the rescaled density perturbation ``a`` (density ``1 + a``),
the velocity ``u`` and the symmetric extra stress ``tau``. The evolution is

    a_t   = -div u - div(a u)
    u_t   = -(u . grad) u + (1/Re) A u - grad a + (1/Re) div tau
            - (1/Re) I(a) (A u + div tau) + K(a) grad a
    tau_t = -(u . grad) tau - g_alpha(tau, grad u) - tau / We + (2 omega / We) D(u)

with ``A = (1 - omega)(Laplacian + grad div)``, ``I(a) = a / (1 + a)``,
``K(a) = a/(1+a) - (p'(Re(1+a)) - p'(Re)) / (1+a)`` and the pressure law
``p(rho) = rho^gamma``. The objective-derivative term is
``g_alpha = tau W - W tau - alpha_slip (D tau + tau D)``.

The right-hand side is split into a constant-coefficient linear part (handled
exactly by the integrator) and the remaining nonlinear part; both are
implemented directly rather than as a difference.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import littlewood_paley as lp
from .errors import AsymmetricTensorError, ConfigurationError, RankError, VacuumError
from .spectral import (
    Grid,
    SpectralField,
    _backward,
    deformation,
    div,
    div_tensor,
    grad,
    lame_operator,
    leray_P,
    leray_Pperp,
    n_components,
    sym_pairs,
    transform_forward,
)


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters of the system.

    ``gamma`` fixes the pressure law ``p(rho) = rho^gamma``.
    """

    Re: float = 1.0
    We: float = 1.0
    omega: float = 0.5
    alpha_slip: float = 0.0
    gamma: float = 2.0

    def __post_init__(self):
        if not (self.Re > 0 and self.We > 0):
            raise ConfigurationError("Re and We must be positive")
        if not 0.0 < self.omega < 1.0:
            raise ConfigurationError(f"omega must lie in (0, 1), got {self.omega}")
        if not -1.0 <= self.alpha_slip <= 1.0:
            raise ConfigurationError(f"alpha_slip must lie in [-1, 1], got {self.alpha_slip}")
        if not self.gamma >= 1.0:
            raise ConfigurationError(f"gamma must be >= 1, got {self.gamma}")

    def pressure_derivative(self, rho: np.ndarray) -> np.ndarray:
        return self.gamma * np.asarray(rho, dtype=float) ** (self.gamma - 1.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class State:
    """A triple ``(a, u, tau)`` of scalar, vector and sym-tensor fields."""

    a: SpectralField
    u: SpectralField
    tau: SpectralField

    def __post_init__(self):
        if (self.a.rank, self.u.rank, self.tau.rank) != ("scalar", "vector", "sym"):
            raise RankError("State needs (scalar, vector, sym) fields")
        if not (self.a.grid == self.u.grid == self.tau.grid):
            raise ConfigurationError("State fields live on different grids")

    @property
    def grid(self) -> Grid:
        return self.a.grid

    @classmethod
    def zeros(cls, grid: Grid) -> "State":
        return cls(SpectralField.zeros(grid, "scalar"), SpectralField.zeros(grid, "vector"),
                   SpectralField.zeros(grid, "sym"))

    def pack(self) -> np.ndarray:
        """Stack into one ``(1 + d + d(d+1)/2, *shape)`` coefficient array."""
        return np.concatenate([self.a.coeffs, self.u.coeffs, self.tau.coeffs])

    @classmethod
    def unpack(cls, grid: Grid, arr: np.ndarray) -> "State":
        d = grid.dim
        return cls(SpectralField(grid, "scalar", arr[:1]),
                   SpectralField(grid, "vector", arr[1:1 + d]),
                   SpectralField(grid, "sym", arr[1 + d:]))

    def scaled(self, c: float) -> "State":
        return State(self.a * c, self.u * c, self.tau * c)

    def __add__(self, other: "State") -> "State":
        return State(self.a + other.a, self.u + other.u, self.tau + other.tau)

    def __sub__(self, other: "State") -> "State":
        return State(self.a - other.a, self.u - other.u, self.tau - other.tau)


def state_size(dim: int) -> int:
    return 1 + dim + n_components("sym", dim)


# --------------------------------------------------------------------------
# pointwise coefficient functions

def _check_density(a_real: np.ndarray) -> None:
    m = float(np.min(1.0 + a_real))
    if not m > 0.0:
        raise VacuumError(m)


def I_values(a_real: np.ndarray) -> np.ndarray:
    _check_density(a_real)
    return a_real / (1.0 + a_real)


def K_tilde_values(a_real: np.ndarray, params: ModelParams) -> np.ndarray:
    _check_density(a_real)
    dp = params.pressure_derivative
    return (a_real - (dp(params.Re * (1.0 + a_real)) - dp(params.Re))) / (1.0 + a_real)


def I_of_a(a: SpectralField) -> SpectralField:
    """``a / (1 + a)`` evaluated pointwise and transformed back."""
    return transform_forward(I_values(a.real()[0]), a.grid, "scalar")


def K_tilde_of_a(a: SpectralField, params: ModelParams) -> SpectralField:
    return transform_forward(K_tilde_values(a.real()[0], params), a.grid, "scalar")


def _g_alpha_values(tau_full: np.ndarray, grad_u: np.ndarray, alpha: float) -> np.ndarray:
    """Pointwise ``tau W - W tau - alpha (D tau + tau D)`` on ``(d, d, ...)`` arrays."""
    gt = np.swapaxes(grad_u, 0, 1)
    D = 0.5 * (grad_u + gt)
    W = 0.5 * (grad_u - gt)

    def mm(x, y):
        return np.einsum("ik...,kj...->ij...", x, y)

    return mm(tau_full, W) - mm(W, tau_full) - alpha * (mm(D, tau_full) + mm(tau_full, D))


def _sym_store(full: np.ndarray, dim: int) -> np.ndarray:
    return np.stack([0.5 * (full[i, j] + full[j, i]) for i, j in sym_pairs(dim)])


def g_alpha(tau: SpectralField, grad_u: SpectralField, alpha_slip: float,
            dealias: bool = True) -> SpectralField:
    """The objective-derivative term as a sym tensor.

    ``tau`` may be given as ``sym`` or as a full ``matrix`` field; a matrix
    input must be symmetric to 1e-12 relative.
    """
    grid = tau.grid
    if grad_u.rank != "matrix":
        raise RankError("grad_u must be a matrix field")
    if tau.rank == "matrix":
        full = tau.full_matrix_coeffs()
        asym = np.abs(full - np.swapaxes(full, 0, 1)).max()
        if asym > 1e-12 * max(np.abs(full).max(), np.finfo(float).tiny):
            raise AsymmetricTensorError("tau is not symmetric")
    elif tau.rank != "sym":
        raise RankError("tau must be a sym or matrix field")
    d = grid.dim
    tau_r = _backward(tau.full_matrix_coeffs(), grid)
    gu_r = _backward(grad_u.full_matrix_coeffs(), grid)
    vals = _g_alpha_values(tau_r, gu_r, alpha_slip)
    return transform_forward(_sym_store(vals, d), grid, "sym", dealias=dealias)


# --------------------------------------------------------------------------
# right-hand sides

def rhs_linear(state: State, params: ModelParams) -> State:
    """Linearisation at the rest state, built from the field operators."""
    Re, We, om = params.Re, params.We, params.omega
    a, u, tau = state.a, state.u, state.tau
    da = -div(u)
    du = lame_operator(u, om) * (1.0 / Re) - grad(a) + div_tensor(tau) * (1.0 / Re)
    dtau = tau * (-1.0 / We) + deformation(u) * (2.0 * om / We)
    return State(da, du, dtau)


def nonlinear_terms(state: State, params: ModelParams) -> State:
    """Everything in the right-hand side beyond the linear part, dealiased."""
    grid = state.grid
    d = grid.dim
    Re = params.Re
    a, u, tau = state.a, state.u, state.tau
    ar = a.real()[0]
    ur = u.real()
    Kv = K_tilde_values(ar, params)
    Iv = ar / (1.0 + ar)
    grad_a = grad(a).real()
    grad_u = _backward(grad(u).coeffs, grid).reshape((d, d) + grid.shape)
    visc = (lame_operator(u, params.omega) + div_tensor(tau)).real()
    tau_c = tau.coeffs
    dtau = np.stack([_backward(1j * grid.xi_odd[j] * tau_c, grid) for j in range(d)])
    tau_full = _backward(tau.full_matrix_coeffs(), grid)

    flux = transform_forward(ar[None] * ur, grid, "vector", dealias=True)
    n_a = -div(flux)

    adv_u = np.einsum("j...,ij...->i...", ur, grad_u)
    n_u_vals = -adv_u - (1.0 / Re) * Iv[None] * visc + Kv[None] * grad_a
    n_u = transform_forward(n_u_vals, grid, "vector", dealias=True)

    adv_tau = np.einsum("j...,jc...->c...", ur, dtau)
    g = _sym_store(_g_alpha_values(tau_full, grad_u, params.alpha_slip), d)
    n_tau = transform_forward(-adv_tau - g, grid, "sym", dealias=True)
    return State(n_a, n_u, n_tau)


def rhs_full(state: State, params: ModelParams) -> State:
    """Time derivative of the full nonlinear system."""
    return rhs_linear(state, params) + nonlinear_terms(state, params)


class Paralinearizer:
    """Transport by the paraproduct ``T_v . grad`` for a frozen field ``v``.

    The low-frequency cutoffs ``S_{q-1} v_j`` are transformed once and reused.
    """

    def __init__(self, frame: lp.DyadicFrame, v: SpectralField):
        if v.rank != "vector":
            raise RankError("the frozen field v must be a vector field")
        self.frame = frame
        self.grid = v.grid
        lows = np.stack([frame.chi_table(int(q) - 1) for q in frame.qs])
        # (d, nq, *shape): real-space S_{q-1} v_j
        self.v_low = np.stack([_backward(v.coeffs[j][None] * lows, v.grid)
                               for j in range(v.grid.dim)])
        self.is_zero = not np.any(v.coeffs)

    def para(self, j: int, g_coeffs: np.ndarray) -> np.ndarray:
        """Real-space ``T_{v_j} g`` for a scalar coefficient array ``g``."""
        gb = _backward(g_coeffs[None] * self.frame._phi, self.grid)
        return np.einsum("q...,q...->...", self.v_low[j], gb)

    def transport(self, state: State) -> State:
        """``(div(T_v a), T_v . grad u, T_v . grad tau)``."""
        grid = self.grid
        d = grid.dim
        if self.is_zero:
            return State.zeros(grid)
        ik = 1j * grid.xi_odd
        flux = np.stack([self.para(j, state.a.coeffs[0]) for j in range(d)])
        t_a = div(transform_forward(flux, grid, "vector", dealias=True))

        def advect(f: SpectralField) -> np.ndarray:
            out = np.zeros((f.ncomp,) + grid.shape)
            for c in range(f.ncomp):
                for j in range(d):
                    out[c] += self.para(j, ik[j] * f.coeffs[c])
            return out

        t_u = transform_forward(advect(state.u), grid, "vector", dealias=True)
        t_tau = transform_forward(advect(state.tau), grid, "sym", dealias=True)
        return State(t_a, t_u, t_tau)


def rhs_linearized(state: State, params: ModelParams, transport: Paralinearizer | None = None,
                   sources: tuple[SpectralField | None, SpectralField | None,
                                  SpectralField | None] = (None, None, None),
                   ) -> State:
    """Paralinearised system with frozen transport field and sources ``(F, G, L)``.

        a_t   + div(T_v a) + div u = F
        u_t   + T_v . grad u - (1/Re) A u + grad a - (1/Re) div tau = G
        tau_t + T_v . grad tau + tau / We - (2 omega / We) D(u) = L
    """
    out = rhs_linear(state, params)
    if transport is not None:
        out = out - transport.transport(state)
    F, G, L = sources
    grid = state.grid
    return out + State(F if F is not None else SpectralField.zeros(grid, "scalar"),
                       G if G is not None else SpectralField.zeros(grid, "vector"),
                       L if L is not None else SpectralField.zeros(grid, "sym"))


def split_compressible(state: State) -> tuple[SpectralField, SpectralField, SpectralField]:
    """``(a, Pperp u, Pperp div tau)``."""
    return state.a, leray_Pperp(state.u), leray_Pperp(div_tensor(state.tau))


def split_incompressible(state: State) -> tuple[SpectralField, SpectralField]:
    """``(P u, P div tau)``."""
    return leray_P(state.u), leray_P(div_tensor(state.tau))


def max_velocity(state: State) -> float:
    ur = state.u.real()
    return float(np.sqrt(np.sum(ur ** 2, axis=0)).max())
