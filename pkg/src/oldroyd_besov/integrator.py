"""Integrating-factor time stepping with exact per-mode linear propagation.

For every wavevector the linearised system is a small ODE ``s' = B(xi) s`` on
the packed coefficients ``s = (a, u, tau)`` (``1 + d + d(d+1)/2`` entries).
The propagator ``exp(h B(xi))`` is computed once per step size by batched
scaling-and-squaring (``scipy.linalg.expm``) and cached.

The second-order scheme is

    S* = E (S + h N(S))
    S_next = E S + (h/2) (E N(S) + N(S*)),      E = exp(h B),

which reproduces the linear flow exactly when ``N = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
import scipy.linalg

from .errors import CFLViolation, ConfigurationError, StabilityError
from .model import ModelParams, State, max_velocity, nonlinear_terms, state_size
from .spectral import Grid, sym_pairs

#: Courant bound for the explicit part.
CFL_LIMIT = 0.5
#: Coefficient magnitude treated as blow-up.
BLOWUP_THRESHOLD = 1e12


def mode_matrices(params: ModelParams, xi: np.ndarray, xi_odd: np.ndarray | None = None
                  ) -> np.ndarray:
    """Assemble ``B(xi)`` for wavevectors ``xi`` of shape ``(d, m)``.

    ``xi_odd`` (default ``xi``) enters odd symbols, i.e. the first-order
    couplings; the grid passes the Nyquist-zeroed array here so the matrices
    agree with the spectral differential operators component by component.
    Returns an ``(m, n, n)`` complex array.
    """
    d, m = xi.shape
    xo = xi if xi_odd is None else xi_odd
    Re, We, om = params.Re, params.We, params.omega
    n = state_size(d)
    B = np.zeros((m, n, n), dtype=np.complex128)
    pairs = sym_pairs(d)
    it0 = 1 + d
    r2 = np.sum(xi ** 2, axis=0)
    # mass: -i xi . u
    for j in range(d):
        B[:, 0, 1 + j] = -1j * xo[j]
    # momentum
    nu = (1.0 - om) / Re
    for i in range(d):
        B[:, 1 + i, 0] = -1j * xo[i]
        for j in range(d):
            B[:, 1 + i, 1 + j] = -nu * xo[i] * xo[j]
        B[:, 1 + i, 1 + i] -= nu * r2
    # (1/Re) (div tau)_k = (i/Re) sum_j xi_j tau_jk
    for c, (i, j) in enumerate(pairs):
        B[:, 1 + j, it0 + c] += 1j * xo[i] / Re
        if i != j:
            B[:, 1 + i, it0 + c] += 1j * xo[j] / Re
    # stress: -tau/We + (i omega / We)(xi_i u_j + xi_j u_i)
    for c, (i, j) in enumerate(pairs):
        B[:, it0 + c, it0 + c] = -1.0 / We
        B[:, it0 + c, 1 + j] += 1j * om / We * xo[i]
        B[:, it0 + c, 1 + i] += 1j * om / We * xo[j]
    return B


def transverse_basis(xi_hat: np.ndarray) -> np.ndarray:
    """Orthonormal vectors orthogonal to unit vectors ``xi_hat`` of shape ``(d, m)``.

    Returns ``(d - 1, d, m)``.
    """
    d, m = xi_hat.shape
    if d == 2:
        return np.stack([-xi_hat[1], xi_hat[0]])[None]
    # pick the coordinate axis least aligned with xi_hat, then two cross products
    axis = np.argmin(np.abs(xi_hat), axis=0)
    e = np.zeros((3, m))
    e[axis, np.arange(m)] = 1.0
    t1 = np.cross(xi_hat.T, e.T).T
    t1 /= np.linalg.norm(t1, axis=0)
    t2 = np.cross(xi_hat.T, t1.T).T
    return np.stack([t1, t2])


def leray_reduction(params: ModelParams, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Intertwining map ``T(xi)`` and reduced block matrix ``Bred(xi)``.

    ``T`` sends ``(a, u, tau)`` to

        (a, xi_hat . u, xi_hat . div tau, e_k . u, e_k . div tau for each transverse e_k)

    and ``Bred`` is block diagonal: the compressible 3x3 block followed by
    ``d - 1`` copies of the incompressible 2x2 block. The linear flow
    satisfies ``T B = Bred T`` exactly for ``xi != 0``.
    """
    d, m = xi.shape
    r = np.sqrt(np.sum(xi ** 2, axis=0))
    xh = xi / r
    Re, We, om = params.Re, params.We, params.omega
    n = state_size(d)
    pairs = sym_pairs(d)
    # divtau_k = i sum_j xi_j tau_jk, as a linear map on stored components
    Dv = np.zeros((m, d, n - 1 - d), dtype=np.complex128)
    for c, (i, j) in enumerate(pairs):
        Dv[:, j, c] += 1j * xi[i]
        if i != j:
            Dv[:, i, c] += 1j * xi[j]
    basis = [xh] + list(transverse_basis(xh))
    nred = 1 + 2 * d
    T = np.zeros((m, nred, n), dtype=np.complex128)
    T[:, 0, 0] = 1.0
    for b, e in enumerate(basis):
        T[:, 1 + 2 * b, 1:1 + d] = e.T
        T[:, 2 + 2 * b, 1 + d:] = np.einsum("km,mkc->mc", e, Dv)
    Bred = np.zeros((m, nred, nred), dtype=np.complex128)
    r2 = r ** 2
    Bred[:, 0, 1] = -1j * r
    Bred[:, 1, 0] = -1j * r
    Bred[:, 1, 1] = -2.0 * (1.0 - om) / Re * r2
    Bred[:, 1, 2] = 1.0 / Re
    Bred[:, 2, 1] = -2.0 * om / We * r2
    Bred[:, 2, 2] = -1.0 / We
    for b in range(1, d):
        iu, iw = 1 + 2 * b, 2 + 2 * b
        Bred[:, iu, iu] = -(1.0 - om) / Re * r2
        Bred[:, iu, iw] = 1.0 / Re
        Bred[:, iw, iu] = -om / We * r2
        Bred[:, iw, iw] = -1.0 / We
    return T, Bred


class LinearModeOperator:
    """Per-mode matrices ``B(xi)`` on a grid plus cached propagators."""

    def __init__(self, params: ModelParams, grid: Grid, check: bool = True):
        self.params = params
        self.grid = grid
        self.n = state_size(grid.dim)
        xi = grid.xi.reshape(grid.dim, -1)
        xo = grid.xi_odd.reshape(grid.dim, -1)
        self.B = mode_matrices(params, xi, xo)
        self._cache: dict[float, np.ndarray] = {}
        if check:
            self.check_stability()

    def spectral_abscissa(self) -> np.ndarray:
        """Largest real part of the eigenvalues of ``B(xi)`` per mode."""
        return np.linalg.eigvals(self.B).real.max(axis=1)

    def check_stability(self, tol: float = 1e-10) -> float:
        ab = self.spectral_abscissa()
        scale = np.maximum(1.0, np.abs(self.B).max(axis=(1, 2)))
        worst = int(np.argmax(ab / scale))
        if ab[worst] > tol * scale[worst]:
            xi = self.grid.xi.reshape(self.grid.dim, -1)[:, worst]
            raise StabilityError(xi, ab[worst])
        return float(ab.max())

    def check_leray_blocks(self) -> float:
        """Max relative residual of ``T B - Bred T`` over nonzero modes.

        Uses the full wavevector; on dealiased modes this coincides with the
        assembled ``B``.
        """
        grid = self.grid
        mask = grid.dealias_mask.ravel().copy()
        mask[0] = False
        xi = grid.xi.reshape(grid.dim, -1)[:, mask]
        T, Bred = leray_reduction(self.params, xi)
        B = self.B[mask]
        res = np.abs(T @ B - Bred @ T).max(axis=(1, 2))
        scale = np.maximum(1.0, np.abs(B).max(axis=(1, 2)))
        return float((res / scale).max())

    def propagator(self, h: float) -> np.ndarray:
        """``exp(h B(xi))`` for every mode, cached by ``h``."""
        key = float(h)
        E = self._cache.get(key)
        if E is None:
            E = scipy.linalg.expm(key * self.B)
            self._cache = {key: E}
            E.flags.writeable = False
        return E

    def apply(self, M: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Apply per-mode matrices ``M`` to a packed state ``(n, *shape)``."""
        flat = s.reshape(self.n, -1)
        out = np.matmul(M, flat.T[:, :, None])[:, :, 0]
        return out.T.reshape(s.shape)

    def apply_pair(self, M: np.ndarray, s: np.ndarray, t: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray]:
        """``(M s, M t)`` in one batched product."""
        both = np.stack([s.reshape(self.n, -1), t.reshape(self.n, -1)], axis=-1)
        out = np.matmul(M, both.transpose(1, 0, 2))
        return (out[:, :, 0].T.reshape(s.shape), out[:, :, 1].T.reshape(t.shape))

    def apply_B(self, s: np.ndarray) -> np.ndarray:
        return self.apply(self.B, s)

    def eigen(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and right eigenvectors per mode."""
        return np.linalg.eig(self.B)


Nonlinear = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class StepConfig:
    """Step size, horizon and scheme (``if-rk2`` or ``if-euler``)."""

    h: float
    T_end: float
    scheme: str = "if-rk2"
    dealias: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError("h must be positive")
        if self.T_end < 0:
            raise ConfigurationError("T_end must be nonnegative")
        if self.scheme not in ("if-rk2", "if-euler"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")

    @property
    def n_steps(self) -> int:
        n = self.T_end / self.h
        k = int(round(n))
        if abs(n - k) > 1e-9 * max(1.0, n):
            raise ConfigurationError("T_end must be an integer multiple of h")
        return k


def full_nonlinearity(params: ModelParams, grid: Grid) -> Nonlinear:
    """``N(S)``: the nonlinear part of the full system on packed states."""

    def N(s: np.ndarray, t: float) -> np.ndarray:
        return nonlinear_terms(State.unpack(grid, s), params).pack()

    return N


def zero_nonlinearity(s: np.ndarray, t: float) -> np.ndarray:
    return np.zeros_like(s)


def courant_number(state: State, h: float) -> float:
    return h * max_velocity(state) * state.grid.max_dealiased_xi


def step(s: np.ndarray, t: float, h: float, op: LinearModeOperator, N: Nonlinear,
         scheme: str = "if-rk2", mask: np.ndarray | None = None) -> np.ndarray:
    """Advance the packed state ``s`` from ``t`` to ``t + h``."""
    E = op.propagator(h)
    if N is zero_nonlinearity:
        return op.apply(E, s)
    n0 = N(s, t)
    if mask is not None:
        n0 = n0 * mask
    if scheme == "if-euler":
        return op.apply(E, s + h * n0)
    Es, En0 = op.apply_pair(E, s, n0)
    s_star = Es + h * En0
    n1 = N(s_star, t + h)
    if mask is not None:
        n1 = n1 * mask
    return Es + 0.5 * h * (En0 + n1)


def check_cfl(state: State, h: float) -> None:
    c = courant_number(state, h)
    if c > CFL_LIMIT:
        raise CFLViolation(h, CFL_LIMIT * h / c * 0.999, c)


class Recorder(Protocol):
    def record(self, t: float, state: State) -> None: ...


@dataclass
class BlowUpReport:
    time: float
    last_valid_time: float
    reason: str


@dataclass
class RunResult:
    times: list[float] = field(default_factory=list)
    states: list[State] = field(default_factory=list)
    final: State | None = None
    blow_up: BlowUpReport | None = None

    @property
    def completed(self) -> bool:
        return self.blow_up is None


def run(initial: State, config: StepConfig, params: ModelParams,
        op: LinearModeOperator | None = None, nonlinear: Nonlinear | None = None,
        recorders: Sequence[Recorder] = (), stride: int = 1, keep_states: bool = False,
        cfl: bool = True) -> RunResult:
    """Integrate from ``initial`` to ``config.T_end``.

    ``nonlinear`` defaults to the full system's nonlinear part. Recorders and
    (optionally) stored snapshots are fed every ``stride`` steps, starting at
    ``t = 0`` and always including the final time.
    """
    grid = initial.grid
    op = op or LinearModeOperator(params, grid)
    N = nonlinear or full_nonlinearity(params, grid)
    mask = grid.dealias_mask if config.dealias else None
    h = config.h
    n_steps = config.n_steps
    result = RunResult()

    def emit(k: int, st: State):
        t = k * h
        for r in recorders:
            r.record(t, st)
        result.times.append(t)
        if keep_states:
            result.states.append(st)

    s = initial.pack()
    state = initial
    emit(0, state)
    for k in range(1, n_steps + 1):
        if cfl and nonlinear is not zero_nonlinearity:
            check_cfl(state, h)
        s_new = step(s, (k - 1) * h, h, op, N, config.scheme, mask)
        peak = np.abs(s_new).max()
        if not np.isfinite(peak) or peak > BLOWUP_THRESHOLD:
            result.blow_up = BlowUpReport(k * h, (k - 1) * h,
                                          "non-finite value" if not np.isfinite(peak)
                                          else f"coefficient magnitude {peak:.3e}")
            break
        s = s_new
        state = State.unpack(grid, s)
        if k % stride == 0 or k == n_steps:
            emit(k, state)
    result.final = state
    return result


def slow_mode_state(op: LinearModeOperator, table: np.ndarray, rng: np.random.Generator,
                    n_slow: int = 1) -> State:
    """Data built from the least-damped eigenvectors of ``B(xi)``.

    On each mode with ``table != 0`` a random complex combination of the
    ``n_slow`` eigenvectors with the largest real part is taken, scaled by
    ``table``. Hermitian symmetry is enforced by averaging with the reflected
    mode (``B(-xi) = conj(B(xi))`` maps eigenvectors to conjugates).
    """
    grid = op.grid
    lam, vec = op.eigen()
    order = np.argsort(-lam.real, axis=1)[:, :n_slow]
    m = lam.shape[0]
    idx = np.arange(m)[:, None]
    chosen = vec[idx, :, order]  # (m, n_slow, n)
    amps = rng.standard_normal((m, n_slow)) + 1j * rng.standard_normal((m, n_slow))
    s = np.einsum("mk,mkn->nm", amps, chosen).reshape((op.n,) + grid.shape)
    s = s * table * grid.dealias_mask
    flipped = s
    for ax in range(1, grid.dim + 1):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    s = 0.5 * (s + np.conj(flipped))
    s[(slice(None),) + grid.zero_mode] = 0.0
    return State.unpack(grid, s)
