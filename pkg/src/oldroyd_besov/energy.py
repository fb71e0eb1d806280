"""Frequency-banded energy functionals and the constants that define them.

Each dyadic band ``q`` carries two quadratic functionals: ``Y_q`` on the
compressible part ``(a_q, Pperp u_q, Pperp div tau_q)`` and ``Ytilde_q`` on the
incompressible part ``(P u_q, P div tau_q)``. Their form depends on the regime

    low   q <= q1
    mid   q1 < q <= q0
    high  q > q0

and ``X_q = Y_q + Ytilde_q``. Every functional is stored as a list of
coordinate fields ``v_i`` together with a symmetric coefficient matrix ``C``
so that ``Y_q^2 = sum_ij C_ij (v_i | v_j)`` over the block.

Two field-level evaluations are provided and kept separate on purpose:
``band_energy_Y``/``band_energy_Ytilde`` write every term out explicitly on
blocked fields, while ``band_spectrum`` contracts ``C`` with the per-band
inner-product matrix of the coordinates in a single pass over all bands.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import littlewood_paley as lp
from .errors import (
    ConstantsInconsistencyError,
    GramViolationError,
    InfeasibleThresholdError,
    TraceError,
)
from .model import ModelParams, State, split_compressible, split_incompressible
from .spectral import (
    SpectralField,
    component_weights,
    grad,
    inner,
    lambda_power,
    laplacian,
    linf_norm,
)

#: Relative slack for floating-point evaluation of tight inequalities.
TIGHT_RTOL = 1e-12
#: Radicands below ``-GRAM_TOL * scale`` are treated as genuine violations.
GRAM_TOL = 1e-12

REGIMES = ("low", "mid", "high")


# --------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class EnergyConstants:
    """Thresholds and coefficients of the band functionals."""

    q0: int
    q1: int
    M: float
    M_prime: float
    alpha_comp: float
    beta_comp: float

    def regime(self, q: int) -> str:
        if q > self.q0:
            return "high"
        if q > self.q1:
            return "mid"
        return "low"

    def s_weight(self, q: int) -> float:
        return 2.0 ** q if q > self.q0 else 1.0

    def s_tilde_weight(self, q: int) -> float:
        return 1.0 if q > self.q0 else 2.0 ** (2 * q)

    def to_dict(self) -> dict:
        return asdict(self)


def q0_bound(params: ModelParams) -> float:
    """Lower bound on ``2^q0``."""
    Re, We, om = params.Re, params.We, params.omega
    return (4.0 / 3.0) ** 1.5 * math.sqrt(2.0 * Re * (Re * We + 2.0) / ((1.0 - om) ** 3 * We))


def m_prime(params: ModelParams) -> float:
    rw = params.Re * params.We
    return 4.0 / 3.0 * (rw + 1.0 / rw) + 2.0


def q1_bound(params: ModelParams) -> float:
    """Upper bound on ``2^q1``."""
    Re, We = params.Re, params.We
    rw = Re * We
    mp = m_prime(params)
    candidates = (1.0, Re, 2.0 / rw ** 0.25, math.sqrt(We / Re), 2.0 * (Re / We) ** (1.0 / 6.0),
                  math.sqrt(mp - 1.0) / (2.0 * mp), math.sqrt(Re / We))
    return 3.0 / 32.0 * min(candidates)


def _smallest_power_above(x: float) -> int:
    q = math.ceil(math.log2(x))
    while 2.0 ** (q - 1) >= x:
        q -= 1
    while 2.0 ** q < x:
        q += 1
    return q


def _largest_power_below(x: float) -> int:
    q = math.floor(math.log2(x))
    while 2.0 ** (q + 1) <= x:
        q += 1
    while 2.0 ** q > x:
        q -= 1
    return q


def alpha_bounds(params: ModelParams, q0: int) -> dict[str, float]:
    c = 2.0 ** (-q0) * 3.0 / 32.0 * params.Re
    return {"quarter": 0.25, "linear": c, "squared": c * c}


def beta_bounds(params: ModelParams, q0: int, alpha: float) -> dict[str, float]:
    Re, We, om = params.Re, params.We, params.omega
    return {
        "quarter": 0.25,
        "sqrt": 2.0 ** (-q0) * 3.0 / 16.0 * math.sqrt(om * Re / We),
        "inverse_square": (8.0 / 3.0 * 2.0 ** q0) ** (-2) * om * Re / (4.0 * We),
        "alpha": om * alpha / (2.0 * Re * We),
        "root_half_omega": math.sqrt(om / 2.0),
    }


def derive_constants(params: ModelParams, verify: bool = True) -> EnergyConstants:
    """Extremal thresholds and coefficients for ``params``.

    ``q0`` is the smallest admissible integer, ``q1`` the largest, and the
    mid-band couplings ``alpha_comp``/``beta_comp`` sit at their upper bounds.
    """
    q0 = _smallest_power_above(q0_bound(params))
    q1 = _largest_power_below(q1_bound(params))
    if q1 >= q0:
        raise InfeasibleThresholdError(q0, q1)
    alpha = min(alpha_bounds(params, q0).values())
    beta = min(beta_bounds(params, q0, alpha).values())
    consts = EnergyConstants(q0=q0, q1=q1, M=params.Re * params.We + 2.0,
                             M_prime=m_prime(params), alpha_comp=alpha, beta_comp=beta)
    if verify:
        verify_coefficient_inequalities(consts, params)
    return consts


@dataclass(frozen=True)
class InequalityCheck:
    """``lhs >= bound`` with a relative slack for exactly tight cases."""

    name: str
    lhs: float
    bound: float

    @property
    def margin(self) -> float:
        return self.lhs - self.bound

    @property
    def passed(self) -> bool:
        return self.margin >= -TIGHT_RTOL * max(1.0, abs(self.bound), abs(self.lhs))

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "bound": self.bound,
                "margin": self.margin, "passed": self.passed}


def coefficient_inequalities(consts: EnergyConstants, params: ModelParams) -> list[InequalityCheck]:
    """Evaluate every inequality the constants are required to satisfy."""
    Re, We, om = params.Re, params.We, params.omega
    rw = Re * We
    M, Mp = consts.M, consts.M_prime
    b = 8.0 / 3.0 * 2.0 ** consts.q1
    h0 = 4.0 / 3.0 * 2.0 ** (-consts.q0)
    nu = (1.0 - om) / Re
    checks = [
        InequalityCheck("high:M", M - rw - 1.5, 0.5),
        InequalityCheck("high:damping",
                        (2 * M - 2 - rw) * nu - h0 ** 2 * 2 * M ** 2 / ((1 - om) ** 2 * We),
                        (rw + 2) / 4 * nu),
        InequalityCheck("high:incompressible", nu / 2 - h0 ** 2 * 2 / ((1 - om) * We), 0.0),
        InequalityCheck("q0:threshold", 2.0 ** consts.q0, q0_bound(params)),
        InequalityCheck("q1:threshold", q1_bound(params), 2.0 ** consts.q1),
        InequalityCheck("q1:Re", 3 * Re / 32, 2.0 ** consts.q1),
        InequalityCheck("q1:absolute", 3.0 / 16.0, 2.0 ** consts.q1),
        InequalityCheck("low:b4", 1.0 / 16.0, rw * b ** 4),
        InequalityCheck("low:b2_M", 1.0 / 16.0, b ** 2 * 4 * Mp ** 2 / (Mp - 1)),
        InequalityCheck("low:b2_ratio", 1.0 / 16.0, b ** 2 * Re / We),
        InequalityCheck("low:b6", 1.0 / 16.0, 4 * We / Re * b ** 6),
        InequalityCheck("low:b2", 1.0 / 8.0, 2 * b ** 2),
        InequalityCheck("low:M_prime", Mp - 17.0 / 4.0, 5.0 / 12.0),
        InequalityCheck("low:velocity",
                        0.75 - b ** 2 * (4 * Mp ** 2 * We / ((Mp - 1) * Re) + Re / We)
                        - 4 * We / Re * b ** 6 - 2 * b ** 2, 7.0 / 16.0),
        InequalityCheck("low:density", 0.5 - rw * b ** 4, 7.0 / 16.0),
        InequalityCheck("low:stress", 0.75 * Mp - 1.5 - (rw - 1) ** 2 / rw, 2.0),
    ]
    for key, value in alpha_bounds(params, consts.q0).items():
        checks.append(InequalityCheck(f"alpha:{key}", value, consts.alpha_comp))
    for key, value in beta_bounds(params, consts.q0, consts.alpha_comp).items():
        checks.append(InequalityCheck(f"beta:{key}", value, consts.beta_comp))
    return checks


def verify_coefficient_inequalities(consts: EnergyConstants, params: ModelParams
                                    ) -> list[InequalityCheck]:
    """Run every check and raise on the first batch of failures."""
    checks = coefficient_inequalities(consts, params)
    failures = [c.name for c in checks if not c.passed]
    if failures:
        raise ConstantsInconsistencyError(
            f"coefficient inequalities fail for {params.to_dict()}", failures)
    return checks


# --------------------------------------------------------------------------
# Gram matrices on worst-case coupling coordinates

@dataclass(frozen=True)
class GramReport:
    """Worst-case Gram matrix of a functional and its coercivity margin.

    ``matrix`` acts on the vector of L2 norms of the coordinates after each
    cross term has been bounded below by Cauchy-Schwarz and the band's
    Bernstein factor. ``margin`` is the smallest eigenvalue of
    ``matrix - diag(coefficients)``; it is nonnegative exactly when the
    functional dominates the claimed diagonal form.
    """

    functional: str
    regime: str
    q: int
    labels: tuple[str, ...]
    matrix: np.ndarray
    coefficients: np.ndarray
    margin: float

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    @property
    def passed(self) -> bool:
        scale = max(1.0, float(np.abs(self.matrix).max()))
        return self.margin >= -GRAM_TOL * scale

    def to_dict(self) -> dict:
        return {"functional": self.functional, "regime": self.regime, "q": self.q,
                "labels": list(self.labels), "matrix": self.matrix.tolist(),
                "coefficients": self.coefficients.tolist(), "margin": self.margin,
                "min_eigenvalue": self.min_eigenvalue, "passed": self.passed}


def _worst_q(regime: str, consts: EnergyConstants) -> int:
    return {"high": consts.q0 + 1, "mid": consts.q0, "low": consts.q1}[regime]


def gram_matrix(functional: str, regime: str, consts: EnergyConstants, params: ModelParams,
                q: int | None = None) -> GramReport:
    """Worst-case Gram matrix for ``functional`` in {"Y", "Ytilde"}.

    ``q`` defaults to the band where the Bernstein factors are largest
    (``q0 + 1`` high, ``q0`` mid, ``q1`` low).
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    q = _worst_q(regime, consts) if q is None else q
    Re, We, om = params.Re, params.We, params.omega
    rw = Re * We
    M, Mp = consts.M, consts.M_prime
    big = 8.0 / 3.0 * 2.0 ** q
    b1, b2 = big / Re, big ** 2
    c1 = 2 * consts.alpha_comp * (1 - om) / Re * big
    c2 = consts.beta_comp * (1 - om) * We / (om * Re) * big
    if functional == "Y":
        if regime == "high":
            labels = ("Pperp u", "grad a", "Pperp div tau")
            W = np.array([[M, -rw, -1.0], [-rw, 2 * rw, 0.0], [-1.0, 0.0, 1.0]])
            coeffs = np.array([M - rw - 1.5, rw, 1.0 / 3.0])
        elif regime == "low":
            labels = ("a", "Pperp u", "Pperp div tau")
            W = np.array([[1.0, -b1, 0.0], [-b1, 1.0, -(1 + b2)], [0.0, -(1 + b2), Mp]])
            coeffs = np.array([0.75, 0.25, Mp - 17.0 / 4.0])
        else:
            labels = ("a", "Pperp u", "Lambda^-1 Pperp div tau")
            W = np.array([[1.0, -c1 / 2, 0.0], [-c1 / 2, 1.0, -c2 / 2],
                          [0.0, -c2 / 2, We / (2 * om * Re)]])
            coeffs = np.array([0.75, 0.5, We / (4 * om * Re)])
    elif functional == "Ytilde":
        if regime == "high":
            labels = ("P u", "P div tau")
            W = np.array([[2.0, -1.0], [-1.0, 1.0]])
        elif regime == "low":
            labels = ("P u", "P div tau")
            W = np.array([[1.0, -(1 + b2)], [-(1 + b2), Mp]])
        else:
            labels = ("P u", "Lambda^-1 P div tau")
            W = np.array([[1.0, -c2], [-c2, We / (om * Re)]])
        coeffs = np.zeros(2)
    else:
        raise ValueError(f"unknown functional {functional!r}")
    margin = float(np.linalg.eigvalsh(W - np.diag(coeffs)).min())
    if functional == "Ytilde":
        # positivity only: strictly positive smallest eigenvalue
        margin = float(np.linalg.eigvalsh(W).min())
    return GramReport(functional, regime, q, labels, W, coeffs, margin)


def gram_reports(consts: EnergyConstants, params: ModelParams) -> list[GramReport]:
    return [gram_matrix(f, r, consts, params) for f in ("Y", "Ytilde") for r in REGIMES]


# --------------------------------------------------------------------------
# functional coordinates

@dataclass(frozen=True)
class FunctionalForm:
    """Coordinate names and coefficient matrix of one functional in one regime."""

    labels: tuple[str, ...]
    coefficients: np.ndarray


def functional_form(functional: str, regime: str, consts: EnergyConstants,
                    params: ModelParams) -> FunctionalForm:
    """Coefficient matrix ``C`` with ``Y^2 = sum_ij C_ij (v_i | v_j)``.

    Coordinates are named after the fields in ``coordinate_fields``.
    """
    Re, We, om = params.Re, params.We, params.omega
    rw = Re * We
    al, be = consts.alpha_comp, consts.beta_comp
    if functional == "Y":
        if regime == "high":
            C = np.array([[consts.M, rw, -1.0], [rw, 2 * rw, 0.0], [-1.0, 0.0, 1.0]])
            return FunctionalForm(("up", "ga_high", "wp_high"), C)
        if regime == "low":
            C = np.zeros((5, 5))
            C[0, 0] = C[1, 1] = 1.0
            C[3, 3] = consts.M_prime
            C[1, 2] = C[2, 1] = 1.0 / Re
            C[1, 3] = C[3, 1] = 1.0
            C[1, 4] = C[4, 1] = 1.0
            return FunctionalForm(("a", "up", "ga", "wp_low", "lwp_low"), C)
        C = np.zeros((5, 5))
        C[0, 0] = C[1, 1] = 1.0
        C[3, 3] = We / (2 * om * Re)
        C[1, 2] = C[2, 1] = al * (1 - om) / Re
        C[1, 4] = C[4, 1] = -be * (1 - om) * We / (2 * om * Re)
        return FunctionalForm(("a", "up", "ga", "iwp", "wp"), C)
    if functional == "Ytilde":
        if regime == "high":
            return FunctionalForm(("us", "ws_high"), np.array([[2.0, -1.0], [-1.0, 1.0]]))
        if regime == "low":
            C = np.zeros((3, 3))
            C[0, 0] = 1.0
            C[1, 1] = consts.M_prime
            C[0, 1] = C[1, 0] = 1.0
            C[0, 2] = C[2, 0] = 1.0
            return FunctionalForm(("us", "ws_low", "lws_low"), C)
        C = np.zeros((3, 3))
        C[0, 0] = 1.0
        C[1, 1] = We / (om * Re)
        C[0, 2] = C[2, 0] = -be * (1 - om) * We / (om * Re)
        return FunctionalForm(("us", "iws", "ws"), C)
    raise ValueError(f"unknown functional {functional!r}")


def coordinate_fields(state: State, params: ModelParams) -> dict[str, SpectralField]:
    """All coordinate fields used by any regime, unblocked.

    ``up``/``us`` are the compressible/incompressible velocity parts, ``wp``/``ws``
    the matching parts of ``div tau``; suffixes mark the regime-specific scalings.
    """
    Re, We, om = params.Re, params.We, params.omega
    k_high = (1 - om) / Re
    k_stress = (1 - om) * We / (om * Re)
    k_low = We / Re
    a, up, wp = split_compressible(state)
    us, ws = split_incompressible(state)
    ga = grad(a)
    return {
        "a": a, "up": up, "ga": ga, "wp": wp, "us": us, "ws": ws,
        "ga_high": ga * k_high,
        "wp_high": wp * k_stress,
        "ws_high": ws * k_stress,
        "wp_low": wp * k_low,
        "ws_low": ws * k_low,
        "lwp_low": laplacian(wp) * k_low,
        "lws_low": laplacian(ws) * k_low,
        "iwp": lambda_power(wp, -1.0),
        "iws": lambda_power(ws, -1.0),
    }


# --------------------------------------------------------------------------
# term-by-term evaluation on blocked fields

def _checked_root(value: float, scale: float, what: str) -> float:
    if value < -GRAM_TOL * max(scale, np.finfo(float).tiny):
        raise GramViolationError(f"{what}: negative radicand {value:.3e} (scale {scale:.3e})")
    return math.sqrt(max(value, 0.0))


def band_energy_Y(frame: lp.DyadicFrame, state: State, q: int, consts: EnergyConstants,
                  params: ModelParams) -> float:
    """``Y_q`` with every term written out on the blocked compressible part."""
    Re, We, om = params.Re, params.We, params.omega
    rw = Re * We
    a, up, wp = (lp.block(frame, f, q) for f in split_compressible(state))
    ga = grad(a)
    regime = consts.regime(q)
    if regime == "high":
        ka = (1 - om) / Re
        kt = (1 - om) * We / (om * Re)
        terms = [consts.M * inner(up, up), 2 * rw * ka ** 2 * inner(ga, ga),
                 kt ** 2 * inner(wp, wp), 2 * rw * ka * inner(ga, up), -2 * kt * inner(up, wp)]
    elif regime == "low":
        k = We / Re
        terms = [inner(a, a), inner(up, up), consts.M_prime * k ** 2 * inner(wp, wp),
                 2.0 / Re * inner(ga, up), 2 * k * inner(up, wp),
                 2 * k * inner(up, laplacian(wp))]
    else:
        iw = lambda_power(wp, -1.0)
        terms = [inner(a, a), inner(up, up), We / (2 * om * Re) * inner(iw, iw),
                 2 * consts.alpha_comp * (1 - om) / Re * inner(ga, up),
                 -consts.beta_comp * (1 - om) * We / (om * Re) * inner(up, wp)]
    return _checked_root(sum(terms), sum(abs(t) for t in terms), f"Y_{q}")


def band_energy_Ytilde(frame: lp.DyadicFrame, state: State, q: int, consts: EnergyConstants,
                       params: ModelParams) -> float:
    """``Ytilde_q`` with every term written out on the blocked incompressible part."""
    Re, We, om = params.Re, params.We, params.omega
    us, ws = (lp.block(frame, f, q) for f in split_incompressible(state))
    regime = consts.regime(q)
    if regime == "high":
        kt = (1 - om) * We / (om * Re)
        terms = [2 * inner(us, us), kt ** 2 * inner(ws, ws), -2 * kt * inner(us, ws)]
    elif regime == "low":
        k = We / Re
        terms = [inner(us, us), consts.M_prime * k ** 2 * inner(ws, ws), 2 * k * inner(us, ws),
                 2 * k * inner(us, laplacian(ws))]
    else:
        iw = lambda_power(ws, -1.0)
        terms = [inner(us, us), We / (om * Re) * inner(iw, iw),
                 -2 * consts.beta_comp * (1 - om) * We / (om * Re) * inner(us, ws)]
    return _checked_root(sum(terms), sum(abs(t) for t in terms), f"Ytilde_{q}")


# --------------------------------------------------------------------------
# all bands at once through the coordinate Gram matrices

def _mode_density(x: SpectralField, y: SpectralField) -> np.ndarray:
    w = component_weights(x.rank, x.grid.dim)
    return np.einsum("c,c...->...", w, np.real(np.conj(x.coeffs) * y.coeffs)).ravel()


def band_inner_products(frame: lp.DyadicFrame, fields: Sequence[SpectralField]) -> np.ndarray:
    """``G[q, i, j] = (block_q v_i | block_q v_j)`` for every resolved band."""
    n = len(fields)
    vol = frame.grid.volume
    G = np.zeros((frame.nbands, n, n))
    for i in range(n):
        for j in range(i, n):
            if fields[i].rank != fields[j].rank:
                continue
            col = vol * (frame.phi_sq_flat @ _mode_density(fields[i], fields[j]))
            G[:, i, j] = G[:, j, i] = col
    return G


@dataclass(frozen=True)
class BandEnergy:
    q: int
    regime: str
    Y: float
    Y_tilde: float
    s_q: float
    s_tilde_q: float
    equiv_ratio: float | None

    @property
    def X(self) -> float:
        return self.Y + self.Y_tilde


BAND_COLUMNS = ("t", "q", "regime", "Y", "Ytilde", "X", "s_q", "stilde_q", "equiv_ratio")


class BandEvaluator:
    """Evaluates every ``X_q`` of a state through the coordinate Gram route."""

    def __init__(self, frame: lp.DyadicFrame, consts: EnergyConstants, params: ModelParams):
        self.frame = frame
        self.consts = consts
        self.params = params
        self.regimes = [consts.regime(int(q)) for q in frame.qs]
        self.forms = {(f, r): functional_form(f, r, consts, params)
                      for f in ("Y", "Ytilde") for r in REGIMES}
        self.labels = sorted({lab for form in self.forms.values() for lab in form.labels})

    def squares(self, state: State) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
        """Radicands ``Y_q^2``, ``Ytilde_q^2`` per band and the band norms used for equivalence."""
        coords = coordinate_fields(state, self.params)
        fields = [coords[lab] for lab in self.labels]
        G = band_inner_products(self.frame, fields)
        pos = {lab: i for i, lab in enumerate(self.labels)}
        out = {}
        for f in ("Y", "Ytilde"):
            vals = np.zeros(self.frame.nbands)
            for k, regime in enumerate(self.regimes):
                form = self.forms[(f, regime)]
                idx = [pos[lab] for lab in form.labels]
                sub = G[k][np.ix_(idx, idx)]
                vals[k] = float(np.sum(form.coefficients * sub))
                scales = np.sqrt(np.abs(np.diag(sub)))
                scale = float(np.sum(np.abs(form.coefficients) * np.outer(scales, scales)))
                if vals[k] < -GRAM_TOL * max(scale, np.finfo(float).tiny):
                    raise GramViolationError(
                        f"{f}_{int(self.frame.qs[k])}: negative radicand {vals[k]:.3e}")
            out[f] = np.maximum(vals, 0.0)
        norms = {
            "a": np.sqrt(G[:, pos["a"], pos["a"]]),
            "u": np.sqrt(G[:, pos["up"], pos["up"]] + G[:, pos["us"], pos["us"]]),
            "divtau": np.sqrt(G[:, pos["wp"], pos["wp"]] + G[:, pos["ws"], pos["ws"]]),
        }
        return out["Y"], out["Ytilde"], norms

    def spectrum(self, state: State) -> list[BandEnergy]:
        y2, yt2, norms = self.squares(state)
        bands = []
        for k, q in enumerate(self.frame.qs):
            q = int(q)
            Y, Yt = math.sqrt(y2[k]), math.sqrt(yt2[k])
            s, st = self.consts.s_weight(q), self.consts.s_tilde_weight(q)
            denom = s * norms["a"][k] + norms["u"][k] + norms["divtau"][k]
            ratio = (Y + Yt) / denom if denom > 0 else None
            bands.append(BandEnergy(q, self.regimes[k], Y, Yt, s, st, ratio))
        return bands

    def X_values(self, state: State) -> np.ndarray:
        y2, yt2, _ = self.squares(state)
        return np.sqrt(y2) + np.sqrt(yt2)


def band_spectrum(frame: lp.DyadicFrame, state: State, consts: EnergyConstants,
                  params: ModelParams) -> list[BandEnergy]:
    """Band energies over the resolved range, bands with ``X_q = 0`` omitted."""
    return [b for b in BandEvaluator(frame, consts, params).spectrum(state) if b.X > 0]


def equivalence_constant(bands: Iterable[BandEnergy]) -> float:
    """Smallest ``K`` with every ratio in ``[1/K, K]``."""
    ratios = [b.equiv_ratio for b in bands if b.equiv_ratio is not None]
    if not ratios:
        return 1.0
    return float(max(max(ratios), 1.0 / min(ratios)))


# --------------------------------------------------------------------------
# decay-rate fitting

def fit_decay_rate(times: np.ndarray, values: np.ndarray, floor: float = 1e-8) -> float | None:
    """Least-squares exponential rate of ``values`` where ``values >= floor * values[0]``.

    Returns ``None`` when fewer than two samples qualify.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.size == 0 or not v[0] > 0:
        return None
    keep = v >= floor * v[0]
    if keep.sum() < 2:
        return None
    slope = np.polyfit(t[keep], np.log(v[keep]), 1)[0]
    return float(-slope)


def first_increase(times: np.ndarray, values: np.ndarray, rtol: float = 1e-12) -> float | None:
    """Time of the first sample exceeding its predecessor beyond ``rtol``."""
    v = np.asarray(values, dtype=float)
    scale = max(float(np.abs(v).max()) if v.size else 0.0, np.finfo(float).tiny)
    jumps = np.nonzero(np.diff(v) > rtol * scale)[0]
    return float(times[jumps[0] + 1]) if jumps.size else None


# --------------------------------------------------------------------------
# bootstrap quantities

def data_norms(frame: lp.DyadicFrame, state: State, q0: int) -> dict[str, float]:
    """Instantaneous norms entering the bootstrap functionals."""
    d = frame.grid.dim
    s = d / 2.0
    ba = lp.band_l2_norms(frame, state.a)
    bu = lp.band_l2_norms(frame, state.u)
    bt = lp.band_l2_norms(frame, state.tau)
    q = frame.qs.astype(float)
    low = frame.qs <= q0
    grad_u = grad(state.u)
    return {
        "a_sup": float(np.sum(np.where(low, 2.0 ** ((s - 1) * q), 2.0 ** (s * q)) * ba)),
        "a_int": float(np.sum(np.where(low, 2.0 ** ((s + 1) * q), 2.0 ** (s * q)) * ba)),
        "u_sup": float(np.sum(2.0 ** ((s - 1) * q) * bu)),
        "u_int": float(np.sum(2.0 ** ((s + 1) * q) * bu)),
        "tau_sup": float(np.sum(2.0 ** (s * q) * bt)),
        "tau_int": float(np.sum(2.0 ** (s * q) * bt)),
        "grad_u_inf": linf_norm(grad_u),
    }


@dataclass
class BootstrapTrace:
    """Bootstrap functionals sampled on a uniform time grid."""

    times: np.ndarray
    X: np.ndarray
    U: np.ndarray
    V: np.ndarray
    X0: float
    C0_emp: float
    parts: dict[str, np.ndarray] = field(default_factory=dict)

    def window_increments(self, width: float = 1.0) -> list[tuple[float, float, float]]:
        """``(t_start, t_end, U(t_end) - U(t_start))`` over consecutive windows."""
        out = []
        t_end = float(self.times[-1])
        n = int(math.floor(t_end / width + 1e-9))
        for k in range(n):
            a, b = k * width, (k + 1) * width
            out.append((a, b, float(np.interp(b, self.times, self.U)
                                    - np.interp(a, self.times, self.U))))
        return out

    def rows(self) -> list[list[float]]:
        return [[float(t), float(x), float(u), float(v)]
                for t, x, u, v in zip(self.times, self.X, self.U, self.V)]


class BootstrapRecorder:
    """Accumulates instantaneous norms; ``finish`` integrates them in time."""

    def __init__(self, frame: lp.DyadicFrame, consts: EnergyConstants):
        self.frame = frame
        self.q0 = consts.q0
        self.times: list[float] = []
        self.samples: list[dict[str, float]] = []

    def record(self, t: float, state: State) -> None:
        self.times.append(float(t))
        self.samples.append(data_norms(self.frame, state, self.q0))

    def finish(self) -> BootstrapTrace:
        return bootstrap_from_samples(np.array(self.times), self.samples)


def bootstrap_from_samples(times: np.ndarray, samples: Sequence[dict[str, float]]
                           ) -> BootstrapTrace:
    n = len(samples)
    if n == 0:
        raise TraceError("empty trace")
    times = np.asarray(times, dtype=float)
    if n > 1:
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise TraceError("bootstrap quantities need uniformly spaced samples")
    cols = {k: np.array([s[k] for s in samples]) for k in samples[0]}

    def running_sup(x):
        return np.maximum.accumulate(x)

    def running_int(x):
        if n == 1:
            return np.zeros(1)
        return cumulative_trapezoid(x, times, initial=0.0)

    U = running_int(cols["a_int"]) + running_int(cols["u_int"]) + running_int(cols["tau_int"])
    X = (running_sup(cols["a_sup"]) + running_sup(cols["u_sup"]) + running_sup(cols["tau_sup"])
         + U)
    V = running_int(cols["grad_u_inf"])
    X0 = float(cols["a_sup"][0] + cols["u_sup"][0] + cols["tau_sup"][0])
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(cols["u_int"] > 0, cols["grad_u_inf"] / cols["u_int"], 0.0)
    return BootstrapTrace(times, X, U, V, X0, float(ratio.max()), cols)


def bootstrap_quantities(frame: lp.DyadicFrame, states: Sequence[State], times: Sequence[float],
                         consts: EnergyConstants) -> BootstrapTrace:
    rec = BootstrapRecorder(frame, consts)
    for t, s in zip(times, states):
        rec.record(t, s)
    return rec.finish()


def initial_norm(frame: lp.DyadicFrame, state: State, q0: int) -> float:
    """``X_0``: the sum of the three data norms."""
    n = data_norms(frame, state, q0)
    return n["a_sup"] + n["u_sup"] + n["tau_sup"]
