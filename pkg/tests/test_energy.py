import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oldroyd_besov import energy
from oldroyd_besov import littlewood_paley as lp
from oldroyd_besov.energy import (
    BandEvaluator,
    BootstrapRecorder,
    EnergyConstants,
    band_energy_Y,
    band_energy_Ytilde,
    band_spectrum,
    bootstrap_from_samples,
    coefficient_inequalities,
    derive_constants,
    equivalence_constant,
    first_increase,
    fit_decay_rate,
    gram_matrix,
    gram_reports,
    initial_norm,
    verify_coefficient_inequalities,
)
from oldroyd_besov.errors import (
    ConstantsInconsistencyError,
    InfeasibleThresholdError,
    TraceError,
)
from oldroyd_besov.model import ModelParams, State
from oldroyd_besov.spectral import (
    Grid,
    SpectralField,
    grad,
    l2_norm,
    leray_P,
    random_field,
    single_mode,
)

PARAMS = ModelParams()
CONSTS = derive_constants(PARAMS)
MATRIX = list(itertools.product((0.5, 1.0, 2.0), (0.5, 1.0, 2.0), (0.1, 0.5, 0.9)))
# boxes at N = 64 whose resolved ranges cover low+mid and mid+high bands
LOW_GRID = Grid(2, 64, 64.0)
HIGH_GRID = Grid(2, 64, 0.5)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_state(grid: Grid, seed: int) -> State:
    rng = np.random.default_rng(seed)
    return State(*(random_field(grid, r, rng) for r in ("scalar", "vector", "sym")))


def per_mode_oracle(frame: lp.DyadicFrame, state: State, q: int, consts: EnergyConstants,
                    params: ModelParams) -> tuple[float, float]:
    """``(Y_q^2, Ytilde_q^2)`` from explicit 2x2 matrix algebra on each Fourier mode.

    Uses neither the field operators nor the coefficient matrices of the package.
    """
    grid = frame.grid
    Re, We, om = params.Re, params.We, params.omega
    rw = Re * We
    weight = frame.phi_table(q) ** 2
    y2 = yt2 = 0.0
    a_c = state.a.coeffs[0]
    u_c = state.u.coeffs
    t_c = state.tau.coeffs
    regime = consts.regime(q)
    for idx in zip(*np.nonzero(weight)):
        xi = grid.xi[(slice(None),) + idx]
        r2 = float(xi @ xi)
        pperp = np.outer(xi, xi) / r2
        proj = np.eye(2) - pperp
        a = a_c[idx]
        u = u_c[(slice(None),) + idx]
        T = np.array([[t_c[0][idx], t_c[1][idx]], [t_c[1][idx], t_c[2][idx]]])
        w = 1j * xi @ T
        up, us = pperp @ u, proj @ u
        wp, ws = pperp @ w, proj @ w
        ga = 1j * xi * a

        def ip(x, y):
            return float(np.real(np.vdot(x, y)))

        if regime == "high":
            ka, kt = (1 - om) / Re, (1 - om) * We / (om * Re)
            y = (consts.M * ip(up, up) + 2 * rw * ka ** 2 * ip(ga, ga) + kt ** 2 * ip(wp, wp)
                 + 2 * rw * ka * ip(ga, up) - 2 * kt * ip(up, wp))
            yt = 2 * ip(us, us) + kt ** 2 * ip(ws, ws) - 2 * kt * ip(us, ws)
        elif regime == "low":
            k = We / Re
            y = (abs(a) ** 2 + ip(up, up) + consts.M_prime * k ** 2 * ip(wp, wp)
                 + 2 / Re * ip(ga, up) + 2 * k * ip(up, wp) - 2 * k * r2 * ip(up, wp))
            yt = (ip(us, us) + consts.M_prime * k ** 2 * ip(ws, ws) + 2 * k * ip(us, ws)
                  - 2 * k * r2 * ip(us, ws))
        else:
            y = (abs(a) ** 2 + ip(up, up) + We / (2 * om * Re) * ip(wp, wp) / r2
                 + 2 * consts.alpha_comp * (1 - om) / Re * ip(ga, up)
                 - consts.beta_comp * (1 - om) * We / (om * Re) * ip(up, wp))
            yt = (ip(us, us) + We / (om * Re) * ip(ws, ws) / r2
                  - 2 * consts.beta_comp * (1 - om) * We / (om * Re) * ip(us, ws))
        y2 += weight[idx] * y
        yt2 += weight[idx] * yt
    return grid.volume * y2, grid.volume * yt2


class TestDerivedConstants:
    def test_base_parameters(self):
        assert (CONSTS.q0, CONSTS.q1) == (4, -6)
        assert CONSTS.M == 3.0
        assert CONSTS.M_prime == pytest.approx(14 / 3, rel=1e-15)

    def test_threshold_formulas(self):
        assert energy.q0_bound(PARAMS) == pytest.approx((4 / 3) ** 1.5 * math.sqrt(48), rel=1e-15)
        assert energy.q0_bound(PARAMS) == pytest.approx(10.6667, rel=1e-4)
        candidate = math.sqrt(11 / 3) / (28 / 3)
        assert candidate == pytest.approx(0.2052, abs=1e-4)
        assert energy.q1_bound(PARAMS) == pytest.approx(3 / 32 * candidate, rel=1e-15)

    def test_M_formula(self):
        assert derive_constants(ModelParams(Re=2.0, We=3.0)).M == 8.0

    def test_mid_couplings_at_their_maxima(self):
        # alpha = (2^-4 * 3/32)^2 and beta = omega * alpha / (2 Re We) for the base set
        assert CONSTS.alpha_comp == (3 / 512) ** 2 == 3.4332275390625e-05
        assert CONSTS.beta_comp == CONSTS.alpha_comp / 4 == 8.58306884765625e-06

    def test_thresholds_extremal(self):
        for Re, We, om in MATRIX:
            p = ModelParams(Re=Re, We=We, omega=om)
            c = derive_constants(p)
            assert 2.0 ** c.q0 >= energy.q0_bound(p) > 2.0 ** (c.q0 - 1)
            assert 2.0 ** c.q1 <= energy.q1_bound(p) < 2.0 ** (c.q1 + 1)
            assert c.q1 < c.q0

    def test_q0_grows_as_omega_approaches_one(self):
        q0s = [derive_constants(ModelParams(omega=om)).q0 for om in (0.5, 0.9, 0.99, 0.999)]
        assert q0s == sorted(q0s) and q0s[-1] > q0s[0]
        ratio = energy.q0_bound(ModelParams(omega=0.999)) / energy.q0_bound(ModelParams(omega=0.99))
        assert ratio == pytest.approx(10 ** 1.5, rel=1e-12)

    def test_infeasible_thresholds(self, monkeypatch):
        monkeypatch.setattr(energy, "q1_bound", lambda p: 1e6)
        with pytest.raises(InfeasibleThresholdError):
            derive_constants(PARAMS)

    def test_regimes(self):
        assert [CONSTS.regime(q) for q in (-7, -6, -5, 4, 5)] == ["low", "low", "mid", "mid",
                                                                   "high"]


class TestInequalities:
    def test_tight_cases_at_base_parameters(self):
        checks = {c.name: c for c in coefficient_inequalities(CONSTS, PARAMS)}
        assert checks["high:M"].margin == 0.0 and checks["high:M"].passed
        assert abs(checks["low:M_prime"].margin) <= 1e-15 and checks["low:M_prime"].passed
        assert checks["low:M_prime"].bound == 5 / 12

    @pytest.mark.parametrize("Re,We,omega", MATRIX)
    def test_every_parameter_set_passes(self, Re, We, omega):
        p = ModelParams(Re=Re, We=We, omega=omega)
        c = derive_constants(p, verify=False)
        assert all(chk.passed for chk in verify_coefficient_inequalities(c, p))
        for rep in gram_reports(c, p):
            assert rep.passed, (rep.functional, rep.regime, rep.margin)

    def test_tampered_constants_rejected(self):
        bad = EnergyConstants(4, -6, 2.0, 14 / 3, CONSTS.alpha_comp, CONSTS.beta_comp)
        with pytest.raises(ConstantsInconsistencyError) as info:
            verify_coefficient_inequalities(bad, PARAMS)
        assert "high:M" in info.value.failures


class TestGramMatrices:
    def test_margin_is_smallest_eigenvalue_of_excess(self):
        rep = gram_matrix("Y", "high", CONSTS, PARAMS)
        excess = rep.matrix - np.diag(rep.coefficients)
        assert rep.margin == pytest.approx(np.linalg.eigvalsh(excess).min(), abs=1e-15)
        assert rep.q == CONSTS.q0 + 1

    def test_incompressible_forms_positive(self):
        for regime in energy.REGIMES:
            rep = gram_matrix("Ytilde", regime, CONSTS, PARAMS)
            assert rep.margin > 0

    @given(st.floats(0.01, 10.0), st.integers(0, 2))
    @settings(max_examples=30, deadline=None)
    def test_low_form_dominates_diagonal_at_every_coordinate_scale(self, scale, which):
        # the Gram bound must hold for every vector of coordinate norms
        rep = gram_matrix("Y", "low", CONSTS, PARAMS)
        x = np.ones(3)
        x[which] = scale
        excess = rep.matrix - np.diag(rep.coefficients)
        assert x @ excess @ x >= -1e-12 * (x @ x)


class TestBandEnergies:
    def test_zero_state(self):
        frame = lp.build_frame(LOW_GRID)
        z = State.zeros(LOW_GRID)
        assert band_energy_Y(frame, z, -6, CONSTS, PARAMS) == 0.0
        assert band_energy_Ytilde(frame, z, -6, CONSTS, PARAMS) == 0.0
        assert band_spectrum(frame, z, CONSTS, PARAMS) == []

    def test_density_only_in_mid_regime(self):
        grid = Grid(2, 32, 1.0)
        frame = lp.build_frame(grid)
        a = random_field(grid, "scalar", np.random.default_rng(0))
        s = State(a, SpectralField.zeros(grid, "vector"), SpectralField.zeros(grid, "sym"))
        for q in (1, 2):
            assert band_energy_Y(frame, s, q, CONSTS, PARAMS) == pytest.approx(
                l2_norm(lp.block(frame, a, q)), rel=1e-14)

    def test_high_regime_shear_velocity(self):
        frame = lp.build_frame(HIGH_GRID)
        u = leray_P(random_field(HIGH_GRID, "vector", np.random.default_rng(1)))
        s = State(SpectralField.zeros(HIGH_GRID), u, SpectralField.zeros(HIGH_GRID, "sym"))
        q = CONSTS.q0 + 1
        assert band_energy_Ytilde(frame, s, q, CONSTS, PARAMS) == pytest.approx(
            math.sqrt(2) * l2_norm(lp.block(frame, u, q)), rel=1e-13)

    @pytest.mark.parametrize("grid", [LOW_GRID, HIGH_GRID], ids=["low-mid", "mid-high"])
    def test_three_routes_agree(self, grid):
        frame = lp.build_frame(grid)
        s = random_state(grid, 11)
        evaluator = BandEvaluator(frame, CONSTS, PARAMS)
        y2, yt2, _ = evaluator.squares(s)
        covered = set()
        for k, q in enumerate(frame.qs):
            q = int(q)
            covered.add(CONSTS.regime(q))
            oy2, oyt2 = per_mode_oracle(frame, s, q, CONSTS, PARAMS)
            assert y2[k] == pytest.approx(oy2, rel=1e-11)
            assert yt2[k] == pytest.approx(oyt2, rel=1e-11)
            assert band_energy_Y(frame, s, q, CONSTS, PARAMS) == pytest.approx(
                math.sqrt(oy2), rel=1e-11)
            assert band_energy_Ytilde(frame, s, q, CONSTS, PARAMS) == pytest.approx(
                math.sqrt(oyt2), rel=1e-11)
        assert len(covered) == 2

    @given(seeds, st.floats(0.01, 100.0))
    @settings(max_examples=10, deadline=None)
    def test_homogeneity(self, seed, c):
        frame = lp.build_frame(HIGH_GRID)
        s = random_state(HIGH_GRID, seed)
        ev = BandEvaluator(frame, CONSTS, PARAMS)
        np.testing.assert_allclose(ev.X_values(s.scaled(c)), c * ev.X_values(s), rtol=1e-12)

    def test_single_band_state(self):
        # |xi| = 3 = 1.5 * 2^1 lies where only the q = 1 annulus function is nonzero
        grid = Grid(2, 32, 1.0)
        frame = lp.build_frame(grid)
        c = np.zeros((2,) + grid.shape, dtype=complex)
        c[0, 0, 3], c[0, 0, -3] = -0.5j, 0.5j
        u = SpectralField(grid, "vector", c)
        s = State(SpectralField.zeros(grid), u, SpectralField.zeros(grid, "sym"))
        bands = band_spectrum(frame, s, CONSTS, PARAMS)
        assert [b.q for b in bands] == [1]

    def test_equivalence_ratio_reported(self):
        frame = lp.build_frame(HIGH_GRID)
        bands = band_spectrum(frame, random_state(HIGH_GRID, 2), CONSTS, PARAMS)
        K = equivalence_constant(bands)
        assert 1.0 <= K < 100.0
        assert all(b.X == b.Y + b.Y_tilde for b in bands)


class TestDecayFitting:
    def test_exact_exponential(self):
        t = np.linspace(0, 5, 51)
        assert fit_decay_rate(t, 3 * np.exp(-0.7 * t)) == pytest.approx(0.7, rel=1e-12)

    def test_floor_excludes_roundoff_tail(self):
        t = np.linspace(0, 10, 101)
        v = np.maximum(np.exp(-5 * t), 1e-16)
        assert fit_decay_rate(t, v) == pytest.approx(5.0, rel=1e-9)

    def test_zero_trace_has_no_rate(self):
        assert fit_decay_rate(np.arange(3.0), np.zeros(3)) is None

    def test_first_increase(self):
        t = np.arange(5.0)
        assert first_increase(t, np.array([4, 3, 3, 3.5, 1])) == 3.0
        assert first_increase(t, np.array([4, 3, 2, 1, 0.0])) is None


class TestBootstrap:
    def test_zero_trajectory(self):
        frame = lp.build_frame(Grid(2, 32, 1.0))
        rec = BootstrapRecorder(frame, CONSTS)
        for t in (0.0, 0.5, 1.0):
            rec.record(t, State.zeros(frame.grid))
        trace = rec.finish()
        assert not trace.X.any() and not trace.U.any() and not trace.V.any()
        assert trace.X0 == 0.0

    def test_synthetic_samples(self):
        times = np.linspace(0, 2, 5)
        keys = ("a_sup", "a_int", "u_sup", "u_int", "tau_sup", "tau_int", "grad_u_inf")
        samples = [{k: 1.0 for k in keys} | {"u_sup": 2.0 - t / 2, "grad_u_inf": 0.5}
                   for t in times]
        tr = bootstrap_from_samples(times, samples)
        np.testing.assert_allclose(tr.U, 3 * times)
        np.testing.assert_allclose(tr.X, 4.0 + 3 * times)
        np.testing.assert_allclose(tr.V, 0.5 * times)
        assert tr.X0 == 4.0 and tr.C0_emp == 0.5
        incs = tr.window_increments(1.0)
        assert [w[2] for w in incs] == pytest.approx([3.0, 3.0])

    def test_nonuniform_samples_rejected(self):
        s = {"a_sup": 0, "a_int": 0, "u_sup": 0, "u_int": 0, "tau_sup": 0, "tau_int": 0,
             "grad_u_inf": 0}
        with pytest.raises(TraceError):
            bootstrap_from_samples(np.array([0.0, 1.0, 3.0]), [s, s, s])

    def test_gradient_bound_constant(self):
        grid = Grid(2, 32, 1.0)
        frame = lp.build_frame(grid)
        rng = np.random.default_rng(4)
        states = [random_state(grid, int(k)).scaled(float(rng.uniform(0.1, 1))) for k in range(4)]
        tr = energy.bootstrap_quantities(frame, states, [0.0, 0.1, 0.2, 0.3], CONSTS)
        assert np.all(tr.V <= tr.C0_emp * tr.U * (1 + 1e-12))
        assert tr.X0 == pytest.approx(initial_norm(frame, states[0], CONSTS.q0), rel=1e-15)

    def test_data_norm_exponents(self):
        grid = Grid(2, 32, 1.0)
        frame = lp.build_frame(grid)
        u = grad(single_mode(grid, [3, 0]))
        s = State(SpectralField.zeros(grid), u, SpectralField.zeros(grid, "sym"))
        n = energy.data_norms(frame, s, CONSTS.q0)
        # single band q = 1 in d = 2: weights 2^0 and 2^2
        assert n["u_sup"] == pytest.approx(l2_norm(u), rel=1e-12)
        assert n["u_int"] == pytest.approx(4 * l2_norm(u), rel=1e-12)
