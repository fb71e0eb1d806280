import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oldroyd_besov.errors import (
    ConfigurationError,
    FieldFormatError,
    MeanNonzeroError,
    RankError,
)
from oldroyd_besov.spectral import (
    Grid,
    SpectralField,
    dealiased_product,
    deformation,
    div,
    div_tensor,
    grad,
    inner,
    l2_norm,
    lambda_power,
    lame_operator,
    laplacian,
    leray_P,
    leray_Pperp,
    linf_norm,
    load_field,
    random_field,
    resample,
    save_field,
    single_mode,
    stack,
    sym_pairs,
    transform_forward,
    truncate,
    vorticity,
)

GRID = Grid(2, 32, 1.0)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def real_quadrature_norm(f: SpectralField) -> float:
    """L2 norm by the rectangle rule in physical space (an independent route)."""
    vals = f.real()
    w = np.ones(vals.shape[0])
    if f.rank == "sym":
        w = np.array([1.0 if i == j else 2.0 for i, j in sym_pairs(f.grid.dim)])
    cell = f.grid.volume / f.grid.n ** f.grid.dim
    return float(np.sqrt(cell * np.dot(w, (vals ** 2).reshape(len(w), -1).sum(axis=1))))


class TestGrid:
    def test_accepts_powers_of_two_and_three_times(self):
        assert Grid(2, 16).n == 16
        assert Grid(2, 192).n == 192
        assert Grid(3, 24, 0.5).scale == 0.5

    @pytest.mark.parametrize("n", [15, 8, 20, 100])
    def test_rejects_bad_point_counts(self, n):
        with pytest.raises(ConfigurationError):
            Grid(2, n)

    @pytest.mark.parametrize("scale", [0.0, -1.0, np.inf])
    def test_rejects_bad_scale(self, scale):
        with pytest.raises(ConfigurationError):
            Grid(2, 32, scale)

    def test_rejects_dimension_one(self):
        with pytest.raises(ConfigurationError):
            Grid(1, 32)

    def test_dealias_mask_cutoff_at_128(self):
        g = Grid(2, 128, 1.0)
        kept = np.unique(np.abs(g.k[0][g.dealias_mask]))
        assert kept.max() == 42

    def test_wavevectors_scale_with_box(self):
        g = Grid(2, 16, 4.0)
        assert g.xi[0][1, 0] == pytest.approx(0.25)

    def test_odd_wavevectors_drop_nyquist(self):
        g = Grid(2, 16, 1.0)
        assert np.all(g.xi_odd[0][8, :] == 0.0)
        assert np.all(g.xi[0][8, :] == -8.0)


class TestTransforms:
    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_roundtrip_is_identity(self, seed):
        rng = np.random.default_rng(seed)
        vals = rng.standard_normal((3,) + GRID.shape)
        f = transform_forward(vals, GRID, "sym")
        np.testing.assert_allclose(f.real(), vals, atol=1e-13)

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_parseval_against_quadrature(self, seed):
        f = random_field(GRID, "sym", np.random.default_rng(seed), dealias=False)
        assert l2_norm(f) == pytest.approx(real_quadrature_norm(f), rel=1e-12)

    def test_random_fields_are_hermitian(self):
        f = random_field(GRID, "vector", np.random.default_rng(1))
        assert f.hermitian_defect() < 1e-15

    def test_shape_mismatch_raises(self):
        with pytest.raises(ConfigurationError):
            transform_forward(np.zeros((2, 16, 16)), GRID, "vector")

    def test_unknown_rank(self):
        with pytest.raises(RankError):
            SpectralField(GRID, "spinor", np.zeros((1,) + GRID.shape))

    def test_fields_are_immutable(self):
        f = SpectralField.zeros(GRID)
        with pytest.raises(AttributeError):
            f.rank = "vector"
        with pytest.raises(ValueError):
            f.coeffs[0, 0, 0] = 1.0

    def test_linf_norm_of_unit_sine(self):
        f = single_mode(GRID, [3, 0])
        assert linf_norm(f) == pytest.approx(1.0, abs=1e-12)

    def test_l2_norm_of_unit_sine(self):
        # |sin|^2 averages to 1/2 over the box of area (2 pi)^2
        assert l2_norm(single_mode(GRID, [4, 0])) == pytest.approx(np.sqrt(2.0) * np.pi, rel=1e-14)


class TestDifferentialOperators:
    def setup_method(self):
        self.x = GRID.points()

    def scalar(self, vals):
        return transform_forward(vals, GRID)

    def test_gradient_of_product_of_sines(self):
        x, y = self.x
        f = self.scalar(np.sin(2 * x) * np.cos(3 * y))
        g = grad(f).real()
        np.testing.assert_allclose(g[0], 2 * np.cos(2 * x) * np.cos(3 * y), atol=1e-12)
        np.testing.assert_allclose(g[1], -3 * np.sin(2 * x) * np.sin(3 * y), atol=1e-12)

    def test_divergence_of_identity_times_sine(self):
        x = self.x[0]
        s = np.sin(x)
        tau = transform_forward(np.stack([s, 0 * s, s]), GRID, "sym")
        out = div_tensor(tau).real()
        np.testing.assert_allclose(out[0], np.cos(x), atol=1e-13)
        np.testing.assert_allclose(out[1], 0.0, atol=1e-13)

    def test_laplacian_eigenvalue(self):
        f = single_mode(GRID, [2, 1])
        np.testing.assert_allclose(laplacian(f).coeffs, -5.0 * f.coeffs, atol=1e-13)

    def test_lame_on_gradient_field(self):
        # u = grad phi  gives  A u = 2 (1 - omega) grad Laplacian(phi)
        phi = single_mode(GRID, [1, 2])
        u = grad(phi)
        expected = grad(laplacian(phi)) * (2 * (1 - 0.3))
        np.testing.assert_allclose(lame_operator(u, 0.3).coeffs, expected.coeffs, atol=1e-13)

    def test_deformation_and_vorticity_split_gradient(self):
        u = random_field(GRID, "vector", np.random.default_rng(0))
        full = grad(u).real().reshape(2, 2, *GRID.shape)
        d = deformation(u).real()
        w = vorticity(u).real().reshape(2, 2, *GRID.shape)
        np.testing.assert_allclose(d[1], 0.5 * (full[0, 1] + full[1, 0]), atol=1e-12)
        np.testing.assert_allclose(w[0, 1], 0.5 * (full[0, 1] - full[1, 0]), atol=1e-12)

    def test_gradient_rejects_tensor(self):
        with pytest.raises(RankError):
            grad(SpectralField.zeros(GRID, "sym"))


class TestLerayProjection:
    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_parts_sum_and_are_orthogonal(self, seed):
        v = random_field(GRID, "vector", np.random.default_rng(seed))
        p, q = leray_P(v), leray_Pperp(v)
        np.testing.assert_allclose((p + q).coeffs, v.coeffs, atol=1e-14)
        assert abs(inner(p, q)) <= 1e-12 * l2_norm(v) ** 2

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_projection_is_divergence_free_and_idempotent(self, seed):
        v = random_field(GRID, "vector", np.random.default_rng(seed))
        p = leray_P(v)
        assert l2_norm(div(p)) <= 1e-12 * l2_norm(v)
        np.testing.assert_allclose(leray_P(p).coeffs, p.coeffs, atol=1e-14)

    def test_constant_mode_stays_in_divergence_free_part(self):
        vals = np.ones((2,) + GRID.shape)
        v = transform_forward(vals, GRID, "vector")
        assert l2_norm(leray_Pperp(v)) == 0.0


class TestFractionalPowers:
    def test_power_of_single_mode(self):
        f = single_mode(GRID, [3, 4])
        np.testing.assert_allclose(lambda_power(f, 0.5).coeffs, np.sqrt(5.0) * f.coeffs,
                                   atol=1e-13)

    def test_negative_power_needs_mean_free(self):
        f = transform_forward(np.ones(GRID.shape), GRID)
        with pytest.raises(MeanNonzeroError):
            lambda_power(f, -1.0)

    @given(seeds, st.floats(-2, 2))
    @settings(max_examples=20, deadline=None)
    def test_powers_compose(self, seed, sigma):
        f = random_field(GRID, "scalar", np.random.default_rng(seed))
        f = SpectralField(GRID, "scalar", f.coeffs * (GRID.xi_norm > 0))
        back = lambda_power(lambda_power(f, sigma), -sigma)
        np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-12 * f.max_abs_coeff())


class TestProducts:
    def test_dealiased_product_is_exact_on_truncated_inputs(self):
        rng = np.random.default_rng(5)
        f, g = (random_field(GRID, "scalar", rng) for _ in range(2))
        direct = truncate(transform_forward(f.real()[0] * g.real()[0], GRID))
        fine = Grid(2, 64, 1.0)
        fine_prod = transform_forward(resample(f, fine).real()[0] * resample(g, fine).real()[0],
                                      fine)
        np.testing.assert_allclose(dealiased_product(f, g).coeffs, direct.coeffs, atol=1e-15)
        back = resample(truncate(resample(fine_prod, GRID, strict=False)), fine)
        reference = resample(dealiased_product(f, g), fine)
        np.testing.assert_allclose(back.coeffs, reference.coeffs, atol=1e-14)


class TestResample:
    def test_padding_roundtrip(self):
        f = random_field(GRID, "sym", np.random.default_rng(2))
        fine = Grid(2, 96, 1.0)
        up = resample(f, fine)
        np.testing.assert_allclose(resample(up, GRID).coeffs, f.coeffs, atol=1e-16)
        assert l2_norm(up) == pytest.approx(l2_norm(f), rel=1e-14)

    def test_strict_truncation_refuses_to_lose_energy(self):
        f = random_field(GRID, "scalar", np.random.default_rng(2), dealias=False)
        with pytest.raises(ConfigurationError):
            resample(f, Grid(2, 16, 1.0))

    def test_base_n_gives_same_physical_field(self):
        a = random_field(Grid(2, 32, 1.0), "scalar", np.random.default_rng(9), base_n=16)
        b = random_field(Grid(2, 64, 1.0), "scalar", np.random.default_rng(9), base_n=16)
        assert l2_norm(a) == pytest.approx(l2_norm(b), rel=1e-14)

    def test_box_mismatch(self):
        with pytest.raises(ConfigurationError):
            resample(SpectralField.zeros(GRID), Grid(2, 32, 2.0))


class TestStack:
    def test_stack_scalars_into_vector(self):
        a, b = single_mode(GRID, [1, 0]), single_mode(GRID, [0, 1])
        v = stack([a, b], "vector")
        np.testing.assert_array_equal(v.component(1).coeffs, b.coeffs)


class TestSnapshotFiles:
    def test_roundtrip(self, tmp_path):
        f = random_field(GRID, "sym", np.random.default_rng(4))
        save_field(tmp_path / "f.obsf", f, field_id="tau")
        g, header = load_field(tmp_path / "f.obsf")
        np.testing.assert_array_equal(g.coeffs, f.coeffs)
        assert header["id"] == "tau" and g.rank == "sym"

    def test_bad_magic_reports_offset_zero(self, tmp_path):
        (tmp_path / "x.obsf").write_bytes(b"NOPE")
        with pytest.raises(FieldFormatError) as info:
            load_field(tmp_path / "x.obsf")
        assert info.value.offset == 0

    def test_truncated_payload_reports_offset(self, tmp_path):
        save_field(tmp_path / "f.obsf", single_mode(GRID, [1, 0]))
        data = (tmp_path / "f.obsf").read_bytes()
        (tmp_path / "t.obsf").write_bytes(data[:-100])
        with pytest.raises(FieldFormatError) as info:
            load_field(tmp_path / "t.obsf")
        assert info.value.offset == len(data) - 100
        assert "offset" in str(info.value)

    def test_bad_header_json(self, tmp_path):
        (tmp_path / "h.obsf").write_bytes(b"OBSF1\n{not json\n")
        with pytest.raises(FieldFormatError) as info:
            load_field(tmp_path / "h.obsf")
        assert info.value.offset == 6
