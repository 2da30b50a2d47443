import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fcpdc import (FC_PRESET, PDC_PRESET, FrequencyGrid, Kernel, ProcessKind,
                   ProcessSpec, analytic_solve, build_jsa, default_grid,
                   derived_metrics, schmidt_decompose)
from fcpdc.analytic import DB_PER_R


def test_separable_kernel_is_rank_one():
    grid = FrequencyGrid(32, -3.0, 3.0)
    g = np.exp(-grid.points ** 2)
    h = np.exp(-((grid.points - 0.3) ** 2) / 2)
    modes = schmidt_decompose(Kernel((np.outer(g, h)).astype(complex), grid))
    assert modes.r[0] > 0
    assert np.all(modes.r[1:] < 1e-12 * modes.r[0])


def test_two_by_two_diagonal_kernel():
    grid = FrequencyGrid(2, -1.0, 1.0)
    modes = schmidt_decompose(Kernel(-1j * np.diag([1.0, 0.5]), grid))
    np.testing.assert_allclose(modes.r, [1.0, 0.5], rtol=1e-14)
    # phase convention: largest component of each input mode real positive
    piv = modes.in_modes_a[np.argmax(np.abs(modes.in_modes_a), axis=0),
                           np.arange(2)]
    assert np.all(piv.real > 0)
    assert np.all(np.abs(piv.imag) < 1e-14)


def test_rejects_z_resolved_kernel(small_grid):
    from fcpdc import ZGrid, build_z_kernel
    zk = build_z_kernel(FC_PRESET, small_grid, ZGrid(9, FC_PRESET.length))
    with pytest.raises(ValueError):
        schmidt_decompose(zk)


def test_rejects_nonfinite_kernel(small_grid):
    vals = np.zeros((small_grid.n, small_grid.n), dtype=complex)
    vals[0, 0] = np.nan
    with pytest.raises(ValueError):
        schmidt_decompose(Kernel(vals, small_grid))


def test_reconstruction_matches_minus_i_kernel(small_grid):
    kern = build_jsa(FC_PRESET.with_coupling(0.8), small_grid)
    modes = schmidt_decompose(kern)
    dnu = small_grid.weight
    rebuilt = (modes.in_modes_a * modes.r[None, :]) @ modes.in_modes_b.conj().T * dnu
    np.testing.assert_allclose(rebuilt, -1j * kern.values, atol=1e-8 * modes.r[0])


@given(coupling=st.floats(0.05, 3.0), sigma=st.floats(0.5, 2.0))
@settings(max_examples=15)
def test_mode_families_orthonormal(coupling, sigma):
    spec = ProcessSpec(ProcessKind.PDC, sigma, coupling, 3.0, 4.5, 1.5, 2.0)
    grid = default_grid(spec, 40)
    modes = analytic_solve(spec, grid)
    eye = np.eye(modes.n_modes)
    for fam in (modes.in_modes_a, modes.in_modes_b):
        gram = fam.conj().T @ fam * grid.weight
        assert np.abs(gram - eye).max() < 1e-8


def test_zero_coupling_all_modes_zero(small_grid):
    modes = analytic_solve(FC_PRESET.with_coupling(0.0), small_grid)
    assert np.all(modes.r == 0)
    rep = derived_metrics(modes)
    assert np.all(rep.efficiency == 0)


def test_linearity_in_coupling(small_grid):
    base = analytic_solve(FC_PRESET.with_coupling(0.31), small_grid)
    doubled = analytic_solve(FC_PRESET.with_coupling(0.62), small_grid)
    keep = base.r > 1e-12 * base.r[0]
    np.testing.assert_allclose(doubled.r[keep], 2 * base.r[keep], rtol=1e-10)


def test_input_equals_output_modes(small_grid):
    modes = analytic_solve(FC_PRESET.with_coupling(0.4), small_grid)
    np.testing.assert_array_equal(modes.in_modes_a, modes.out_modes_a)
    np.testing.assert_array_equal(modes.in_modes_b, modes.out_modes_b)


def test_fc_preset_nearly_single_mode():
    # independent oracle: raw numpy SVD of the constructed kernel
    grid = default_grid(FC_PRESET, 300)
    s = np.linalg.svd(build_jsa(FC_PRESET, grid).values, compute_uv=False)
    schmidt = (s ** 2).sum() ** 2 / (s ** 4).sum()
    assert schmidt < 1.3
    assert s[1] / s[0] < 0.2


def test_first_mode_efficiency_anchor():
    grid = default_grid(FC_PRESET, 200)
    s1 = np.linalg.svd(build_jsa(FC_PRESET, grid).values, compute_uv=False)[0]
    gamma = np.arcsin(np.sqrt(0.064)) / s1
    modes = analytic_solve(FC_PRESET.with_coupling(gamma), grid)
    assert np.sin(modes.r[0]) ** 2 == pytest.approx(0.064, rel=1e-10)


class TestDerivedMetrics:
    def test_zero_modes(self, small_grid):
        rep = derived_metrics(analytic_solve(PDC_PRESET.with_coupling(0.0), small_grid))
        assert rep.mean_photons == 0
        assert np.all(rep.squeezing_db == 0)

    def test_twelve_db_point(self, small_grid):
        modes = analytic_solve(PDC_PRESET.with_coupling(1e-3), small_grid)
        modes.r = np.array([0.6 * np.log(10.0)])
        rep = derived_metrics(modes)
        assert rep.squeezing_db[0] == pytest.approx(12.0, rel=1e-12)

    def test_unit_mean_photon_point(self, small_grid):
        modes = analytic_solve(PDC_PRESET.with_coupling(1e-3), small_grid)
        modes.r = np.array([np.arcsinh(1.0)])
        rep = derived_metrics(modes)
        assert rep.mean_photons == pytest.approx(1.0, rel=1e-12)

    def test_truncation_drops_noise_modes(self, small_grid):
        modes = analytic_solve(FC_PRESET.with_coupling(0.2), small_grid)
        rep = derived_metrics(modes)
        assert len(rep.r) < len(modes.r)
        assert rep.r.min() >= 1e-12 * rep.r[0]

    def test_db_per_r_constant(self):
        # -10 log10(e^{-2r}) = (20 / ln 10) r
        r = 0.37
        assert -10 * np.log10(np.exp(-2 * r)) == pytest.approx(DB_PER_R * r)


def test_pdc_mean_photons_increasing(small_grid):
    values = [derived_metrics(analytic_solve(PDC_PRESET.with_coupling(g), small_grid)).mean_photons
              for g in (0.2, 0.5, 0.9, 1.4)]
    assert np.all(np.diff(values) > 0)
