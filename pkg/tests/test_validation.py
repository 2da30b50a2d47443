import numpy as np
import pytest

from fcpdc import (FC_PRESET, PDC_PRESET, TargetUnreachableError, ZGrid,
                   analytic_solve, build_jsa, compare_models, default_grid,
                   derived_metrics, find_coupling, grid_convergence)
from fcpdc.analytic import DB_PER_R


@pytest.fixture(scope="module")
def fc_grid():
    return default_grid(FC_PRESET, 64)


@pytest.fixture(scope="module")
def pdc_grid():
    return default_grid(PDC_PRESET, 64)


class TestFindCoupling:
    def test_zero_target(self, fc_grid):
        assert find_coupling(FC_PRESET, fc_grid, 0.0, "first_mode_efficiency") == 0.0

    def test_efficiency_closed_form(self, fc_grid):
        # oracle: gamma = arcsin(sqrt(t)) / s1 with s1 from a raw SVD
        s1 = np.linalg.svd(build_jsa(FC_PRESET, fc_grid).values, compute_uv=False)[0]
        g = find_coupling(FC_PRESET, fc_grid, 0.064, "first_mode_efficiency")
        assert g == pytest.approx(np.arcsin(np.sqrt(0.064)) / s1, rel=1e-12)

    def test_post_peak_branch(self, fc_grid):
        lo = find_coupling(FC_PRESET, fc_grid, 0.30, "first_mode_efficiency")
        hi = find_coupling(FC_PRESET, fc_grid, 0.30, "first_mode_efficiency",
                           branch="post_peak")
        assert hi > lo
        for g in (lo, hi):
            modes = analytic_solve(FC_PRESET.with_coupling(g), fc_grid)
            assert np.sin(modes.r[0]) ** 2 == pytest.approx(0.30, rel=1e-9)

    def test_mean_photons_round_trip(self, pdc_grid):
        g = find_coupling(PDC_PRESET, pdc_grid, 2.80, "mean_photons")
        rep = derived_metrics(analytic_solve(PDC_PRESET.with_coupling(g), pdc_grid))
        assert rep.mean_photons == pytest.approx(2.80, rel=1e-6)

    def test_squeezing_closed_form(self, pdc_grid):
        g = find_coupling(PDC_PRESET, pdc_grid, 12.0, "squeezing_db")
        modes = analytic_solve(PDC_PRESET.with_coupling(g), pdc_grid)
        assert DB_PER_R * modes.r[0] == pytest.approx(12.0, rel=1e-9)

    def test_unreachable_targets(self, fc_grid, pdc_grid):
        with pytest.raises(TargetUnreachableError):
            find_coupling(FC_PRESET, fc_grid, 1.5, "first_mode_efficiency")
        with pytest.raises(TargetUnreachableError):
            find_coupling(PDC_PRESET, pdc_grid, -1.0, "mean_photons")

    def test_metric_kind_mismatch(self, fc_grid, pdc_grid):
        with pytest.raises(ValueError):
            find_coupling(PDC_PRESET, pdc_grid, 0.5, "first_mode_efficiency")
        with pytest.raises(ValueError):
            find_coupling(FC_PRESET, fc_grid, 1.0, "mean_photons")
        with pytest.raises(ValueError):
            find_coupling(FC_PRESET, fc_grid, 1.0, "nope")


class TestCompareModels:
    def test_zero_coupling(self, fc_grid):
        rep = compare_models(FC_PRESET.with_coupling(0.0), fc_grid,
                             ZGrid(65, FC_PRESET.length))
        assert np.all(rep.analytic.r == 0)
        assert np.all(rep.rigorous.r == 0)
        assert all(v < 1e-12 for v in rep.canonical.values())

    def test_low_gain_pdc_mean_photons_agree(self):
        grid = default_grid(PDC_PRESET, 96)
        g = find_coupling(PDC_PRESET, grid, 0.07, "mean_photons")
        rep = compare_models(PDC_PRESET.with_coupling(g), grid,
                             ZGrid(97, PDC_PRESET.length))
        assert rep.analytic.mean_photons == pytest.approx(0.07, abs=1e-6)
        assert rep.rigorous.mean_photons == pytest.approx(0.07, abs=0.01)
        assert rep.first_mode_overlap_in > 0.999

    def test_widths_populated(self, fc_grid):
        rep = compare_models(FC_PRESET.with_coupling(0.3), fc_grid,
                             ZGrid(65, FC_PRESET.length))
        assert rep.width_in_analytic > 0
        assert rep.width_out_rigorous > 0


def test_squeezing_deviation_grows_with_gain():
    """The time-ordered model consistently squeezes harder; the deviation is
    small at low gain (<5% below ~6 dB) and grows monotonically, exceeding
    the analytic value outright in the high-gain regime."""
    grid = default_grid(PDC_PRESET, 96)
    zg = ZGrid(97, PDC_PRESET.length)
    rel = []
    for db in (2.0, 4.0, 6.0, 10.0, 14.0):
        g = find_coupling(PDC_PRESET, grid, db, "squeezing_db")
        rep = compare_models(PDC_PRESET.with_coupling(g), grid, zg)
        rig_db = float(rep.rigorous.squeezing_db[0])
        rel.append((rig_db - db) / db)
        if db <= 6.0:
            assert rig_db == pytest.approx(db, rel=0.05)
        else:
            assert rig_db > db
            assert rep.rigorous.mean_photons > rep.analytic.mean_photons
    assert np.all(np.diff(rel) > 0)


class TestGridConvergence:
    def test_zero_coupling_zero_metric(self):
        table = grid_convergence(FC_PRESET.with_coupling(0.0), "r1",
                                 resolutions=(16, 32), window_scales=(1.0,))
        assert all(row["value"] == 0 for row in table.rows)

    def test_window_doubling_stable_r1(self):
        table = grid_convergence(FC_PRESET.with_coupling(0.1), "r1",
                                 resolutions=(200,), window_scales=(1.0, 2.0))
        v1, v2 = (row["value"] for row in table.rows)
        assert abs(v2 - v1) / v1 < 1e-6

    def test_canonical_error_non_increasing(self):
        table = grid_convergence(FC_PRESET.with_coupling(0.8), "canonical_error",
                                 resolutions=(24, 48, 96), window_scales=(1.0,))
        vals = [row["value"] for row in table.rows]
        assert vals[0] >= vals[1] >= vals[2]

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            grid_convergence(FC_PRESET, "bogus")

    def test_rel_change_column(self):
        table = grid_convergence(FC_PRESET.with_coupling(0.2), "first_mode_efficiency",
                                 resolutions=(32, 64), window_scales=(1.0,))
        assert np.isnan(table.rows[0]["rel_change"])
        assert table.rows[1]["rel_change"] >= 0
