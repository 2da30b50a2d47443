import numpy as np
import pytest

from fcpdc import (FC_PRESET, PDC_PRESET, FrequencyGrid, NonConvergenceError,
                   ProcessKind, ZGrid, analytic_solve, build_z_kernel,
                   canonical_error, default_grid, picard_solve)

from conftest import trapezoid_weights


@pytest.mark.parametrize("spec", [FC_PRESET, PDC_PRESET], ids=["FC", "PDC"])
def test_zero_gain_identity(spec, small_grid, small_zgrid):
    tm = picard_solve(spec.with_coupling(0.0), small_grid, small_zgrid)
    n = small_grid.n
    np.testing.assert_array_equal(tm.Ua, np.eye(n))
    np.testing.assert_array_equal(tm.Ux, np.eye(n))
    assert np.all(tm.Va == 0)
    assert np.all(tm.Vx == 0)
    assert tm.iterations_used == 1
    assert all(v < 1e-12 for v in canonical_error(tm).values())


def test_first_picard_pass_is_integrated_kernel():
    # at vanishing gain Vc is the z-integral of the kernel's conjugate
    # transpose; the solver integrates the plain-trapezoid (uncompensated)
    # kernel, so compare against exactly that
    spec = FC_PRESET.with_coupling(1e-5)
    grid = default_grid(spec, 40)
    zgrid = ZGrid(81, spec.length)
    tm = picard_solve(spec, grid, zgrid)
    zk = build_z_kernel(spec, grid, zgrid, compensate=False)
    w = trapezoid_weights(zgrid.m, zgrid.step)
    integral = (zk.values * w[None, None, :]).sum(axis=-1)
    np.testing.assert_allclose(tm.Vx, integral.conj().T,
                               atol=1e-9 * np.abs(integral).max())


def test_low_gain_matches_analytic():
    spec = FC_PRESET.with_coupling(1e-3)
    grid = default_grid(spec, 64)
    tm = picard_solve(spec, grid, ZGrid(501, spec.length))
    rig = np.linalg.svd(tm.Va, compute_uv=False)[:3]
    ana = analytic_solve(spec, grid).r[:3]
    # floor set by the trapezoid quadrature of the kernel phase, not by gamma
    np.testing.assert_allclose(np.arcsin(rig), ana, rtol=5e-5)


def test_determinism(small_grid, small_zgrid):
    spec = FC_PRESET.with_coupling(0.7)
    a = picard_solve(spec, small_grid, small_zgrid)
    b = picard_solve(spec, small_grid, small_zgrid)
    for name in ("Ua", "Ux", "Va", "Vx"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_chunk_size_does_not_change_result(small_grid, small_zgrid):
    spec = PDC_PRESET.with_coupling(0.6)
    a = picard_solve(spec, small_grid, small_zgrid, chunk=5)
    b = picard_solve(spec, small_grid, small_zgrid, chunk=64)
    for name in ("Ua", "Ux", "Va", "Vx"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_history_stride_equals_coarse_grid(small_grid):
    spec = FC_PRESET.with_coupling(0.5)
    strided = picard_solve(spec, small_grid, ZGrid(81, spec.length), history_stride=4)
    coarse = picard_solve(spec, small_grid, ZGrid(21, spec.length))
    for name in ("Ua", "Ux", "Va", "Vx"):
        np.testing.assert_array_equal(getattr(strided, name), getattr(coarse, name))
    assert strided.zgrid.m == 21


def test_history_stride_must_divide(small_grid):
    with pytest.raises(ValueError):
        picard_solve(FC_PRESET, small_grid, ZGrid(80, FC_PRESET.length),
                     history_stride=3)


def test_nonconvergence_raises(small_grid, small_zgrid):
    spec = FC_PRESET.with_coupling(1.5)
    with pytest.raises(NonConvergenceError) as err:
        picard_solve(spec, small_grid, small_zgrid, max_iter=2)
    assert err.value.iterations == 2
    assert err.value.residual > 1e-8


def test_invalid_arguments(small_grid, small_zgrid):
    with pytest.raises(ValueError):
        picard_solve(FC_PRESET, small_grid, small_zgrid, tol=0.0)
    with pytest.raises(ValueError):
        picard_solve(FC_PRESET, small_grid, small_zgrid, max_iter=0)
    with pytest.raises(ValueError):
        picard_solve(FC_PRESET, small_grid, small_zgrid, history_stride=0)
    with pytest.raises(ValueError, match="crystal"):
        picard_solve(FC_PRESET, small_grid, ZGrid(9, FC_PRESET.length / 2))


@pytest.mark.parametrize("spec,gamma", [(FC_PRESET, 1.2), (PDC_PRESET, 1.0)],
                         ids=["FC", "PDC"])
def test_residuals_decrease_after_second_iteration(spec, gamma, small_grid, small_zgrid):
    tm = picard_solve(spec.with_coupling(gamma), small_grid, small_zgrid)
    for hist in tm.residual_history:
        tail = np.asarray(hist[2:])
        assert np.all(np.diff(tail) < 0), f"residuals not monotone: {hist}"


def test_residual_history_exposed(small_grid, small_zgrid):
    tm = picard_solve(FC_PRESET.with_coupling(0.4), small_grid, small_zgrid)
    assert len(tm.residual_history) == 2
    assert all(h[-1] < 1e-8 for h in tm.residual_history)
    assert tm.residual == max(h[-1] for h in tm.residual_history)


def test_canonical_error_reductions(small_grid, small_zgrid):
    tm = picard_solve(PDC_PRESET.with_coupling(0.8), small_grid, small_zgrid)
    hard = canonical_error(tm, "abs")
    soft = canonical_error(tm, "signed")
    assert set(hard) == {"identity_a", "identity_x", "cross"}
    for name in hard:
        assert soft[name] <= hard[name] + 1e-15
    with pytest.raises(ValueError):
        canonical_error(tm, "bogus")


def test_canonical_error_improves_with_resolution():
    spec = PDC_PRESET.with_coupling(0.8)
    errs = []
    for nm in (24, 48, 96):
        grid = default_grid(spec, nm)
        tm = picard_solve(spec, grid, ZGrid(nm, spec.length))
        errs.append(max(canonical_error(tm).values()))
    assert errs[0] > errs[1] > errs[2]
