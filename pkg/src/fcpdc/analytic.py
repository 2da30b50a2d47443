"""Time-ordering-free solution via singular value decomposition of the JSA.

The frequency-domain coupling factorizes into independent broadband mode
pairs: beam-splitter pairs with mixing angle r_k for FC, two-mode squeezers
with squeeze parameter r_k for PDC.  Input and output mode shapes coincide
in this model, and every r_k is exactly linear in the coupling constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .process import FrequencyGrid, Kernel, ProcessKind, ProcessSpec, build_jsa

DB_PER_R = 20.0 * np.log10(np.e)  # EPR squeezing dB per unit squeeze parameter

#: Modes with r below this fraction of the leading r are dropped from reports.
REPORT_TRUNCATION = 1e-12


@dataclass(eq=False)
class ModeSpectrum:
    """Mode amplitudes and the four broadband mode families on a grid.

    Columns of the mode arrays are mode functions, orthonormal under the
    dnu-weighted inner product.  For FC the efficiency of mode k is
    sin^2(r_k); for PDC the gain is sinh^2(r_k).
    """

    kind: ProcessKind
    r: np.ndarray
    in_modes_a: np.ndarray
    in_modes_b: np.ndarray
    out_modes_a: np.ndarray
    out_modes_b: np.ndarray
    grid: FrequencyGrid

    @property
    def n_modes(self) -> int:
        return len(self.r)

    def mode_overlap(self, other_family: np.ndarray, family: np.ndarray) -> np.ndarray:
        """|<f_j, g_k>| matrix under the dnu-weighted inner product."""
        return np.abs(family.conj().T @ other_family) * self.grid.weight


@dataclass(eq=False)
class MetricsReport:
    """Per-mode figures of merit derived from the mode amplitudes."""

    kind: ProcessKind
    r: np.ndarray
    efficiency: np.ndarray | None = None      # FC: sin^2(r_k)
    gain: np.ndarray | None = None            # PDC: sinh^2(r_k)
    squeezing_db: np.ndarray | None = None    # PDC, per mode
    mean_photons: float | None = None         # PDC, total over modes
    schmidt_number: float = field(default=0.0)


def _phase_fix(left: np.ndarray, right: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotate each (left, right) column pair so the left column's largest
    component is real positive; the joint rotation leaves left @ diag @ right^H
    invariant."""
    idx = np.argmax(np.abs(left), axis=0)
    piv = left[idx, np.arange(left.shape[1])]
    mag = np.abs(piv)
    phase = np.where(mag > 0, piv / np.where(mag > 0, mag, 1.0), 1.0)
    return left / phase[None, :], right / phase[None, :]


def _tie_break_order(s: np.ndarray, left: np.ndarray) -> np.ndarray:
    """Descending s; exact ties ordered by first index of maximum |component|."""
    key_idx = np.argmax(np.abs(left), axis=0)
    order = np.lexsort((key_idx, -s))
    return order


def schmidt_decompose(kernel: Kernel, kind: ProcessKind = ProcessKind.FC) -> ModeSpectrum:
    """SVD of the frequency-domain coupling into mode amplitudes and shapes.

    The decomposed object is -i times the kernel, so that
    sum_k r_k psi_k(nu) phi_k*(nu') * dnu reproduces -i * kernel exactly.
    Output modes are returned equal to input modes.
    """
    if kernel.zgrid is not None:
        raise ValueError("expected a frequency-domain kernel, got a z-resolved one")
    values = np.asarray(kernel.values)
    if not np.all(np.isfinite(values)):
        raise ValueError("kernel contains non-finite entries")
    w, s, xh = np.linalg.svd(-1j * values)
    x = xh.conj().T
    order = _tie_break_order(s, w)
    w, s, x = w[:, order], s[order], x[:, order]
    w, x = _phase_fix(w, x)
    dnu = kernel.grid.weight
    psi = w / np.sqrt(dnu)
    phi = x / np.sqrt(dnu)
    return ModeSpectrum(kind=kind, r=s,
                        in_modes_a=psi, in_modes_b=phi,
                        out_modes_a=psi.copy(), out_modes_b=phi.copy(),
                        grid=kernel.grid)


def analytic_solve(spec: ProcessSpec, grid: FrequencyGrid) -> ModeSpectrum:
    """Build the JSA for ``spec`` and Schmidt-decompose it."""
    return schmidt_decompose(build_jsa(spec, grid), kind=spec.kind)


def derived_metrics(modes: ModeSpectrum) -> MetricsReport:
    """Efficiencies (FC) or squeezing / mean photon number (PDC) from r_k."""
    r = modes.r
    if r.size and r[0] > 0:
        r = r[r >= REPORT_TRUNCATION * r[0]]
    r2 = r ** 2
    total = r2.sum()
    schmidt = float(total ** 2 / (r2 ** 2).sum()) if total > 0 else 0.0
    if modes.kind is ProcessKind.FC:
        return MetricsReport(kind=modes.kind, r=r, efficiency=np.sin(r) ** 2,
                             schmidt_number=schmidt)
    sh2 = np.sinh(r) ** 2
    return MetricsReport(kind=modes.kind, r=r, gain=sh2,
                         squeezing_db=DB_PER_R * r,
                         mean_photons=float(sh2.sum()),
                         schmidt_number=schmidt)
