"""Generic three-wave process definition and discretized coupling kernels.

A process is fully specified by six numbers: the pump spectral width, an
overall coupling strength (all prefactors of the interaction Hamiltonian
merged into one real gain), the three inverse group velocities, and the
crystal length.  Frequencies are detunings from the respective carriers, in
units reciprocal to the slope units times length units.

Two kernels are produced from a process:

* the frequency-domain coupling ``build_jsa`` (pump envelope times sinc
  phasematching), which the analytic solver decomposes, and
* the z-resolved coupling ``build_z_kernel``, whose z-integral over the
  crystal reduces to the former.

Quadrature weights are folded into the kernel entries, so all downstream
operations are plain matrix algebra.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class ProcessKind(enum.Enum):
    """Frequency conversion (beam-splitter type) or type-II PDC (squeezer type)."""

    FC = "FC"
    PDC = "PDC"


@dataclass(frozen=True)
class ProcessSpec:
    """Six-parameter description of an FC or PDC process.

    kp_slope, k1_slope, k2_slope are the inverse group velocities of the
    pump and of the two quantum fields (a and c for FC, a and b for PDC).
    ``coupling`` is the merged gain constant; pump amplitude is not a
    separate knob.
    """

    kind: ProcessKind
    sigma: float
    coupling: float
    kp_slope: float
    k1_slope: float
    k2_slope: float
    length: float

    def __post_init__(self):
        for name in ("sigma", "coupling", "kp_slope", "k1_slope", "k2_slope", "length"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.length <= 0:
            raise ValueError(f"length must be > 0, got {self.length}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")

    def with_coupling(self, gamma: float) -> "ProcessSpec":
        return ProcessSpec(self.kind, self.sigma, gamma, self.kp_slope,
                           self.k1_slope, self.k2_slope, self.length)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform detuning grid with trapezoid weight dnu = (nu_max-nu_min)/(n-1)."""

    n: int
    nu_min: float
    nu_max: float
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 grid points, got n={self.n}")
        if not (math.isfinite(self.nu_min) and math.isfinite(self.nu_max)):
            raise ValueError("grid bounds must be finite")
        if self.nu_max <= self.nu_min:
            raise ValueError(f"nu_max must exceed nu_min, got [{self.nu_min}, {self.nu_max}]")
        object.__setattr__(self, "points", np.linspace(self.nu_min, self.nu_max, self.n))

    @property
    def weight(self) -> float:
        return (self.nu_max - self.nu_min) / (self.n - 1)


@dataclass(frozen=True)
class ZGrid:
    """Uniform propagation grid on [-L/2, +L/2]; endpoints are grid points."""

    m: int
    length: float
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"need at least 2 z points, got m={self.m}")
        if not math.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"length must be > 0, got {self.length}")
        object.__setattr__(self, "points", np.linspace(-self.length / 2, self.length / 2, self.m))

    @property
    def step(self) -> float:
        return self.length / (self.m - 1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.m, self.step)
        w[0] = w[-1] = self.step / 2
        return w


@dataclass(frozen=True, eq=False)
class Kernel:
    """Discretized coupling: n x n (frequency JSA) or n x n x m (z-resolved)."""

    values: np.ndarray
    grid: FrequencyGrid
    zgrid: ZGrid | None = None


def default_grid(spec: ProcessSpec, n: int, halfwidth_factor: float = 5.0) -> FrequencyGrid:
    """Grid window covering both the pump width and the phasematching bandwidth.

    The half width is ``halfwidth_factor`` times the larger of the pump width
    and 2*pi/(|k1'-k2'| L).  Override the bounds directly for anything else.
    """
    dslope = abs(spec.k1_slope - spec.k2_slope)
    if dslope * spec.length > 1e-12:
        bw = 2 * np.pi / (dslope * spec.length)
    else:
        bw = 0.0
    half = halfwidth_factor * max(spec.sigma, bw)
    return FrequencyGrid(n, -half, half)


def pump_amplitude(spec: ProcessSpec, nu, nu_prime):
    """Unit-peak Gaussian pump envelope; argument nu-nu' for FC, nu+nu' for PDC."""
    nu = np.asarray(nu, dtype=float)
    nu_prime = np.asarray(nu_prime, dtype=float)
    if spec.kind is ProcessKind.FC:
        arg = nu - nu_prime
    else:
        arg = nu + nu_prime
    return np.exp(-(arg ** 2) / (2 * spec.sigma ** 2))


def phase_mismatch(spec: ProcessSpec, nu, nu_prime):
    """First-order wavevector mismatch; zero at nu = nu' = 0 by construction."""
    nu = np.asarray(nu, dtype=float)
    nu_prime = np.asarray(nu_prime, dtype=float)
    if spec.kind is ProcessKind.FC:
        return spec.kp_slope * (nu_prime - nu) - spec.k2_slope * nu_prime + spec.k1_slope * nu
    return spec.kp_slope * (nu + nu_prime) - spec.k1_slope * nu - spec.k2_slope * nu_prime


def sinc(x):
    """sin(x)/x with the removable singularity patched at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-100
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0, np.sin(safe) / safe)


def _pump_and_mismatch(spec: ProcessSpec, grid: FrequencyGrid):
    nu, nup = np.meshgrid(grid.points, grid.points, indexing="ij")
    return pump_amplitude(spec, nu, nup), phase_mismatch(spec, nu, nup)


def build_jsa(spec: ProcessSpec, grid: FrequencyGrid) -> Kernel:
    """Frequency-domain coupling gamma * pump * sinc(dk L/2) * dnu."""
    amp, dk = _pump_and_mismatch(spec, grid)
    values = spec.coupling * amp * sinc(dk * spec.length / 2) * grid.weight
    return Kernel(values.astype(complex), grid)


def build_z_kernel(spec: ProcessSpec, grid: FrequencyGrid, zgrid: ZGrid,
                   compensate: bool = True) -> Kernel:
    """z-resolved coupling -i (gamma/L) pump exp(s i dk z) dnu, s = -1 FC / +1 PDC.

    With ``compensate`` (default) each entry carries the factor tan(x)/x,
    x = dk*dz/2, which makes the composite-trapezoid z-sum of the pure phase
    reproduce the exact integral L*sinc(dk L/2), so that z-integrating this
    kernel recovers -i * build_jsa to machine precision.  Entries whose phase
    advances faster than one radian per z step are left uncompensated (the
    z grid cannot resolve them either way).
    """
    if abs(zgrid.length - spec.length) > 1e-12 * max(1.0, spec.length):
        raise ValueError("z grid length does not match the crystal length")
    amp, dk = _pump_and_mismatch(spec, grid)
    sign = -1.0 if spec.kind is ProcessKind.FC else 1.0
    base = (-1j) * (spec.coupling / spec.length) * amp * grid.weight
    if compensate:
        x = dk * zgrid.step / 2
        ax = np.abs(x)
        safe = np.where(ax < 1e-12, 1.0, x)
        factor = np.where(ax < 1e-12, 1.0,
                          np.where(ax < 1.0, np.tan(safe) / safe, 1.0))
        base = base * factor
    phase = np.exp((1j * sign) * dk[:, :, None] * zgrid.points[None, None, :])
    return Kernel(base[:, :, None] * phase, grid, zgrid)


# Reference presets: almost uncorrelated, few-mode processes (gamma left at 1).
FC_PRESET = ProcessSpec(ProcessKind.FC, sigma=0.98190, coupling=1.0,
                        kp_slope=3.0, k1_slope=4.5, k2_slope=1.5, length=2.0)
PDC_PRESET = ProcessSpec(ProcessKind.PDC, sigma=0.96231155, coupling=1.0,
                         kp_slope=3.0, k1_slope=4.5, k2_slope=1.5, length=2.0)
