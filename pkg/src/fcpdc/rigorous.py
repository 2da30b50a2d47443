"""Time-ordered solution of the coupled integro-differential propagation equations.

The Heisenberg-picture transfer functions obey, in matrix form on the
frequency grid (quadrature weight absorbed into the kernel K(z)),

    FC:   dUa/dz = -K(z) Vc            dVc/dz =  K(z)^H Ua
          dUc/dz = -K(z)^H Va          dVa/dz =  K(z)   Uc
    PDC:  dUa/dz =  K(z) conj(Vb)      dVb/dz =  K(z)^T conj(Ua)
          dUb/dz =  K(z)^T conj(Va)    dVa/dz =  K(z)   conj(Ub)

with U = identity and V = 0 at the crystal entrance z = -L/2.  Formally
integrating and iterating from the no-interaction solution converges to the
full solution: every frequency integral is a matrix product and every z
integral a cumulative composite trapezoid over the stored z-resolved
histories.

On a uniform grid the kernel separates as
K(z) = const * diag(exp(i cL nu z)) A diag(exp(i cR nu z)) with a constant
real pump matrix A, so K(z) @ M costs one constant-matrix product plus two
diagonal scalings per z slice and the kernel is never materialized.  The
two (U, V) pairs decouple and are solved sequentially, which bounds memory
at two m x n x n history slabs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .process import FrequencyGrid, ProcessKind, ProcessSpec, ZGrid


class NonConvergenceError(RuntimeError):
    """Picard iteration failed to reach the requested tolerance."""

    def __init__(self, iterations: int, residual: float, tol: float):
        super().__init__(
            f"no convergence after {iterations} iterations: "
            f"residual {residual:.3e} > tol {tol:.3e}")
        self.iterations = iterations
        self.residual = residual
        self.tol = tol

    def __reduce__(self):
        return (NonConvergenceError, (self.iterations, self.residual, self.tol))


@dataclass(eq=False)
class TransferMatrices:
    """The four transfer matrices at the crystal exit z = +L/2.

    ``Ux``/``Vx`` belong to the second quantum field (c for FC, b for PDC).
    ``residual_history`` holds the per-iteration relative changes of the two
    solve pairs so convergence behaviour can be inspected rather than
    assumed.
    """

    kind: ProcessKind
    Ua: np.ndarray
    Ux: np.ndarray
    Va: np.ndarray
    Vx: np.ndarray
    iterations_used: int
    residual: float
    grid: FrequencyGrid
    zgrid: ZGrid
    residual_history: list = field(default_factory=list, repr=False)


class _SeparableKernel:
    """Applies op(K(z_l)) @ M slice-stacks without materializing K.

    op "K" is the kernel itself, "KH" its conjugate transpose, "KT" its
    transpose; A is real symmetric, so all three keep the
    diag * A * diag structure with permuted phase coefficients.
    """

    def __init__(self, spec: ProcessSpec, grid: FrequencyGrid, zgrid: ZGrid):
        nu = grid.points
        self.nu = nu
        self.z = zgrid.points
        self.const = -1j * spec.coupling * grid.weight / spec.length
        if spec.kind is ProcessKind.FC:
            # kernel phase exp(-i dk z), dk = (k1-kp) nu + (kp-k2) nu'
            self.cL = spec.kp_slope - spec.k1_slope
            self.cR = spec.k2_slope - spec.kp_slope
            pump_arg = nu[:, None] - nu[None, :]
        else:
            # kernel phase exp(+i dk z), dk = (kp-k1) nu + (kp-k2) nu'
            self.cL = spec.kp_slope - spec.k1_slope
            self.cR = spec.kp_slope - spec.k2_slope
            pump_arg = nu[:, None] + nu[None, :]
        self.A = np.exp(-(pump_arg ** 2) / (2 * spec.sigma ** 2)).astype(complex)

    def _coeffs(self, op: str):
        if op == "K":
            return self.const, self.cL, self.cR
        if op == "KH":
            return np.conj(self.const), -self.cR, -self.cL
        if op == "KT":
            return self.const, self.cR, self.cL
        raise ValueError(op)  # pragma: no cover - internal

    def apply(self, op: str, M: np.ndarray, sl: slice, out: np.ndarray) -> None:
        """out[:] = op(K(z_l)) @ M for the z slices ``sl``; M may alias out."""
        c, a, b = self._coeffs(op)
        zs = self.z[sl]
        left = c * np.exp(1j * a * zs[:, None] * self.nu[None, :])
        right = np.exp(1j * b * zs[:, None] * self.nu[None, :])
        inner = right[:, :, None] * M
        np.matmul(self.A, inner, out=out)
        out *= left[:, :, None]


def _cumtrapz_inplace(G: np.ndarray, dz: float, first: np.ndarray) -> None:
    """Overwrite the integrand stack G[l] with first + cumulative trapezoid."""
    prev = G[0].copy()
    G[0] = first
    half = dz / 2
    for l in range(1, G.shape[0]):
        cur = G[l].copy()
        np.add(prev, cur, out=G[l])
        G[l] *= half
        G[l] += G[l - 1]
        prev = cur


def _solve_pair(spec: ProcessSpec, kern: _SeparableKernel, pair: int,
                tol: float, max_iter: int, chunk: int):
    """Iterate one (U, V) pair to its fixed point; returns end-slice matrices."""
    n = len(kern.nu)
    m = len(kern.z)
    dz = kern.z[1] - kern.z[0]
    if spec.kind is ProcessKind.FC:
        v_op, u_op = ("KH", "K") if pair == 1 else ("K", "KH")
        u_sign, conj_hist = -1.0, False
    else:
        v_op, u_op = ("KT", "K") if pair == 1 else ("K", "KT")
        u_sign, conj_hist = 1.0, True

    eye = np.eye(n, dtype=complex)
    U = np.broadcast_to(eye, (m, n, n)).copy()
    V = np.zeros((m, n, n), dtype=complex)
    u_end, v_end = U[-1].copy(), V[-1].copy()
    history = []
    residual = math.inf
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        for l0 in range(0, m, chunk):
            sl = slice(l0, min(l0 + chunk, m))
            src = np.conj(U[sl]) if conj_hist else U[sl]
            kern.apply(v_op, src, sl, out=V[sl])
        _cumtrapz_inplace(V, dz, np.zeros((n, n), dtype=complex))
        for l0 in range(0, m, chunk):
            sl = slice(l0, min(l0 + chunk, m))
            src = np.conj(V[sl]) if conj_hist else V[sl]
            kern.apply(u_op, src, sl, out=U[sl])
            if u_sign != 1.0:
                U[sl] *= u_sign
        _cumtrapz_inplace(U, dz, eye)
        du = np.linalg.norm(U[-1] - u_end)
        dv = np.linalg.norm(V[-1] - v_end)
        nrm_u = np.linalg.norm(U[-1])
        nrm_v = np.linalg.norm(V[-1])
        residual = max(du / max(nrm_u, 1e-300),
                       dv / nrm_v if nrm_v > 0 else 0.0)
        history.append(residual)
        u_end, v_end = U[-1].copy(), V[-1].copy()
        if residual < tol:
            break
    return u_end, v_end, iterations, residual, history


def picard_solve(spec: ProcessSpec, grid: FrequencyGrid, zgrid: ZGrid,
                 tol: float = 1e-8, max_iter: int = 200,
                 history_stride: int = 1, chunk: int = 25) -> TransferMatrices:
    """Solve the time-ordered dynamics by fixed-point iteration.

    Starting from the no-interaction solution, V is recomputed at all z from
    the current U history and U from the current V history until the
    relative end-slice change of both matrices of a pair drops below
    ``tol``; raises NonConvergenceError otherwise.

    ``history_stride`` > 1 keeps every stride-th z slice only, cutting
    memory by that factor; it is equivalent to solving on the
    correspondingly coarser z grid (which the returned ``zgrid`` reflects).
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    if history_stride < 1:
        raise ValueError(f"history_stride must be >= 1, got {history_stride}")
    if chunk < 1:
        raise ValueError(f"chunk must be >= 1, got {chunk}")
    if abs(zgrid.length - spec.length) > 1e-12 * max(1.0, spec.length):
        raise ValueError(
            f"z grid length {zgrid.length} does not match the crystal "
            f"length {spec.length}")
    zg = zgrid
    if history_stride > 1:
        if (zgrid.m - 1) % history_stride != 0:
            raise ValueError(
                f"history_stride {history_stride} must divide m-1 = {zgrid.m - 1}")
        zg = ZGrid((zgrid.m - 1) // history_stride + 1, zgrid.length)
    kern = _SeparableKernel(spec, grid, zg)
    ua, vx, it1, res1, hist1 = _solve_pair(spec, kern, 1, tol, max_iter, chunk)
    if res1 > tol:
        raise NonConvergenceError(it1, res1, tol)
    ux, va, it2, res2, hist2 = _solve_pair(spec, kern, 2, tol, max_iter, chunk)
    if res2 > tol:
        raise NonConvergenceError(it2, res2, tol)
    return TransferMatrices(kind=spec.kind, Ua=ua, Ux=ux, Va=va, Vx=vx,
                            iterations_used=max(it1, it2),
                            residual=max(res1, res2),
                            grid=grid, zgrid=zg,
                            residual_history=[hist1, hist2])


def canonical_error(tm: TransferMatrices, reduction: str = "abs") -> dict[str, float]:
    """Distance of the solution from a canonical transformation.

    Each condition's residual matrix is reduced to a scalar normalized by
    0.5 * (sum|Va| + sum|Ux|); the quadrature weight cancels between
    numerator and denominator.  ``reduction`` picks the numerator:
    "abs" sums |entries| (an L1 distance), "signed" takes |sum of entries|
    (the plain double integral of the residual, which benefits from sign
    cancellation and is the quantity the reference error bounds describe).
    """
    if reduction not in ("abs", "signed"):
        raise ValueError(f"unknown reduction {reduction!r}")
    n = tm.Ua.shape[0]
    eye = np.eye(n)
    if tm.kind is ProcessKind.FC:
        res = {
            "identity_a": tm.Ua @ tm.Ua.conj().T + tm.Va @ tm.Va.conj().T - eye,
            "identity_x": tm.Ux @ tm.Ux.conj().T + tm.Vx @ tm.Vx.conj().T - eye,
            "cross": tm.Ua @ tm.Vx.conj().T - tm.Va @ tm.Ux.conj().T,
        }
    else:
        res = {
            "identity_a": tm.Ua @ tm.Ua.conj().T - tm.Va @ tm.Va.conj().T - eye,
            "identity_x": tm.Ux @ tm.Ux.conj().T - tm.Vx @ tm.Vx.conj().T - eye,
            "cross": tm.Ua @ tm.Vx.T - tm.Va @ tm.Ux.T,
        }
    denom = 0.5 * (np.abs(tm.Va).sum() + np.abs(tm.Ux).sum())
    if reduction == "abs":
        return {name: float(np.abs(r).sum() / denom) for name, r in res.items()}
    return {name: float(np.abs(r.sum()) / denom) for name, r in res.items()}
