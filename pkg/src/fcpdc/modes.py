"""Normal-form extraction from rigorous transfer matrices.

A canonical transformation factorizes into independent mode pairs: the four
transfer matrices share one set of mode amplitudes (cos r_k paired with
sin r_k for FC, cosh r_k with sinh r_k for PDC) and four orthonormal mode
families.

Direct SVDs of the U matrices are numerically fragile because their singular
values cluster at 1, so mode shapes are taken from eigendecompositions of
the Hermitian products U U^H and U^H U instead.  The r_k and the pairing of
eigenvectors across families come from the V-matrix SVDs, whose spectrum
separates cleanly: eigenvector blocks belonging to nearly degenerate
eigenvalues are rotated to maximize overlap with the V singular vectors, and
leftover (numerically unresolvable) directions are re-paired through the
matrix restriction itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import ModeSpectrum
from .process import ProcessKind
from .rigorous import TransferMatrices

#: Modes with sin/sinh value above this fraction of the leading one take part
#: in overlap-based pairing; deeper modes sit at or below the cross-matrix
#: consistency floor of a converged solve and are paired through the U
#: matrices instead.
PAIRING_FLOOR = 1e-4

#: Two candidate pairings closer than this are considered ambiguous.
AMBIGUITY_TOL = 1e-6

#: Eigenvalue gap (relative to the largest singular value) below which
#: eigenvectors are treated as one degenerate block.
CLUSTER_TOL = 1e-7


class PairingAmbiguityError(RuntimeError):
    """Degenerate mode amplitudes make the cross-family pairing ill-defined."""

    def __init__(self, mode_index: int, detail: str):
        super().__init__(f"mode {mode_index}: {detail}")
        self.mode_index = mode_index
        self.detail = detail

    def __reduce__(self):
        return (PairingAmbiguityError, (self.mode_index, self.detail))


@dataclass(eq=False)
class SymmetryReport:
    """Consistency checks between the extracted modes and the raw matrices."""

    kind: ProcessKind
    unitarity_dev_a: float
    unitarity_dev_x: float
    expansion_residuals: dict
    shared_residuals: dict
    overlap_in_out_a: np.ndarray
    overlap_in_out_b: np.ndarray

    @property
    def unitarity_dev(self) -> float:
        return max(self.unitarity_dev_a, self.unitarity_dev_x)


def _eig_products(M: np.ndarray):
    """Ascending singular values of M plus left/right eigenbases of M M^H, M^H M."""
    lam_l, EL = np.linalg.eigh(M @ M.conj().T)
    lam_r, ER = np.linalg.eigh(M.conj().T @ M)
    sig = np.sqrt(np.clip(0.5 * (lam_l + lam_r), 0.0, None))
    return sig, EL, ER


def _cluster_bounds(sig: np.ndarray) -> list[tuple[int, int]]:
    tol = CLUSTER_TOL * max(float(sig[-1]), 1e-300) + 1e-14
    bounds = []
    start = 0
    for stop in range(1, len(sig) + 1):
        if stop < len(sig) and sig[stop] - sig[stop - 1] <= tol:
            continue
        bounds.append((start, stop))
        start = stop
    return bounds


def _self_paired_svd(M: np.ndarray):
    """SVD-like factorization M = P diag(d) Q^H from the Hermitian products.

    Left/right eigenvectors are paired by eigenvalue; inside each degenerate
    block both bases are rotated with the SVD of the block restriction
    P^H M Q, which makes the middle factor diagonal and non-negative.
    """
    sig, P, Q = _eig_products(M)
    P = P.copy()
    Q = Q.copy()
    d = np.zeros(len(sig))
    for start, stop in _cluster_bounds(sig):
        idx = slice(start, stop)
        B = P[:, idx].conj().T @ M @ Q[:, idx]
        if stop - start > 1:
            u, s_blk, vh = np.linalg.svd(B)
            P[:, idx] = P[:, idx] @ u
            Q[:, idx] = Q[:, idx] @ vh.conj().T
            d[idx] = s_blk
        else:
            val = B[0, 0]
            mag = abs(val)
            if mag > 0:
                Q[:, idx] *= np.conj(val) / mag
            d[start] = mag
    return P, d, Q


def _aligned_bases(M: np.ndarray, tl: np.ndarray, tr: np.ndarray,
                   strong: np.ndarray):
    """Left/right eigenbases of M's Hermitian products, column k matched to
    the k-th target pair (tl[:, k], tr[:, k]) for strong k.

    Strong targets claim the eigenvalue cluster with the largest projection;
    each claimed cluster is rotated so its leading directions coincide with
    the orthonormalized target projections.  Unclaimed directions are paired
    left-to-right through M itself and fill the weak mode indices in
    spectral order.
    """
    n = M.shape[0]
    sig, EL, ER = _eig_products(M)
    bounds = _cluster_bounds(sig)
    strong_ks = [k for k in range(n) if strong[k]]
    CL = EL.conj().T @ tl[:, strong_ks] if strong_ks else np.zeros((n, 0))
    CR = ER.conj().T @ tr[:, strong_ks] if strong_ks else np.zeros((n, 0))
    proj = np.zeros((len(bounds), len(strong_ks)))
    for ci, (a, b) in enumerate(bounds):
        proj[ci] = 0.5 * ((np.abs(CL[a:b]) ** 2).sum(axis=0)
                          + (np.abs(CR[a:b]) ** 2).sum(axis=0))
    members: dict[int, list[int]] = {ci: [] for ci in range(len(bounds))}
    for j, k in enumerate(strong_ks):
        order = np.argsort(proj[:, j])[::-1]
        best = int(order[0])
        gap = proj[best, j] - (proj[int(order[1]), j] if len(order) > 1 else 0.0)
        if gap < AMBIGUITY_TOL:
            raise PairingAmbiguityError(
                k, f"projections onto eigenvalue clusters {int(order[0])} and "
                   f"{int(order[1])} differ by only {gap:.3e}")
        members[best].append(j)

    outL = np.zeros((n, n), dtype=complex)
    outR = np.zeros((n, n), dtype=complex)
    weak_cols: list[tuple[np.ndarray, np.ndarray]] = []
    for ci, (a, b) in enumerate(bounds):
        D = b - a
        js = members[ci]
        if len(js) > D:
            raise PairingAmbiguityError(
                strong_ks[js[D]],
                f"{len(js)} modes map into a {D}-dimensional eigenvalue cluster")
        basL, basR = EL[:, a:b], ER[:, a:b]
        if js:
            uL, _, vLh = np.linalg.svd(CL[a:b][:, js], full_matrices=True)
            uR, _, vRh = np.linalg.svd(CR[a:b][:, js], full_matrices=True)
            d = len(js)
            frameL = basL @ (uL[:, :d] @ vLh)
            frameR = basR @ (uR[:, :d] @ vRh)
            for col, j in enumerate(js):
                outL[:, strong_ks[j]] = frameL[:, col]
                outR[:, strong_ks[j]] = frameR[:, col]
            restL = basL @ uL[:, d:]
            restR = basR @ uR[:, d:]
        else:
            restL, restR = basL, basR
        if restL.shape[1]:
            u, _, vh = np.linalg.svd(restL.conj().T @ M @ restR)
            restL = restL @ u
            restR = restR @ vh.conj().T
            for col in range(restL.shape[1]):
                weak_cols.append((restL[:, col], restR[:, col]))
    weak_ks = [k for k in range(n) if not strong[k]]
    for k, (cl, cr) in zip(weak_ks, weak_cols):
        outL[:, k] = cl
        outR[:, k] = cr
    return outL, outR


def _pivot_phases(cols: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(cols), axis=0)
    piv = cols[idx, np.arange(cols.shape[1])]
    mag = np.abs(piv)
    return np.where(mag > 0, piv / np.where(mag > 0, mag, 1.0), 1.0)


def _v_diag(tm: TransferMatrices, Pa, Qa, Px, Qx):
    """Projected diagonals of Va and Vx in the extracted mode bases."""
    if tm.kind is ProcessKind.FC:
        ea = np.einsum("ik,ij,jk->k", Pa.conj(), tm.Va, Qx)
        ex = np.einsum("ik,ij,jk->k", Px.conj(), tm.Vx, Qa)
    else:
        ea = np.einsum("ik,ij,jk->k", Pa.conj(), tm.Va, Qx.conj())
        ex = np.einsum("ik,ij,jk->k", Px.conj(), tm.Vx, Qa.conj())
    return ea, ex


def bloch_messiah(tm: TransferMatrices) -> ModeSpectrum:
    """Extract mode amplitudes r_k and the four mode families from a solve.

    r_k comes from the V-matrix singular values (arcsin for FC, arcsinh for
    PDC); output modes from the Ua Ua^H / Ux Ux^H eigenvectors and input
    modes from the transposed products, paired against the V singular
    vectors.  For FC a singular value above 1 + 1e-6 indicates an
    unconverged solve and raises instead of being clamped.
    """
    Wa, sa, Xha = np.linalg.svd(tm.Va)
    Wx, sx, Xhx = np.linalg.svd(tm.Vx)
    Xa = Xha.conj().T
    Xx = Xhx.conj().T
    strong = sa > max(PAIRING_FLOOR * (sa[0] if sa.size else 0.0), 1e-12)

    # Degenerate amplitudes leave the per-mode pairing across the four
    # families genuinely undetermined (each SVD picks its own basis of the
    # degenerate subspace); refuse rather than return an inconsistent set.
    for i in range(len(sa) - 1):
        if strong[i + 1] and sa[i] - sa[i + 1] < AMBIGUITY_TOL * sa[i]:
            raise PairingAmbiguityError(
                i, f"amplitudes {sa[i]:.9e} and {sa[i + 1]:.9e} of modes "
                   f"{i} and {i + 1} are degenerate")

    # The two SVDs may order nearly degenerate singular values differently;
    # re-pair the Vx triplets against the Va triplets through Ua, whose mode
    # expansion couples Va's left family to Vx's right family.
    tr_a_raw = Xx if tm.kind is ProcessKind.FC else Xx.conj()
    link = np.abs(Wa.conj().T @ tm.Ua @ tr_a_raw)
    perm = np.arange(len(sa))
    taken = np.zeros(len(sa), dtype=bool)
    for j in range(len(sa)):
        if not strong[j]:
            continue
        row = np.where(taken, -np.inf, link[j])
        best = int(np.argmax(row))
        row[best] = -np.inf
        second = int(np.argmax(row))
        gap = link[j, best] - max(link[j, second], 0.0)
        if gap < AMBIGUITY_TOL * max(link[j, best], 1.0):
            raise PairingAmbiguityError(
                j, f"cross-family link to columns {best} and {second} differs "
                   f"by only {gap:.3e}")
        perm[j] = best
        taken[best] = True
    rest = iter([c for c in range(len(sa)) if not taken[c]])
    for j in range(len(sa)):
        if not strong[j]:
            perm[j] = next(rest)
    Wx, sx, Xx = Wx[:, perm], sx[perm], Xx[:, perm]

    s = 0.5 * (sa + sx)
    # averaging the two spectra can disorder noise-level neighbours
    order = np.argsort(-s, kind="stable")
    if not np.array_equal(order, np.arange(len(s))):
        s, sa = s[order], sa[order]
        Wa, Xa = Wa[:, order], Xa[:, order]
        Wx, Xx = Wx[:, order], Xx[:, order]
        strong = strong[order]
    if tm.kind is ProcessKind.FC:
        if s.size and s[0] > 1 + 1e-6:
            raise ValueError(
                f"leading V singular value {s[0]:.8f} exceeds 1 by more than 1e-6; "
                "the transfer matrices are not canonical (unconverged solve?)")
        r = np.arcsin(np.clip(s, 0.0, 1.0))
    else:
        r = np.arcsinh(s)

    # targets in eigenvector convention: Ua-left ~ Va-left, Ux-left ~ Vx-left;
    # Ua-right ~ conj(psi), Ux-right ~ conj(phi) from the opposite V factors
    if tm.kind is ProcessKind.FC:
        tr_a, tr_x = Xx, Xa
    else:
        tr_a, tr_x = Xx.conj(), Xa.conj()
    Pa, Qa = _aligned_bases(tm.Ua, Wa, tr_a, strong)
    Px, Qx = _aligned_bases(tm.Ux, Wx, tr_x, strong)

    # Phase conventions, one rotation per family: psi pivots real positive,
    # then the Ua, Vx and Ux diagonals in turn; phase closure of a canonical
    # transformation makes the Va diagonal real positive automatically.
    def _unit(v):
        mag = np.abs(v)
        return np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0)

    Qa = Qa / _unit(_pivot_phases(Qa))[None, :]
    da = np.einsum("ik,ij,jk->k", Pa.conj(), tm.Ua, Qa)
    Pa = Pa * _unit(da)[None, :]
    if tm.kind is ProcessKind.FC:
        ex = np.einsum("ik,ij,jk->k", Px.conj(), tm.Vx, Qa)
    else:
        ex = np.einsum("ik,ij,jk->k", Px.conj(), tm.Vx, Qa.conj())
    Px = Px * _unit(ex)[None, :]
    dx = np.einsum("ik,ij,jk->k", Px.conj(), tm.Ux, Qx)
    Qx = Qx * np.conj(_unit(dx))[None, :]

    # cross-family consistency: within a block of nearly equal amplitudes the
    # modes may mix (resolution-limited, reported via symmetry_check), but
    # the block as a whole must reproduce its share of the V content; a
    # shortfall means a significant mode was paired to the wrong partner.
    qx_for_va = Qx if tm.kind is ProcessKind.FC else Qx.conj()
    qa_for_vx = Qa if tm.kind is ProcessKind.FC else Qa.conj()
    sig_idx = np.flatnonzero(strong & (s > 1e-2 * (s[0] if s.size else 0.0)))
    blk_start = 0
    for pos in range(1, len(sig_idx) + 1):
        if pos < len(sig_idx) and s[sig_idx[pos - 1]] - s[sig_idx[pos]] \
                < 2e-2 * s[sig_idx[pos - 1]]:
            continue
        blk = sig_idx[blk_start:pos]
        blk_a = np.linalg.norm(Pa[:, blk].conj().T @ tm.Va @ qx_for_va[:, blk])
        blk_x = np.linalg.norm(Px[:, blk].conj().T @ tm.Vx @ qa_for_vx[:, blk])
        want = float(np.linalg.norm(s[blk]))
        got = min(blk_a, blk_x)
        if got < 0.8 * want:
            raise PairingAmbiguityError(
                int(blk[0]),
                f"modes {list(blk)} reproduce only {got / want:.4f} of their "
                "V singular values; pairing failed")
        blk_start = pos

    root = np.sqrt(tm.grid.weight)
    return ModeSpectrum(kind=tm.kind, r=r,
                        in_modes_a=Qa.conj() / root,
                        in_modes_b=Qx.conj() / root,
                        out_modes_a=Pa.conj() / root,
                        out_modes_b=Px.conj() / root,
                        grid=tm.grid)


def _families_as_vectors(modes: ModeSpectrum):
    root = np.sqrt(modes.grid.weight)
    Pa = modes.out_modes_a.conj() * root
    Qa = modes.in_modes_a.conj() * root
    Px = modes.out_modes_b.conj() * root
    Qx = modes.in_modes_b.conj() * root
    return Pa, Qa, Px, Qx


def _rel_residual(M, left, diag, right):
    return float(np.linalg.norm(M - (left * diag[None, :]) @ right)
                 / max(np.linalg.norm(M), 1e-300))


def symmetry_check(tm: TransferMatrices, modes: ModeSpectrum,
                   n_report: int = 10) -> SymmetryReport:
    """Verify the normal-form structure of a solve against its mode spectrum.

    ``unitarity_dev_*``: per-family max |cos^2 + sin^2 - 1| (FC) or
    |cosh^2 - sinh^2 - 1| (PDC), pairing each U matrix's Schmidt values with
    the V singular values through the shared modes.

    ``expansion_residuals``: relative Frobenius error of each matrix rebuilt
    from its own stabilized eigen-product decomposition (the V matrices from
    their SVDs); this isolates the numerical quality of the decomposition
    machinery itself.

    ``shared_residuals``: the same reconstruction using the single shared
    mode set and the cos/sin (cosh/sinh) of the extracted r_k, whose floor
    is set by how accurately the solve satisfies the canonical conditions.
    """
    Pa, Qa, Px, Qx = _families_as_vectors(modes)
    da = np.einsum("ik,ij,jk->k", Pa.conj(), tm.Ua, Qa)
    dx = np.einsum("ik,ij,jk->k", Px.conj(), tm.Ux, Qx)
    ea, ex = _v_diag(tm, Pa, Qa, Px, Qx)

    if tm.kind is ProcessKind.FC:
        dev_a = float(np.max(np.abs(np.abs(da) ** 2 + np.abs(ea) ** 2 - 1)))
        dev_x = float(np.max(np.abs(np.abs(dx) ** 2 + np.abs(ex) ** 2 - 1)))
        cos_like, sin_like = np.cos(modes.r), np.sin(modes.r)
    else:
        dev_a = float(np.max(np.abs(np.abs(da) ** 2 - np.abs(ea) ** 2 - 1)))
        dev_x = float(np.max(np.abs(np.abs(dx) ** 2 - np.abs(ex) ** 2 - 1)))
        cos_like, sin_like = np.cosh(modes.r), np.sinh(modes.r)

    expansion = {}
    for name, M in (("Ua", tm.Ua), ("Ux", tm.Ux)):
        P, d, Q = _self_paired_svd(M)
        expansion[name] = _rel_residual(M, P, d.astype(complex), Q.conj().T)
    for name, M in (("Va", tm.Va), ("Vx", tm.Vx)):
        w, sv, xh = np.linalg.svd(M)
        expansion[name] = _rel_residual(M, w, sv.astype(complex), xh)

    right_va, right_vx = (Qx.conj().T, Qa.conj().T) if tm.kind is ProcessKind.FC \
        else (Qx.T, Qa.T)
    shared = {
        "Ua": _rel_residual(tm.Ua, Pa, cos_like.astype(complex), Qa.conj().T),
        "Ux": _rel_residual(tm.Ux, Px, cos_like.astype(complex), Qx.conj().T),
        "Va": _rel_residual(tm.Va, Pa, sin_like.astype(complex), right_va),
        "Vx": _rel_residual(tm.Vx, Px, sin_like.astype(complex), right_vx),
    }
    k = min(n_report, len(modes.r))
    dnu = modes.grid.weight
    ov_a = np.abs(modes.out_modes_a[:, :k].conj().T @ modes.in_modes_a[:, :k]) * dnu
    ov_b = np.abs(modes.out_modes_b[:, :k].conj().T @ modes.in_modes_b[:, :k]) * dnu
    return SymmetryReport(kind=tm.kind, unitarity_dev_a=dev_a, unitarity_dev_x=dev_x,
                          expansion_residuals=expansion, shared_residuals=shared,
                          overlap_in_out_a=ov_a, overlap_in_out_b=ov_b)
