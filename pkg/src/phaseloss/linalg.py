"""Dense complex linear algebra primitives for Hermitian operators.

Everything here works on plain numpy arrays.  Density operators and their
derivatives are Hermitian by construction elsewhere; these routines enforce
Hermitian structure where it matters (eigendecomposition, the symmetric
logarithmic derivative equation) and stay agnostic otherwise (trace norm).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.linalg as npl

from .errors import InvalidInput

DEFAULT_RANK_TOL = 1e-12


def hermitianize(a: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (a + a†)/2."""
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class EigenSystem:
    """Spectral decomposition with eigenvalues sorted in descending order.

    ``eigenvectors[:, k]`` is the unit eigenvector for ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermitian_eig(h: np.ndarray) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise InvalidInput("matrix has non-finite entries")
    vals, vecs = npl.eigh(hermitianize(h))
    order = np.argsort(vals)[::-1]
    return EigenSystem(vals[order].copy(), vecs[:, order].copy())


def solve_sld(rho: np.ndarray, drho: np.ndarray,
              rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Solve dρ = (ρL + Lρ)/2 for the Hermitian operator L.

    Works in the eigenbasis of ρ: L_ij = 2 dρ_ij / (p_i + p_j) whenever
    p_i + p_j exceeds ``rank_tol`` relative to the largest eigenvalue;
    elements on the kernel-kernel block are set to zero (L is not unique
    there and the choice does not affect any information quantity).
    """
    rho = np.asarray(rho)
    drho = np.asarray(drho)
    if rho.shape != drho.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidInput("rho and drho must be square matrices of equal shape")
    es = hermitian_eig(rho)
    p = es.eigenvalues
    u = es.eigenvectors
    d_eig = u.conj().T @ drho @ u
    denom = p[:, None] + p[None, :]
    cut = rank_tol * max(p[0], np.finfo(float).tiny)
    mask = denom > cut
    l_eig = np.zeros_like(d_eig)
    l_eig[mask] = 2.0 * d_eig[mask] / denom[mask]
    return hermitianize(u @ l_eig @ u.conj().T)


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values of a (generally non-Hermitian) matrix."""
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    return float(np.sum(npl.svd(m, compute_uv=False)))
