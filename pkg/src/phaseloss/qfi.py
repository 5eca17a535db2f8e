"""Quantum Fisher information matrices and incompatibility quantifiers.

Parameter order is (phi, eta) everywhere; all 2x2 matrices use it.  The
SLD-commutator expectation reported as ``i_phieta`` is (1/2) Tr(rho [L_eta,
L_phi]); it is purely imaginary, and with this orientation number-state
probes alongside a lossless reference satisfy i_phieta = +i F_phiphi /
(2 eta).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import bounds as _bounds
from .channel import (BlockDensity, ChannelParams, FockProbe, Scenario,
                      apply_channel, apply_channel_derivatives, build_kraus)
from .errors import InvalidInput, InvalidState, SingularInformation
from .linalg import DEFAULT_RANK_TOL, hermitian_eig, solve_sld

_PSD_TOL = 1e-10
_TRACE_TOL = 1e-8
_BLOCK_FLOOR = 1e-30


@dataclass
class QfiReport:
    """2x2 information matrix plus derived scalar quantities.

    f          -- real symmetric QFI matrix, order (phi, eta)
    i_phieta   -- (1/2) Tr(rho [L_eta, L_phi]), purely imaginary
    w          -- weight matrix used for the scalar bounds (or None)
    c_s        -- Tr(W F^-1)
    c_h_bar    -- c_s plus the trace-norm incompatibility penalty
    """

    f: np.ndarray
    i_phieta: complex
    w: np.ndarray = None
    c_s: float = None
    c_h_bar: float = None


def _pure_block_slds(rho_b: np.ndarray, drho_b: np.ndarray, q: float) -> np.ndarray:
    """SLD of an unnormalized pure block: (2/q) drho - (tr drho / q^2) rho."""
    return (2.0 / q) * drho_b - (np.trace(drho_b).real / q ** 2) * rho_b


def _block_pairs(rho: BlockDensity, drho: BlockDensity):
    if rho.scenario is not drho.scenario or rho.n_max != drho.n_max:
        raise InvalidInput("density and derivative layouts disagree")
    return zip(rho.blocks, drho.blocks)


def qfi_matrix(rho: BlockDensity, drho_phi: BlockDensity, drho_eta: BlockDensity,
               rank_tol: float = DEFAULT_RANK_TOL, method: str = "auto") -> QfiReport:
    """QFI matrix and SLD-commutator expectation of a blockwise state.

    method "eigen" solves the SLD equation in the eigenbasis of every block;
    "analytic" uses the closed form valid for pure (rank-1) blocks, which is
    the default for the two-mode layout.  Both agree to solver precision.
    """
    if method == "auto":
        method = "analytic" if rho.scenario is Scenario.TWO else "eigen"
    if method == "analytic" and rho.scenario is Scenario.SINGLE:
        raise InvalidInput("analytic SLDs require pure blocks; single-mode output is mixed")
    if abs(rho.trace() - 1.0) > _TRACE_TOL:
        raise InvalidState(f"density trace {rho.trace()} is not 1")

    f = np.zeros((2, 2))
    i_pe = 0.0 + 0.0j
    for rho_b, dphi_b, deta_b in zip(rho.blocks, drho_phi.blocks, drho_eta.blocks):
        q = np.trace(rho_b).real
        if q < _BLOCK_FLOOR:
            continue
        if method == "analytic":
            purity = np.sum(np.abs(rho_b) ** 2)
            if abs(purity - q ** 2) > 1e-8 * max(q ** 2, 1e-30):
                raise InvalidState("analytic SLD path requires rank-1 blocks")
            l_phi = _pure_block_slds(rho_b, dphi_b, q)
            l_eta = _pure_block_slds(rho_b, deta_b, q)
        else:
            evals = hermitian_eig(rho_b).eigenvalues
            if evals[-1] < -_PSD_TOL:
                raise InvalidState(f"block has negative eigenvalue {evals[-1]}")
            l_phi = solve_sld(rho_b, dphi_b, rank_tol)
            l_eta = solve_sld(rho_b, deta_b, rank_tol)
        rl_phi = rho_b @ l_phi
        rl_eta = rho_b @ l_eta
        f[0, 0] += np.trace(rl_phi @ l_phi).real
        f[1, 1] += np.trace(rl_eta @ l_eta).real
        t = np.trace(rl_eta @ l_phi)
        f[0, 1] += t.real
        i_pe += 1j * t.imag
    f[1, 0] = f[0, 1]
    return QfiReport(f=f, i_phieta=i_pe)


def pure_block_report(psis, gamma_phis, gamma_etas) -> QfiReport:
    """QFI report from unnormalized pure block vectors and diagonal generators.

    Equivalent to qfi_matrix on the corresponding block densities, but linear
    in the block dimension; used by the see-saw optimizer at large cutoffs.
    """
    def apply_sld(psi, g, q):
        # L psi for L = (2/q)(g psi psi' + psi (g psi)') - (tr/q^2) psi psi'
        gpsi = g * psi
        overlap = np.vdot(psi, gpsi)
        return 2.0 * gpsi + (2.0 * np.conj(overlap) - 2.0 * overlap.real) / q * psi

    f = np.zeros((2, 2))
    i_pe = 0.0 + 0.0j
    for psi, g_phi, g_eta in zip(psis, gamma_phis, gamma_etas):
        q = float(np.vdot(psi, psi).real)
        if q < _BLOCK_FLOOR:
            continue
        lp = apply_sld(psi, g_phi, q)
        le = apply_sld(psi, g_eta, q)
        f[0, 0] += np.vdot(lp, lp).real
        f[1, 1] += np.vdot(le, le).real
        z = np.vdot(le, lp)
        f[0, 1] += z.real
        i_pe += 1j * z.imag
    f[1, 0] = f[0, 1]
    return QfiReport(f=f, i_phieta=i_pe)


def scalar_crb(f: np.ndarray, w: np.ndarray) -> float:
    """Weighted scalar bound Tr(W F^-1)."""
    f = np.asarray(f, dtype=float)
    evals, evecs = np.linalg.eigh(f)
    if evals.min() <= 0 or evals.max() / evals.min() > 1e12:
        raise SingularInformation(
            "information matrix is numerically singular",
            direction=evecs[:, int(np.argmin(np.abs(evals)))])
    return float(np.trace(np.asarray(w, dtype=float) @ np.linalg.inv(f)))


def _sqrtm_psd(w: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(np.asarray(w, dtype=float))
    if vals.min() < -1e-12:
        raise InvalidInput("weight matrix must be positive semidefinite")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def hcrb_upper(f: np.ndarray, i_phieta: complex, w: np.ndarray) -> float:
    """Upper bound on the attainable weighted cost: C_S plus a commutator penalty.

    The penalty is the largest singular value of sqrt(W) F^-1 I F^-1 sqrt(W)
    with the antisymmetric imaginary matrix I built from the SLD-commutator
    expectation; it vanishes exactly when i_phieta does, and never exceeds
    C_S, so C_S <= result <= 2 C_S.
    """
    c_s = scalar_crb(f, w)
    i_mat = np.array([[0.0, i_phieta], [-i_phieta, 0.0]], dtype=complex)
    f_inv = np.linalg.inv(np.asarray(f, dtype=float))
    w_half = _sqrtm_psd(w)
    sandwich = w_half @ f_inv @ i_mat @ f_inv @ w_half
    return c_s + float(np.linalg.norm(sandwich, 2))


def probe_quantifier(f: np.ndarray, fmax_phi: float, fmax_eta: float) -> float:
    """Average of the diagonal QFI entries rescaled by the channel optima."""
    if fmax_phi <= 0 or fmax_eta <= 0:
        raise InvalidInput("normalization constants must be positive")
    value = 0.5 * (f[0, 0] / fmax_phi + f[1, 1] / fmax_eta)
    if value > 1.0 + 1e-6:
        warnings.warn(f"normalized information sum {value} exceeds 1", RuntimeWarning)
    return float(value)


def meas_quantifiers(report: QfiReport) -> float:
    """Measurement-incompatibility ratio C_S / C_H_bar in (0, 1]."""
    if report.c_s is None or report.c_h_bar is None:
        raise InvalidInput("report lacks scalar bounds; use complete_report first")
    return float(report.c_s / report.c_h_bar)


def complete_report(report: QfiReport, w: np.ndarray) -> QfiReport:
    """Fill the weighted scalar bounds of a report in place and return it."""
    report.w = np.asarray(w, dtype=float)
    report.c_s = scalar_crb(report.f, report.w)
    report.c_h_bar = hcrb_upper(report.f, report.i_phieta, report.w)
    return report


def channel_report(probe: FockProbe, params: ChannelParams,
                   rank_tol: float = DEFAULT_RANK_TOL, method: str = "auto",
                   w: np.ndarray = None) -> QfiReport:
    """End-to-end report for a number-state probe through the channel.

    The default weight matrix is diag of the single-parameter channel optima
    at the probe's photon budget.
    """
    kraus = build_kraus(params, probe.scenario)
    rho = apply_channel(probe, kraus)
    dphi, deta = apply_channel_derivatives(probe, kraus)
    report = qfi_matrix(rho, dphi, deta, rank_tol=rank_tol, method=method)
    if w is None:
        lim = _bounds.fundamental_limits(probe.n_max, params.eta)
        w = np.diag([lim.f_phi_max_s12, lim.f_eta_max])
    try:
        complete_report(report, w)
    except SingularInformation:
        report.w = np.asarray(w, dtype=float)  # single-parameter-only probe
    return report
