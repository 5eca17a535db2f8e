"""Iterative see-saw maximization of the weighted information sum over probes.

One iteration alternates two exact maximizations: (i) for the current probe,
the optimal quadratic witnesses of each parameter are its SLDs; (ii) for
fixed witnesses, the optimal probe is the top eigenvector of the effective
operator M assembled from the Kraus stripes.  Both steps never decrease the
objective, so the trace of top eigenvalues is monotone.

Weights are the per-parameter normalizers; numpy.inf drops a parameter
(single-parameter optimization).  With the default weights the objective is
F_phiphi / F_phi_max + F_etaeta / F_eta_max, twice the normalized sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bounds as _bounds
from . import qfi as _qfi
from .channel import (ChannelParams, FockProbe, KrausFamily, Scenario,
                      apply_channel, apply_channel_derivatives, build_kraus)
from .errors import InvalidInput
from .linalg import DEFAULT_RANK_TOL, hermitianize, solve_sld

_EIG_DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class IssConfig:
    """Optimizer knobs; weights default to the channel optima per parameter."""

    weight_phi: float = None
    weight_eta: float = None
    max_iters: int = 500
    conv_window: int = 5
    conv_rel_tol: float = 1e-3
    restarts: int = 1
    seed: int = 0
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        if self.conv_window < 2 or self.conv_rel_tol <= 0:
            raise InvalidInput("need conv_window >= 2 and conv_rel_tol > 0")
        if self.max_iters < 1 or self.restarts < 1:
            raise InvalidInput("max_iters and restarts must be positive")


@dataclass
class IssResult:
    probe: FockProbe
    objective_trace: np.ndarray
    converged: bool
    final_qfi: "_qfi.QfiReport"
    iterations: int
    restart_objectives: list = field(default_factory=list)


def probe_statistics(probe: FockProbe):
    """Sensing-mode photon number mean and variance of the input probe."""
    p = np.abs(probe.coeffs) ** 2
    n = np.arange(len(p))
    mean = float(np.dot(n, p))
    return mean, float(np.dot(n ** 2, p) - mean ** 2)


def channel_slds(probe: FockProbe, kraus: KrausFamily,
                 rank_tol: float = DEFAULT_RANK_TOL):
    """SLD pair (L_phi, L_eta) of the channel output at the given probe.

    Returned dense for the single-mode layout and as block lists for the
    two-mode layout (analytic rank-1 form per block).
    """
    rho = apply_channel(probe, kraus)
    dphi, deta = apply_channel_derivatives(probe, kraus)
    if kraus.scenario is Scenario.SINGLE:
        return (solve_sld(rho.blocks[0], dphi.blocks[0], rank_tol),
                solve_sld(rho.blocks[0], deta.blocks[0], rank_tol))
    l_phi, l_eta = [], []
    for rho_b, dp_b, de_b in zip(rho.blocks, dphi.blocks, deta.blocks):
        q = np.trace(rho_b).real
        if q < 1e-300:
            l_phi.append(np.zeros_like(rho_b))
            l_eta.append(np.zeros_like(rho_b))
            continue
        l_phi.append(_qfi._pure_block_slds(rho_b, dp_b, q))
        l_eta.append(_qfi._pure_block_slds(rho_b, de_b, q))
    return l_phi, l_eta


def pre_qfi(probe: FockProbe, a, kraus: KrausFamily, which: str) -> float:
    """Quadratic information witness 2 Tr(drho A) - Tr(rho A^2).

    Maximized over Hermitian A exactly by the SLD of ``which`` ("phi" or
    "eta"), where it equals that parameter's QFI.  ``a`` is dense for the
    single-mode layout, a list of blocks for the two-mode one.
    """
    if which not in ("phi", "eta"):
        raise InvalidInput("which must be 'phi' or 'eta'")
    rho = apply_channel(probe, kraus)
    dphi, deta = apply_channel_derivatives(probe, kraus)
    drho = dphi if which == "phi" else deta
    blocks_a = [a] if kraus.scenario is Scenario.SINGLE else a
    total = 0.0
    for rho_b, drho_b, a_b in zip(rho.blocks, drho.blocks, blocks_a):
        total += 2.0 * np.trace(drho_b @ a_b).real
        total -= np.trace(rho_b @ a_b @ a_b).real
    return float(total)


def _resolve_weights(config: IssConfig, params: ChannelParams):
    lim = _bounds.fundamental_limits(params.n_max, params.eta)
    w_phi = config.weight_phi if config.weight_phi is not None else lim.f_phi_max_s12
    w_eta = config.weight_eta if config.weight_eta is not None else lim.f_eta_max
    if w_phi <= 0 or w_eta <= 0:
        raise InvalidInput("weights must be positive (numpy.inf drops a parameter)")
    return w_phi, w_eta


def build_m_matrix(probe: FockProbe, slds, kraus: KrausFamily, weights) -> np.ndarray:
    """Effective probe-update operator for fixed witnesses.

    M = sum_j (1/w_j) sum_m K_m' (2 G_jm' L_j + 2 L_j G_jm - L_j^2) K_m with
    the diagonal derivative generators G of the Kraus family; its Rayleigh
    quotient at the probe equals the weighted witness sum.
    """
    l_phi, l_eta = slds
    n_pts = kraus.n_max + 1
    m_mat = np.zeros((n_pts, n_pts), dtype=complex)
    for which, l_op, w in (("phi", l_phi, weights[0]), ("eta", l_eta, weights[1])):
        if math.isinf(w):
            continue
        if kraus.scenario is Scenario.SINGLE:
            l_sq = l_op @ l_op
            for m in range(n_pts):
                d = n_pts - m
                g = kraus.gamma_phi(m) if which == "phi" else kraus.gamma_eta(m)
                x = (2.0 * np.conj(g)[:, None] * l_op[:d, :d]
                     + 2.0 * l_op[:d, :d] * g[None, :]
                     - l_sq[:d, :d])
                s = kraus.stripes[m]
                m_mat[m:, m:] += (np.conj(s)[:, None] * x * s[None, :]) / w
        else:
            for m in range(n_pts):
                d = n_pts - m
                g = kraus.gamma_phi(m) if which == "phi" else kraus.gamma_eta(m)
                l_b = l_op[m]
                x = (2.0 * np.conj(g)[:, None] * l_b
                     + 2.0 * l_b * g[None, :]
                     - l_b @ l_b)
                s = kraus.stripes[m]
                m_mat[m:, m:] += (np.conj(s)[:, None] * x * s[None, :]) / w
    return hermitianize(m_mat)


def _fast_m_two_mode(coeffs: np.ndarray, kraus: KrausFamily, weights) -> np.ndarray:
    """M for the two-mode layout from pure-block vectors only (no dense SLDs)."""
    n_pts = kraus.n_max + 1
    m_mat = np.zeros((n_pts, n_pts), dtype=complex)
    # slot batching: stack lifted left/right vectors and multiply once per term
    lefts = [[] for _ in range(10)]
    rights = [[] for _ in range(10)]
    for which, w in (("phi", weights[0]), ("eta", weights[1])):
        if math.isinf(w):
            continue
        for m in range(n_pts):
            s = kraus.stripes[m]
            psi = s * coeffs[m:]
            q = float(np.vdot(psi, psi).real)
            if q < 1e-300:
                continue
            g = kraus.gamma_phi(m) if which == "phi" else kraus.gamma_eta(m)
            a = g * psi
            gbar = np.conj(g)
            b = gbar * a
            c = gbar * psi
            pa = complex(np.vdot(psi, a))       # <psi, a>
            t = 2.0 * pa.real
            norm_a = float(np.vdot(a, a).real)
            sb = np.conj(s)

            def lift(vec):
                out = np.zeros(n_pts, dtype=complex)
                out[m:] = sb * vec
                return out

            pairs = [
                (4.0 / q, b, psi), (4.0 / q, c, a), (-2.0 * t / q ** 2, c, psi),
                (4.0 / q, a, c), (4.0 / q, psi, b), (-2.0 * t / q ** 2, psi, c),
                (-4.0 / q, a, a),
                (-2.0 * (2.0 * pa - t) / q ** 2, a, psi),
                (-2.0 * (2.0 * np.conj(pa) - t) / q ** 2, psi, a),
                (-(4.0 * norm_a - t ** 2 / q) / q ** 2, psi, psi),
            ]
            for slot, (coef, u, v) in enumerate(pairs):
                lefts[slot].append((coef / w) * lift(u))
                rights[slot].append(lift(v))
    for slot in range(10):
        if lefts[slot]:
            lmat = np.array(lefts[slot]).T
            rmat = np.array(rights[slot]).T
            m_mat += lmat @ rmat.conj().T
    return hermitianize(m_mat)


def _top_eigvec(m_mat: np.ndarray, previous: np.ndarray):
    vals, vecs = np.linalg.eigh(m_mat)
    top = vals[-1]
    near = np.nonzero(vals >= top - _EIG_DEGENERACY_TOL * max(1.0, abs(top)))[0]
    if len(near) > 1 and previous is not None:
        overlaps = np.abs(vecs[:, near].conj().T @ previous)
        pick = near[int(np.argmax(overlaps))]
    else:
        pick = near[-1]
    return float(top), vecs[:, pick]


def _gauge_fixed(coeffs: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(coeffs)))
    phase = coeffs[k] / abs(coeffs[k])
    fixed = coeffs / phase
    fixed[k] = abs(fixed[k])
    return fixed / np.linalg.norm(fixed)


def optimize(config: IssConfig, params: ChannelParams, scenario: Scenario) -> IssResult:
    """Best probe over restarts; convergence when the trailing objective
    window is flat to the configured relative tolerance."""
    kraus = build_kraus(params, scenario)
    weights = _resolve_weights(config, params)
    n_pts = params.n_max + 1

    best = None
    restart_objectives = []
    for k in range(config.restarts):
        rng = np.random.default_rng(config.seed + k)
        coeffs = rng.standard_normal(n_pts) + 1j * rng.standard_normal(n_pts)
        coeffs /= np.linalg.norm(coeffs)
        trace = []
        converged = False
        for _ in range(config.max_iters):
            if scenario is Scenario.TWO:
                m_mat = _fast_m_two_mode(coeffs, kraus, weights)
            else:
                probe = FockProbe(scenario, coeffs)
                slds = channel_slds(probe, kraus, config.rank_tol)
                m_mat = build_m_matrix(probe, slds, kraus, weights)
            mu, coeffs = _top_eigvec(m_mat, coeffs)
            trace.append(mu)
            if len(trace) >= config.conv_window:
                window = trace[-config.conv_window:]
                if max(window) - min(window) <= config.conv_rel_tol * abs(window[-1]):
                    converged = True
                    break
        objective = trace[-1]
        restart_objectives.append(objective)
        if best is None or objective > best[0] + 1e-15:
            best = (objective, coeffs.copy(), np.array(trace), converged)

    _, coeffs, trace, converged = best
    probe = FockProbe(scenario, _gauge_fixed(coeffs))
    report = _qfi.channel_report(probe, params)
    return IssResult(probe=probe, objective_trace=trace, converged=converged,
                     final_qfi=report, iterations=len(trace),
                     restart_objectives=restart_objectives)
