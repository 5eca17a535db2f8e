"""Shared oracle helpers: independent routes to the quantities under test."""

import numpy as np

from phaseloss.channel import ChannelParams, apply_channel, build_kraus
from phaseloss.gaussian import fock_truncation, grid_channel_output, mix_modes
from phaseloss.linalg import hermitian_eig


def finite_diff_output(probe, phi, eta, n_max, which, delta=1e-5):
    """Central-difference derivative of the channel output (dense form)."""
    def dense_at(p, e):
        kraus = build_kraus(ChannelParams(p, e, n_max), probe.scenario)
        return apply_channel(probe, kraus).dense()

    if which == "phi":
        hi, lo = dense_at(phi + delta, eta), dense_at(phi - delta, eta)
    else:
        hi, lo = dense_at(phi, eta + delta), dense_at(phi, eta - delta)
    return (hi - lo) / (2.0 * delta)


def pure_state_phase_qfi(coeffs):
    """4 (<dpsi|dpsi> - |<psi|dpsi>|^2) for |psi> = sum c_n e^{i n phi} |n>."""
    n = np.arange(len(coeffs))
    p = np.abs(np.asarray(coeffs)) ** 2
    return 4.0 * (np.dot(n ** 2, p) - np.dot(n, p) ** 2)


def dense_qfi(rho, drho_phi, drho_eta, rank_tol=1e-12):
    """Eigenbasis information matrix of a dense state; the reference route.

    Returns (f, i_phieta) with i_phieta = (1/2) Tr(rho [L_eta, L_phi]).
    """
    es = hermitian_eig(rho)
    p, u = es.eigenvalues, es.eigenvectors
    den = p[:, None] + p[None, :]
    mask = den > rank_tol * max(p[0], 1e-300)

    def sld(drho):
        de = u.conj().T @ drho @ u
        out = np.zeros_like(de)
        out[mask] = 2.0 * de[mask] / den[mask]
        return out

    l_phi, l_eta = sld(drho_phi), sld(drho_eta)
    rho_e = np.diag(p).astype(complex)
    f = np.zeros((2, 2))
    f[0, 0] = np.trace(rho_e @ l_phi @ l_phi).real
    f[1, 1] = np.trace(rho_e @ l_eta @ l_eta).real
    t = np.trace(rho_e @ l_eta @ l_phi)
    f[0, 1] = f[1, 0] = t.real
    return f, 1j * t.imag


def fock_oracle_qfi(spec, params):
    """Number-basis route to the information matrix of a Gaussian probe.

    Builds the truncated amplitude grid, mixes in the input splitter, runs
    the sensing-mode channel densely and solves the SLDs in the eigenbasis.
    Completely independent of the covariance-matrix formulas.
    """
    grid = fock_truncation(spec)
    grid = mix_modes(grid, spec.tau_in)
    rho, dphi, deta = grid_channel_output(grid, params)
    return dense_qfi(rho, dphi, deta)


def grid_moments(grid):
    """Covariance matrix and displacement of a two-mode amplitude grid."""
    c1, c2 = grid.shape[0] - 1, grid.shape[1] - 1
    if c2 < 2:
        padded = np.zeros((c1 + 1, 3), dtype=complex)
        padded[:, :c2 + 1] = grid
        grid, c2 = padded, 2
    a1 = np.diag(np.sqrt(np.arange(1, c1 + 1)), k=1)
    a2 = np.diag(np.sqrt(np.arange(1, c2 + 1)), k=1)
    ops = [np.kron(a1, np.eye(c2 + 1)), np.kron(np.eye(c1 + 1), a2)]
    ops += [ops[0].conj().T, ops[1].conj().T]
    v = grid.reshape(-1)
    d = np.array([np.vdot(v, op @ v) for op in ops])
    sigma = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            anti = ops[i] @ ops[j].conj().T + ops[j].conj().T @ ops[i]
            sigma[i, j] = np.vdot(v, anti @ v) - 2.0 * d[i] * np.conj(d[j])
    return sigma, d


def random_two_mode_spec(rng, n_total_max=3.0, families=("single", "two")):
    """Random physical Gaussian probe spec with bounded energy (oracle-friendly)."""
    import math

    from phaseloss.gaussian import GaussianProbeSpec, ProbeFamily

    fam = ProbeFamily.SINGLE_MODE if rng.choice(families) == "single" else ProbeFamily.TWO_MODE
    n_r = float(rng.uniform(0.02, 0.35))
    n_a = float(rng.uniform(0.05, n_total_max - n_r))
    r = math.asinh(math.sqrt(n_r if fam is ProbeFamily.SINGLE_MODE else n_r / 2.0))
    theta1 = float(rng.uniform(0, 2 * np.pi))
    theta2 = float(rng.uniform(0, 2 * np.pi))
    chi = float(rng.choice([0.0, np.pi / 4, np.pi / 2])) if fam is ProbeFamily.TWO_MODE else 0.0
    theta = (theta1 + theta2 - np.pi) / 2.0
    tau_in = 1.0 if rng.random() < 0.6 else float(rng.uniform(0.5, 1.0))
    return GaussianProbeSpec(fam, alpha=math.sqrt(n_a), mu=float(rng.uniform(0, 2 * np.pi)),
                             r=r, theta=theta, theta1=theta1, theta2=theta2,
                             chi=chi, tau_in=tau_in)
