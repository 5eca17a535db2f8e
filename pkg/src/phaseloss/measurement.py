"""Photon counting and homodyne detection behind a tunable output beamsplitter.

Counting works on both Gaussian outputs and two-mode number-basis outputs;
the observables are the photon-number sum and difference of the two
detectors.  Homodyne works on Gaussian outputs only (the quadrature first
moments of a fixed-total-photon state vanish identically).  Estimation uses
first moments: the generalized error propagation inverts the observable
covariance against the parameter derivatives of the means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import BlockDensity, Scenario, beamsplitter_sector
from .errors import InvalidInput, Unsupported
from .gaussian import EvolvedGaussian, GaussianState, number_covariance

_COV_RANK_TOL = 1e-12


class SchemeKind(str, Enum):
    COUNTING = "counting"
    HOMODYNE = "homodyne"


@dataclass(frozen=True)
class DetectionScheme:
    kind: SchemeKind
    tau_out: float = 1.0
    xi: float = 0.0     # homodyne quadrature phase; ignored for counting

    def __post_init__(self):
        if not (0.0 <= self.tau_out <= 1.0):
            raise InvalidInput("tau_out must lie in [0, 1]")


@dataclass(frozen=True)
class MomentSet:
    """First moments of the two observables, their parameter derivatives
    with respect to (phi, eta), and the symmetrized 2x2 covariance."""

    means: np.ndarray
    dphi: np.ndarray
    deta: np.ndarray
    cov: np.ndarray


def _splitter_4x4(tau: float) -> np.ndarray:
    b2 = np.array([[math.sqrt(tau), -1j * math.sqrt(1.0 - tau)],
                   [-1j * math.sqrt(1.0 - tau), math.sqrt(tau)]])
    out = np.zeros((4, 4), dtype=complex)
    out[:2, :2] = b2
    out[2:, 2:] = b2.conj()
    return out


def output_transform(scheme: DetectionScheme, state):
    """Mix the output modes on the detection beamsplitter.

    Gaussian outputs (with or without derivatives) transform by the
    symplectic splitter matrix; two-mode number-basis blocks rotate inside
    their fixed-total-photon sectors.  The single-mode layout has no second
    mode to mix and passes through unchanged.
    """
    if isinstance(state, EvolvedGaussian):
        b4 = _splitter_4x4(scheme.tau_out)
        return EvolvedGaussian(
            sigma=b4 @ state.sigma @ b4.conj().T,
            d=b4 @ state.d,
            dsigma_phi=b4 @ state.dsigma_phi @ b4.conj().T,
            dsigma_eta=b4 @ state.dsigma_eta @ b4.conj().T,
            dd_phi=b4 @ state.dd_phi,
            dd_eta=b4 @ state.dd_eta,
        )
    if isinstance(state, GaussianState):
        b4 = _splitter_4x4(scheme.tau_out)
        return GaussianState(b4 @ state.sigma @ b4.conj().T, b4 @ state.d)
    if isinstance(state, BlockDensity):
        if state.scenario is Scenario.SINGLE:
            return state
        blocks = []
        for m, block in enumerate(state.blocks):
            total = state.n_max - m
            u_sec = beamsplitter_sector(total, scheme.tau_out)
            blocks.append(u_sec @ block @ u_sec.conj().T)
        return BlockDensity(Scenario.TWO, state.n_max, blocks)
    raise InvalidInput(f"cannot transform {type(state).__name__}")


def _gaussian_number_moments(ev: EvolvedGaussian) -> MomentSet:
    sig, d = ev.sigma, ev.d
    state = GaussianState(sig, d)
    means_n = np.array([(sig[k, k].real - 1.0) / 2.0 + abs(d[k]) ** 2 for k in (0, 1)])

    def dn(dsig, dd):
        return np.array([dsig[k, k].real / 2.0 + 2.0 * (np.conj(d[k]) * dd[k]).real
                         for k in (0, 1)])

    dn_phi = dn(ev.dsigma_phi, ev.dd_phi)
    dn_eta = dn(ev.dsigma_eta, ev.dd_eta)
    v11 = number_covariance(state, 0, 0)
    v22 = number_covariance(state, 1, 1)
    v12 = number_covariance(state, 0, 1)
    to_pm = np.array([[1.0, 1.0], [1.0, -1.0]])
    cov_n = np.array([[v11, v12], [v12, v22]])
    return MomentSet(
        means=to_pm @ means_n,
        dphi=to_pm @ dn_phi,
        deta=to_pm @ dn_eta,
        cov=to_pm @ cov_n @ to_pm.T,
    )


def _fock_number_moments(rho: BlockDensity, drho_phi: BlockDensity,
                         drho_eta: BlockDensity) -> MomentSet:
    """Sum/difference counting moments of a number-basis output.

    The observables are diagonal in every fixed-total-photon sector, so all
    moments reduce to diagonal sums over the (rotated) blocks.
    """
    acc = {"n1": 0.0, "n2": 0.0, "p1": 0.0, "p2": 0.0, "e1": 0.0, "e2": 0.0,
           "n1n1": 0.0, "n2n2": 0.0, "n1n2": 0.0}
    single = rho.scenario is Scenario.SINGLE
    for m, (rb, pb, eb) in enumerate(zip(rho.blocks, drho_phi.blocks, drho_eta.blocks)):
        dim = rb.shape[0]
        n1 = np.arange(dim, dtype=float)
        n2 = np.zeros(dim) if single else (rho.n_max - m) - n1
        pr = np.diag(rb).real
        pp = np.diag(pb).real
        pe = np.diag(eb).real
        acc["n1"] += float(n1 @ pr)
        acc["n2"] += float(n2 @ pr)
        acc["p1"] += float(n1 @ pp)
        acc["p2"] += float(n2 @ pp)
        acc["e1"] += float(n1 @ pe)
        acc["e2"] += float(n2 @ pe)
        acc["n1n1"] += float((n1 * n1) @ pr)
        acc["n2n2"] += float((n2 * n2) @ pr)
        acc["n1n2"] += float((n1 * n2) @ pr)
    v11 = acc["n1n1"] - acc["n1"] ** 2
    v22 = acc["n2n2"] - acc["n2"] ** 2
    v12 = acc["n1n2"] - acc["n1"] * acc["n2"]
    to_pm = np.array([[1.0, 1.0], [1.0, -1.0]])
    cov_n = np.array([[v11, v12], [v12, v22]])
    return MomentSet(
        means=to_pm @ np.array([acc["n1"], acc["n2"]]),
        dphi=to_pm @ np.array([acc["p1"], acc["p2"]]),
        deta=to_pm @ np.array([acc["e1"], acc["e2"]]),
        cov=to_pm @ cov_n @ to_pm.T,
    )


def counting_moments(state, scheme: DetectionScheme,
                     drho_phi: BlockDensity = None,
                     drho_eta: BlockDensity = None) -> MomentSet:
    """Photon-number sum/difference moments behind the output splitter.

    ``state`` is either an EvolvedGaussian or a BlockDensity; the latter
    needs the matching derivative densities, all of which are rotated by the
    detection splitter internally.
    """
    if isinstance(state, EvolvedGaussian):
        return _gaussian_number_moments(output_transform(scheme, state))
    if isinstance(state, BlockDensity):
        if drho_phi is None or drho_eta is None:
            raise InvalidInput("number-basis counting needs the derivative densities")
        rho_t = output_transform(scheme, state)
        dphi_t = output_transform(scheme, drho_phi)
        deta_t = output_transform(scheme, drho_eta)
        return _fock_number_moments(rho_t, dphi_t, deta_t)
    raise InvalidInput(f"cannot compute counting moments for {type(state).__name__}")


def homodyne_moments(state, scheme: DetectionScheme) -> MomentSet:
    """Quadrature moments X_j = exp(i xi) c_j' + h.c. behind the splitter.

    Defined for Gaussian outputs only; fixed-photon-number outputs carry no
    first-moment quadrature signal.
    """
    if isinstance(state, BlockDensity):
        raise Unsupported("homodyne readout is undefined for number-basis outputs")
    if not isinstance(state, EvolvedGaussian):
        raise InvalidInput(f"cannot compute homodyne moments for {type(state).__name__}")
    ev = output_transform(scheme, state)
    phase = np.exp(-1j * scheme.xi)
    sig = ev.sigma

    def mean_of(d):
        return np.array([2.0 * (phase * d[k]).real for k in (0, 1)])

    var = [sig[k, k].real + (phase ** 2 * sig[k, k + 2]).real for k in (0, 1)]
    cov12 = (phase ** 2 * sig[0, 3]).real + sig[0, 1].real
    return MomentSet(
        means=mean_of(ev.d),
        dphi=mean_of(ev.dd_phi),
        deta=mean_of(ev.dd_eta),
        cov=np.array([[var[0], cov12], [cov12, var[1]]]),
    )


def error_propagation(moments: MomentSet):
    """First-moment estimation variances (var_phi, var_eta).

    Inverts the observable covariance on its numerical support; observables
    with no noise and no signal drop out, and a parameter with no signal at
    all gets an infinite-variance sentinel.
    """
    vals, vecs = np.linalg.eigh(moments.cov)
    floor = _COV_RANK_TOL * max(vals.max(), 1.0)
    out = []
    for g in (moments.dphi, moments.deta):
        comps = vecs.T @ g
        info = 0.0
        for lam, comp in zip(vals, comps):
            if lam > floor:
                info += comp ** 2 / lam
            elif abs(comp) > math.sqrt(floor) * 1e3:
                info = math.inf     # noiseless observable with signal
                break
        out.append(1.0 / info if info > 0.0 else math.inf)
    return out[0], out[1]


def half_photon_counting(n_total: float, eta: float, p: float = 0.5,
                         q: float = 0.5, chi: float = 0.0, mu: float = 0.0,
                         phi_op: float = math.pi / 2.0):
    """Counting variances of the split strategy: half the energy in a
    phase-friendly sub-experiment read at tau_out = 1/2, half in a
    loss-friendly one read at tau_out = 1.

    Each sub-experiment carries n_total/2 photons and serves one parameter
    only, so its variance is doubled in the cost accounting.  Returns
    (var_phi, var_eta).
    """
    from .gaussian import (EnergySplit, ProbeFamily, evolve_with_derivatives,
                           make_probe, spec_from_split)

    split = EnergySplit(n_total / 2.0, p=p, q=q)
    tau_in = split.tau_in()    # counting needs some reference light in both arms
    out = []
    for theta1, tau_out, pick in ((mu * 2 + math.pi, 0.5, 0), (mu * 2, 1.0, 1)):
        theta = (theta1 + mu * 2 - math.pi) / 2.0
        spec = spec_from_split(ProbeFamily.TWO_MODE, split, mu=mu, theta=theta,
                               theta1=theta1, theta2=mu * 2, chi=chi, tau_in=tau_in)
        ev = evolve_with_derivatives(make_probe(spec),
                                     _channel_params(phi_op, eta), tau_in)
        moments = counting_moments(ev, DetectionScheme(SchemeKind.COUNTING,
                                                       tau_out=tau_out))
        out.append(2.0 * error_propagation(moments)[pick])
    return out[0], out[1]


def _channel_params(phi, eta):
    from .channel import ChannelParams
    return ChannelParams(phi, eta, 1)


def scheme_incompatibility(var_phi: float, var_eta: float, c_s: float, limits) -> float:
    """Excess of the scheme's weighted cost over the state's quantum bound.

    1 - C_S / (F_phi_max var_phi + F_eta_max var_eta): zero when the scheme
    saturates the bound, approaching one as either variance blows up.
    """
    cost = limits.f_phi_max_s12 * var_phi + limits.f_eta_max * var_eta
    if math.isinf(cost):
        return 1.0
    return 1.0 - c_s / cost
