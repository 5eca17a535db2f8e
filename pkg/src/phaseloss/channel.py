"""Phase-plus-loss channel on truncated photon-number spaces.

Two probe layouts are supported:

* ``Scenario.SINGLE`` - one lossy mode, probe sum_n c_n |n>, n = 0..N.
  The channel output is a single dense (N+1) x (N+1) density matrix.
* ``Scenario.TWO`` - lossy sensing mode plus an ideal reference mode,
  probe sum_n c_n |n>|N-n>.  Losing m photons moves the state into an
  orthogonal sector, so the output is block diagonal with blocks of
  dimension N-m+1 indexed by the number m of lost photons.

A Kraus operator for m lost photons acts on the coefficient vector as a
single diagonal stripe: row j of K_m picks coefficient n = j + m with
amplitude sqrt(binomial_loss_coeff(n, m, eta)) * exp(i n phi).  Parameter
derivatives are diagonal rescalings of the same stripe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import gammaln

from .errors import InvalidInput

_LOG_SPACE_THRESHOLD = 60


class Scenario(str, Enum):
    SINGLE = "single"
    TWO = "two"


@dataclass(frozen=True)
class ChannelParams:
    """Phase phi, transmissivity eta and photon cutoff n_max."""

    phi: float
    eta: float
    n_max: int

    def __post_init__(self):
        if not (0.0 < self.eta < 1.0):
            raise InvalidInput(f"eta must lie strictly inside (0, 1), got {self.eta}")
        if self.n_max < 1:
            raise InvalidInput("n_max must be a positive integer")
        if not np.isfinite(self.phi):
            raise InvalidInput("phi must be finite")


@dataclass(frozen=True)
class FockProbe:
    """Normalized coefficient vector c_0..c_N for either scenario."""

    scenario: Scenario
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        object.__setattr__(self, "coeffs", c)
        norm = np.sum(np.abs(c) ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise InvalidInput(f"probe coefficients not normalized: |c|^2 = {norm}")

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    @staticmethod
    def from_amplitudes(scenario: Scenario, amplitudes) -> "FockProbe":
        c = np.asarray(amplitudes, dtype=complex)
        nrm = np.linalg.norm(c)
        if nrm == 0.0 or not np.all(np.isfinite(c)):
            raise InvalidInput("amplitudes must be finite and not all zero")
        return FockProbe(scenario, c / nrm)

    @staticmethod
    def fock(scenario: Scenario, n: int, n_max: int) -> "FockProbe":
        """|n> (single mode) or |n>|N-n> (two mode)."""
        if not 0 <= n <= n_max:
            raise InvalidInput("need 0 <= n <= n_max")
        c = np.zeros(n_max + 1, dtype=complex)
        c[n] = 1.0
        return FockProbe(scenario, c)

    @staticmethod
    def random(scenario: Scenario, n_max: int, rng: np.random.Generator) -> "FockProbe":
        c = rng.standard_normal(n_max + 1) + 1j * rng.standard_normal(n_max + 1)
        return FockProbe.from_amplitudes(scenario, c)


def binomial_loss_coeff(n: int, m: int, eta: float) -> float:
    """Probability C(n, m) eta^(n-m) (1-eta)^m of losing m photons out of n."""
    if m < 0 or m > n:
        raise InvalidInput(f"need 0 <= m <= n, got n={n}, m={m}")
    if n > _LOG_SPACE_THRESHOLD:
        log_c = gammaln(n + 1) - gammaln(m + 1) - gammaln(n - m + 1)
        return float(np.exp(log_c + (n - m) * np.log(eta) + m * np.log1p(-eta)))
    return float(math.comb(n, m) * eta ** (n - m) * (1.0 - eta) ** m)


@dataclass(frozen=True)
class KrausFamily:
    """Kraus stripes for m = 0..N plus diagonal derivative generators.

    ``stripes[m][j]`` is the only nonzero entry in row j of K_m, located at
    column n = j + m.  ``k(m)``, ``dk_phi(m)`` and ``dk_eta(m)`` materialize
    dense matrices: (N+1) x (N+1) zero padded for the single-mode layout,
    (N-m+1) x (N+1) for the two-mode layout.
    """

    scenario: Scenario
    params: ChannelParams
    stripes: list = field(repr=False)

    @property
    def n_max(self) -> int:
        return self.params.n_max

    def photon_numbers(self, m: int) -> np.ndarray:
        """Input photon numbers n = m..N indexed by block row."""
        return np.arange(m, self.n_max + 1)

    def gamma_phi(self, m: int) -> np.ndarray:
        """Diagonal of the phase generator: i*n per block row."""
        return 1j * self.photon_numbers(m)

    def gamma_eta(self, m: int) -> np.ndarray:
        """Diagonal of the transmissivity generator: (n(1-eta)-m)/(2 eta (1-eta))."""
        eta = self.params.eta
        n = self.photon_numbers(m)
        return (n * (1.0 - eta) - m) / (2.0 * eta * (1.0 - eta))

    def _materialize(self, stripe: np.ndarray, m: int) -> np.ndarray:
        npts = self.n_max + 1
        d = npts - m
        rows = npts if self.scenario is Scenario.SINGLE else d
        k = np.zeros((rows, npts), dtype=complex)
        k[np.arange(d), np.arange(m, npts)] = stripe
        return k

    def k(self, m: int) -> np.ndarray:
        return self._materialize(self.stripes[m], m)

    def dk_phi(self, m: int) -> np.ndarray:
        return self._materialize(self.gamma_phi(m) * self.stripes[m], m)

    def dk_eta(self, m: int) -> np.ndarray:
        return self._materialize(self.gamma_eta(m) * self.stripes[m], m)


def build_kraus(params: ChannelParams, scenario: Scenario) -> KrausFamily:
    """Kraus family of the phase+loss channel at the given parameter point."""
    n_max = params.n_max
    phases = np.exp(1j * params.phi * np.arange(n_max + 1))
    stripes = []
    for m in range(n_max + 1):
        amp = np.array([binomial_loss_coeff(n, m, params.eta)
                        for n in range(m, n_max + 1)])
        stripes.append(np.sqrt(amp) * phases[m:])
    return KrausFamily(scenario, params, stripes)


@dataclass(frozen=True)
class BlockDensity:
    """Output (or output-derivative) operator stored blockwise.

    Single-mode layout keeps one dense (N+1) x (N+1) block; the two-mode
    layout keeps one block per lost-photon count m, of dimension N-m+1.
    """

    scenario: Scenario
    n_max: int
    blocks: list

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks))

    def purity(self) -> float:
        return float(sum(np.sum(np.abs(b) ** 2) for b in self.blocks))

    def dense(self) -> np.ndarray:
        """Direct sum of the blocks (identity embedding for single mode)."""
        if self.scenario is Scenario.SINGLE:
            return self.blocks[0].copy()
        dim = sum(b.shape[0] for b in self.blocks)
        out = np.zeros((dim, dim), dtype=complex)
        at = 0
        for b in self.blocks:
            d = b.shape[0]
            out[at:at + d, at:at + d] = b
            at += d
        return out


def _check_compatible(probe: FockProbe, kraus: KrausFamily):
    if probe.scenario is not kraus.scenario:
        raise InvalidInput("probe and Kraus family disagree on the scenario")
    if probe.n_max != kraus.n_max:
        raise InvalidInput("probe and Kraus family disagree on the photon cutoff")


def block_vectors(probe: FockProbe, kraus: KrausFamily) -> list:
    """Unnormalized post-loss vectors K_m c for m = 0..N."""
    _check_compatible(probe, kraus)
    c = probe.coeffs
    return [stripe * c[m:] for m, stripe in enumerate(kraus.stripes)]


def apply_channel(probe: FockProbe, kraus: KrausFamily) -> BlockDensity:
    """Channel output: dense matrix (single mode) or orthogonal blocks (two mode)."""
    vecs = block_vectors(probe, kraus)
    n_max = kraus.n_max
    if kraus.scenario is Scenario.TWO:
        blocks = [np.outer(v, v.conj()) for v in vecs]
        return BlockDensity(Scenario.TWO, n_max, blocks)
    rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    for v in vecs:
        d = len(v)
        rho[:d, :d] += np.outer(v, v.conj())
    return BlockDensity(Scenario.SINGLE, n_max, [rho])


def apply_channel_derivatives(probe: FockProbe, kraus: KrausFamily):
    """Parameter derivatives of the channel output, blockwise.

    Each block is (Gamma K) psi psi' K' + h.c. with the diagonal generators
    of the family, so per-block results stay rank <= 2.
    """
    vecs = block_vectors(probe, kraus)
    n_max = kraus.n_max

    def assemble(gammas):
        if kraus.scenario is Scenario.TWO:
            blocks = []
            for m, v in enumerate(vecs):
                gv = gammas(m) * v
                b = np.outer(gv, v.conj())
                blocks.append(b + b.conj().T)
            return BlockDensity(Scenario.TWO, n_max, blocks)
        out = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        for m, v in enumerate(vecs):
            d = len(v)
            gv = gammas(m) * v
            b = np.outer(gv, v.conj())
            out[:d, :d] += b + b.conj().T
        return BlockDensity(Scenario.SINGLE, n_max, [out])

    return assemble(kraus.gamma_phi), assemble(kraus.gamma_eta)


def beamsplitter_sector(total: int, tau: float, reflect_sign: float = -1.0) -> np.ndarray:
    """Beamsplitter unitary on the two-mode sector with ``total`` photons.

    Basis |k, total-k> for k = 0..total.  The transmitted amplitude is
    sqrt(tau) and the reflected one ``reflect_sign * i * sqrt(1-tau)``:
    the detection-side splitter uses -i, the preparation-side one +i.
    """
    if not (0.0 <= tau <= 1.0):
        raise InvalidInput("tau must lie in [0, 1]")
    if total == 0:
        return np.ones((1, 1), dtype=complex)
    theta = np.arccos(np.sqrt(tau))
    k = np.arange(total)
    coupling = np.sqrt((k + 1) * (total - k))
    gen = np.zeros((total + 1, total + 1), dtype=complex)
    gen[k + 1, k] = coupling
    gen[k, k + 1] = coupling
    vals, vecs = np.linalg.eigh(gen)
    return (vecs * np.exp(reflect_sign * 1j * theta * vals)) @ vecs.conj().T
