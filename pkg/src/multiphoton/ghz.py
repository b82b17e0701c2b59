"""N-photon GHZ state model: outcome statistics, estimators and witness.

Models an N-photon polarization GHZ state through two scalar imperfection
parameters: the population P of the target |H...H>, |V...V> subspace and
the coherence C between those two components.  Provides the outcome
distributions in the computational (H/V) basis and in rotated equatorial
bases, count simulation, and the estimators that recover P, C and the
entanglement witness from measured counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, DataError
from .rng import derive_rng

__all__ = [
    "GhzModel",
    "BasisCounts",
    "WitnessResult",
    "hv_outcome_distribution",
    "theta_outcome_distribution",
    "simulate_counts",
    "simulate_ghz_experiment",
    "estimate_population",
    "estimate_coherence",
    "fidelity_and_witness",
]

MAX_PHOTONS = 20


@dataclass(frozen=True)
class GhzModel:
    """GHZ state parametrized by population and coherence.

    ``population`` is the total weight on the two target components
    |H...H> and |V...V>; ``coherence`` is the magnitude of the off-diagonal
    term between them (phase taken real and positive).  Physicality
    requires 0 <= coherence <= population <= 1.
    """

    n_photons: int
    population: float
    coherence: float

    def __post_init__(self):
        if not 2 <= self.n_photons <= MAX_PHOTONS:
            raise ContractError(
                f"n_photons must lie in [2, {MAX_PHOTONS}], got {self.n_photons}"
            )
        if not 0.0 <= self.population <= 1.0:
            raise ContractError(f"population must lie in [0, 1], got {self.population}")
        if not 0.0 <= self.coherence <= self.population:
            raise ContractError(
                f"coherence must lie in [0, population], got {self.coherence}"
            )


@dataclass(frozen=True)
class BasisCounts:
    """Measured outcome counts in one basis setting.

    Outcomes are bitstrings of length ``n_photons``; character k is '0'
    when photon k gave the +1 eigenvalue outcome (H in the computational
    basis) and '1' for the -1 outcome.  ``theta`` is the equatorial basis
    angle and is None for the computational basis.
    """

    basis: str
    n_photons: int
    counts: dict
    theta: float | None = None

    def __post_init__(self):
        if self.basis not in ("hv", "theta"):
            raise ContractError(f"basis must be 'hv' or 'theta', got {self.basis!r}")
        if self.basis == "theta" and self.theta is None:
            raise ContractError("theta basis counts need the setting angle")
        if self.basis == "hv" and self.theta is not None:
            raise ContractError("computational-basis counts carry no angle")
        for key, value in self.counts.items():
            if len(key) != self.n_photons or set(key) - {"0", "1"}:
                raise ContractError(f"outcome {key!r} is not a {self.n_photons}-bit string")
            if int(value) < 0:
                raise ContractError(f"count for {key!r} is negative")

    @property
    def total(self) -> int:
        return int(sum(self.counts.values()))


@dataclass(frozen=True)
class WitnessResult:
    """Fidelity estimate and the genuine-entanglement witness built on it."""

    fidelity: float
    sigma: float
    genuine: bool
    significance: float


def _bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def hv_outcome_distribution(model: GhzModel) -> np.ndarray:
    """Outcome probabilities in the computational basis, indexed 0..2^N-1.

    The population sits evenly on the two target outcomes (all photons H or
    all V); the remainder is distributed uniformly over the other 2^N - 2
    outcomes.
    """
    n = model.n_photons
    size = 1 << n
    probs = np.full(size, (1.0 - model.population) / (size - 2))
    probs[0] = probs[-1] = model.population / 2.0
    return probs


def theta_outcome_distribution(model: GhzModel, theta: float) -> np.ndarray:
    """Outcome probabilities when every photon is measured in the same
    equatorial basis at angle ``theta``.

    Only the coherence term survives the projection; outcome ``b`` has
    probability ``(1 + parity(b) * C * cos(N theta)) / 2^N`` with parity
    +1 (-1) for an even (odd) number of '1' outcomes.
    """
    n = model.n_photons
    size = 1 << n
    parity = 1.0 - 2.0 * (np.bitwise_count(np.arange(size)) & 1)
    probs = (1.0 + parity * model.coherence * math.cos(n * theta)) / size
    return probs


def coherence_settings(n_photons: int) -> np.ndarray:
    """The N equatorial angles theta_k = k*pi/N used to estimate coherence."""
    return np.arange(n_photons) * math.pi / n_photons


def simulate_counts(model: GhzModel, basis: str, shots: int, seed: int,
                    theta: float | None = None) -> BasisCounts:
    """Draw multinomial outcome counts for one basis setting.

    Deterministic given the seed; the RNG stream is keyed by the basis and,
    for equatorial settings, by the angle.
    """
    if shots < 1:
        raise ContractError("shots must be at least 1")
    if basis == "hv":
        probs = hv_outcome_distribution(model)
        label = "ghz-hv"
    elif basis == "theta":
        if theta is None:
            raise ContractError("theta basis needs the setting angle")
        probs = theta_outcome_distribution(model, theta)
        label = f"ghz-theta-{theta!r}"
    else:
        raise ContractError(f"basis must be 'hv' or 'theta', got {basis!r}")
    rng = derive_rng(seed, label)
    draws = rng.multinomial(shots, probs)
    counts = {
        _bitstring(i, model.n_photons): int(c) for i, c in enumerate(draws) if c > 0
    }
    return BasisCounts(basis, model.n_photons, counts, theta)


def simulate_ghz_experiment(model: GhzModel, shots: int, seed: int):
    """Simulate the full measurement set: one computational-basis run plus
    the N equatorial settings, with ``shots`` outcomes per setting.

    Returns ``(hv_counts, theta_counts_list)``.
    """
    hv = simulate_counts(model, "hv", shots, seed)
    thetas = [
        simulate_counts(model, "theta", shots, seed, theta=float(t))
        for t in coherence_settings(model.n_photons)
    ]
    return hv, thetas


def estimate_population(counts: BasisCounts):
    """Estimate the target-subspace population from computational-basis counts.

    Returns ``(p_hat, sigma)`` with the binomial standard error
    ``sqrt(p_hat (1 - p_hat) / total)``.
    """
    if counts.basis != "hv":
        raise ContractError("population is estimated from computational-basis counts")
    total = counts.total
    if total < 1:
        raise DataError("no counts recorded")
    n = counts.n_photons
    hits = counts.counts.get("0" * n, 0) + counts.counts.get("1" * n, 0)
    p_hat = hits / total
    sigma = math.sqrt(p_hat * (1.0 - p_hat) / total)
    return p_hat, sigma


def _parity_expectation(counts: BasisCounts):
    total = counts.total
    if total < 1:
        raise DataError("no counts recorded")
    acc = 0
    for key, value in counts.counts.items():
        sign = -1 if key.count("1") & 1 else 1
        acc += sign * value
    m_hat = acc / total
    variance = (1.0 - m_hat**2) / total
    return m_hat, variance


def estimate_coherence(settings: Sequence[BasisCounts]):
    """Estimate the coherence from the N equatorial-basis parity measurements.

    The settings must be exactly the N angles ``k*pi/N`` for k = 0..N-1, in
    order.  The estimator is ``(1/N) * sum_k (-1)^k <M_k>`` where ``<M_k>``
    is the measured parity expectation at angle ``theta_k``; its standard
    error combines the per-setting binomial variances.
    """
    if not settings:
        raise ContractError("need the full list of equatorial settings")
    n = settings[0].n_photons
    if len(settings) != n:
        raise ContractError(f"expected exactly {n} equatorial settings, got {len(settings)}")
    expected = coherence_settings(n)
    acc = 0.0
    var = 0.0
    for k, counts in enumerate(settings):
        if counts.basis != "theta":
            raise ContractError("coherence is estimated from equatorial-basis counts")
        if counts.n_photons != n:
            raise ContractError("settings disagree on the photon number")
        if not math.isclose(counts.theta, expected[k], rel_tol=0.0, abs_tol=1e-9):
            raise ContractError(
                f"setting {k} must be at angle {expected[k]!r}, got {counts.theta!r}"
            )
        m_hat, m_var = _parity_expectation(counts)
        sign = -1.0 if k & 1 else 1.0
        acc += sign * m_hat
        var += m_var
    c_hat = acc / n
    sigma = math.sqrt(var) / n
    return c_hat, sigma


def fidelity_and_witness(population: float, population_sigma: float,
                         coherence: float, coherence_sigma: float) -> WitnessResult:
    """Combine the two estimates into the GHZ fidelity and its witness.

    Fidelity is ``(P + C) / 2`` with standard error propagated in
    quadrature.  The state is certified genuinely multipartite entangled
    when the fidelity strictly exceeds 1/2; the significance is the margin
    in units of the standard error (infinite when the error is zero).
    """
    if population_sigma < 0 or coherence_sigma < 0:
        raise ContractError("standard errors must be non-negative")
    fidelity = 0.5 * (population + coherence)
    sigma = 0.5 * math.hypot(population_sigma, coherence_sigma)
    margin = fidelity - 0.5
    if sigma == 0.0:
        significance = math.inf if margin > 0 else -math.inf if margin < 0 else 0.0
    else:
        significance = margin / sigma
    return WitnessResult(fidelity, sigma, margin > 0, significance)
