"""Multiphoton interference sampling and the scattershot acquisition loop.

Builds exact output distributions for indistinguishable photons (permanent
of the transition submatrix) and for the distinguishable-photon reference
model, draws output samples, and simulates the full scattershot pipeline:
every pulse each source may fire, heralded inputs select a random input
pattern, and events are retained when exactly ``n_select`` heralds and
``n_select`` detected output photons coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractError, DataError, ResourceLimitError
from .linalg import (
    as_complex_matrix,
    as_occupation,
    check_unitary,
    count_patterns,
    enumerate_patterns,
    occupation_from_string,
    occupation_to_string,
    photon_count,
)
from .rng import derive_rng
from .sources import SourceParams, _draw_fire

__all__ = [
    "OutcomeDistribution",
    "SampleRecord",
    "RateReport",
    "ScattershotResult",
    "exact_distribution",
    "distinguishable_distribution",
    "sample_outputs",
    "expected_rate",
    "scattershot_run",
    "write_sample_log",
    "read_sample_log",
]

MAX_EXACT_PHOTONS = 6
MAX_ENUMERATION = 1_000_000

# Pulses are processed in fixed-size batches with one RNG stream per batch,
# so results do not depend on how a run is split up.
_BATCH = 1 << 16


@dataclass
class OutcomeDistribution:
    """Probability distribution over output occupation patterns.

    ``outcomes[i]`` is an occupation tuple with probability
    ``probabilities[i]``; the probabilities are non-negative and sum to 1
    within 1e-9.
    """

    outcomes: tuple
    probabilities: np.ndarray
    _index: dict = field(init=False, repr=False)
    _cumulative: np.ndarray | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self.outcomes = tuple(tuple(int(x) for x in o) for o in self.outcomes)
        probs = np.asarray(self.probabilities, dtype=float)
        if probs.ndim != 1 or len(self.outcomes) != probs.size:
            raise ContractError("outcomes and probabilities must align")
        if probs.size == 0:
            raise ContractError("distribution must have at least one outcome")
        if probs.min() < -1e-12:
            raise ContractError(f"negative probability {probs.min()}")
        probs = np.clip(probs, 0.0, None)
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise ContractError(f"probabilities sum to {total}, expected 1")
        self.probabilities = probs
        self._index = {o: i for i, o in enumerate(self.outcomes)}
        if len(self._index) != len(self.outcomes):
            raise ContractError("duplicate outcome pattern")

    def prob(self, pattern) -> float:
        """Probability of one pattern; 0.0 when outside the support set."""
        key = tuple(int(x) for x in pattern)
        i = self._index.get(key)
        return float(self.probabilities[i]) if i is not None else 0.0

    def cumulative(self) -> np.ndarray:
        if self._cumulative is None:
            cum = np.cumsum(self.probabilities)
            cum[-1] = 1.0
            self._cumulative = cum
        return self._cumulative


def _guard_enumeration(modes: int, photons: int, collisions: bool, caller: str) -> None:
    if photons < 1:
        raise ContractError(f"{caller} needs at least one photon in the input")
    if photons > MAX_EXACT_PHOTONS:
        raise ResourceLimitError(
            f"{caller} handles at most {MAX_EXACT_PHOTONS} photons, got {photons}; "
            "use sampled estimates for larger systems"
        )
    size = count_patterns(modes, photons, collisions)
    if size > MAX_ENUMERATION:
        raise ResourceLimitError(
            f"enumerating {size} output patterns exceeds the {MAX_ENUMERATION} limit; "
            "use sampled estimates instead"
        )


def _occupation_factorial(pattern) -> float:
    out = 1.0
    for x in pattern:
        out *= math.factorial(x)
    return out


# Outcome chunk size for the batched permanent evaluation; bounds the
# (2^n - 1, chunk, n) intermediate to a few tens of MB at n = 6.
_OUTCOME_CHUNK = 4096


def _all_output_permanents(rows: np.ndarray, outcomes) -> np.ndarray:
    """Permanents of the transition submatrix for one input against every output.

    ``rows`` holds the input-selected rows of the interferometer (one row
    per photon, repeats included), shape (n, m).  For each output pattern T
    the submatrix permanent equals ``sum_R (-1)^(n-|R|) prod_{j in T} v_R[j]``
    over non-empty photon subsets R, where ``v_R`` is the subset row sum;
    the ``v_R`` vectors are shared across outputs, which is what makes the
    full distribution cheap compared with one Ryser evaluation per output.
    """
    n = rows.shape[0]
    ranks = np.arange(1, 1 << n)
    membership = ((ranks[:, None] >> np.arange(n)) & 1).astype(float)
    v = membership @ rows
    weights = np.where((n - np.bitwise_count(ranks)) & 1, -1.0, 1.0)
    col_idx = np.empty((len(outcomes), n), dtype=np.intp)
    for i, t in enumerate(outcomes):
        col_idx[i] = np.repeat(np.arange(len(t)), t)
    perms = np.empty(len(outcomes), dtype=v.dtype)
    for start in range(0, len(outcomes), _OUTCOME_CHUNK):
        block = col_idx[start : start + _OUTCOME_CHUNK]
        prods = v[:, block].prod(axis=2)
        perms[start : start + block.shape[0]] = weights @ prods
    return perms


def exact_distribution(unitary, input_pattern, collisions: bool = True) -> OutcomeDistribution:
    """Exact output distribution for indistinguishable photons.

    The probability of output pattern T given input S on interferometer U is
    ``|perm(U_{S,T})|^2 / (prod_i s_i! * prod_j t_j!)`` with the transition
    submatrix built by repeating rows per input and columns per output
    occupation.  With ``collisions=False`` the distribution is restricted to
    single-photon-per-mode outputs and renormalized.

    Raises
    ------
    ContractError
        If the matrix is not unitary or the input holds no photons.
    ResourceLimitError
        If the photon number or the output-pattern count exceeds the
        exact-enumeration limits.
    """
    u = as_complex_matrix(unitary)
    check_unitary(u)
    modes = u.shape[0]
    occ = as_occupation(input_pattern, modes)
    n = photon_count(occ)
    _guard_enumeration(modes, n, collisions, "exact_distribution")
    outcomes = enumerate_patterns(modes, n, collisions)
    input_factor = _occupation_factorial(occ)
    rows = u[np.repeat(np.arange(modes), occ), :]
    amps = _all_output_permanents(rows, outcomes)
    output_factors = np.array([_occupation_factorial(t) for t in outcomes])
    probs = (amps.real**2 + amps.imag**2) / (input_factor * output_factors)
    if not collisions:
        total = probs.sum()
        if total <= 0:
            raise ContractError("no probability mass on collision-free outputs")
        probs /= total
    return OutcomeDistribution(tuple(outcomes), probs)


def distinguishable_distribution(unitary, input_pattern,
                                 collisions: bool = True) -> OutcomeDistribution:
    """Output distribution when the photons are fully distinguishable.

    Each photon routes independently with the classical transfer matrix
    ``M = |U|^2``; output pattern T has probability
    ``perm(M_{S,T}) / prod_j t_j!``.
    """
    u = as_complex_matrix(unitary)
    check_unitary(u)
    modes = u.shape[0]
    occ = as_occupation(input_pattern, modes)
    n = photon_count(occ)
    _guard_enumeration(modes, n, collisions, "distinguishable_distribution")
    # re^2 + im^2 rather than abs()**2: keeps the n=1 case bit-identical
    # to the interfering route, where these coincide by definition.
    transfer = u.real**2 + u.imag**2
    outcomes = enumerate_patterns(modes, n, collisions)
    rows = transfer[np.repeat(np.arange(modes), occ), :]
    perms = _all_output_permanents(rows, outcomes).real
    output_factors = np.array([_occupation_factorial(t) for t in outcomes])
    probs = np.clip(perms, 0.0, None) / output_factors
    if not collisions:
        total = probs.sum()
        if total <= 0:
            raise ContractError("no probability mass on collision-free outputs")
        probs /= total
    return OutcomeDistribution(tuple(outcomes), probs)


def sample_outputs(distribution: OutcomeDistribution, shots: int, seed: int) -> list:
    """Draw output patterns from a distribution, deterministically per seed."""
    if shots < 1:
        raise ContractError("shots must be at least 1")
    rng = derive_rng(seed, "sample-outputs")
    cum = distribution.cumulative()
    picks = np.searchsorted(cum, rng.random(shots), side="right")
    picks = np.minimum(picks, len(cum) - 1)
    return [distribution.outcomes[i] for i in picks]


@dataclass(frozen=True)
class SampleRecord:
    """One retained scattershot event.

    ``trigger`` is the herald click pattern over the sources, ``input`` the
    occupation of signal photons entering the interferometer, ``output``
    the detected occupation at the outputs, and ``pulse_index`` the pulse
    that produced the event.
    """

    trigger: tuple
    input: tuple
    output: tuple
    pulse_index: int


@dataclass(frozen=True)
class RateReport:
    """Measured versus predicted retention rate of a scattershot run."""

    n: int
    retained_events: int
    pulses: int
    rate_hz: float
    predicted_rate_hz: float


@dataclass(frozen=True)
class ScattershotResult:
    """Retained event records plus the summary rate report."""

    records: list
    report: RateReport


def _exactly_n_probability(probs: np.ndarray, n: int) -> float:
    # Poisson-binomial mass at exactly n successes, by direct convolution.
    # Reduces to C(k, n) p^n (1-p)^(k-n) when all probabilities are equal.
    coeff = np.zeros(n + 1)
    coeff[0] = 1.0
    for p in probs:
        upper = coeff[1:] * (1.0 - p) + coeff[:-1] * p
        coeff[0] *= 1.0 - p
        coeff[1:] = upper
    return float(coeff[n])


def _common_rep_rate(params: Sequence[SourceParams]) -> float:
    rates = {p.rep_rate for p in params}
    if len(rates) != 1:
        raise ContractError("sources must share one repetition rate")
    return rates.pop()


def expected_rate(k: int, n: int, eps: float, eta: float, rep_rate: float = 80e6,
                  scattershot: bool = True) -> float:
    """Closed-form n-fold event rate in Hz.

    ``eps * eta`` is the per-pulse probability that one source delivers a
    useful (heralded and detected) photon.  A standard run with n dedicated
    sources yields ``rep_rate * (eps*eta)^n``; a scattershot run over k
    sources accepts any n of them firing, giving
    ``rep_rate * C(k, n) * (eps*eta)^n * (1 - eps*eta)^(k-n)``.
    """
    if n < 0 or k < 1:
        raise ContractError("need k >= 1 sources and n >= 0")
    if n > k:
        raise ContractError(f"n must not exceed k, got n={n}, k={k}")
    if not 0.0 <= eps <= 1.0 or not 0.0 <= eta <= 1.0:
        raise ContractError("eps and eta must lie in [0, 1]")
    if rep_rate <= 0:
        raise ContractError("rep_rate must be positive")
    p = eps * eta
    if not scattershot:
        return rep_rate * p**n
    return rep_rate * math.comb(k, n) * p**n * (1.0 - p) ** (k - n)


def _predicted_run_rate(params: Sequence[SourceParams], n_select: int) -> float:
    # Per-source useful probability eps * (eta_herald * eta_detect)^2; for
    # identical sources this equals the closed-form expected_rate.
    probs = np.array([p.epsilon * p.lumped_efficiency for p in params])
    return _common_rep_rate(params) * _exactly_n_probability(probs, n_select)


def scattershot_run(unitary, params: Sequence[SourceParams], pulses: int,
                    n_select: int, seed: int) -> ScattershotResult:
    """Simulate a scattershot acquisition run.

    Every pulse each of the k sources fires independently; the herald
    clicks form the trigger pattern and the surviving signal photons enter
    the interferometer (source i feeds input mode i, so k must equal the
    mode count).  Output photons are sampled from the exact interference
    distribution of the realized input and thinned by the output detector
    efficiencies.  A pulse is retained when exactly ``n_select`` heralds
    fired and exactly ``n_select`` output photons were detected.

    Deterministic given the seed, independently of batch processing order.
    """
    u = as_complex_matrix(unitary)
    check_unitary(u)
    modes = u.shape[0]
    if len(params) != modes:
        raise ContractError(
            f"one source per input mode required: {len(params)} sources, {modes} modes"
        )
    if not 1 <= n_select <= modes:
        raise ContractError(f"n_select must lie in [1, {modes}], got {n_select}")
    if n_select > MAX_EXACT_PHOTONS:
        raise ResourceLimitError(
            f"scattershot sampling draws from exact distributions, limited to "
            f"{MAX_EXACT_PHOTONS} photons; got {n_select}"
        )
    if pulses < 1:
        raise ContractError("pulse count must be at least 1")
    rep = _common_rep_rate(params)
    eps = np.array([p.epsilon for p in params])
    herald_prob = np.array([p.eta_herald * p.eta_detect for p in params])
    signal_prob = np.array([p.eta_herald for p in params])
    detect_prob = np.array([p.eta_detect for p in params])
    perfect_detectors = bool(np.all(detect_prob == 1.0))

    dist_cache: dict = {}
    records: list = []
    for batch_index, start in enumerate(range(0, pulses, _BATCH)):
        size = min(_BATCH, pulses - start)
        rng = derive_rng(seed, "scattershot", batch_index)
        fire = _draw_fire(rng, eps, herald_prob, signal_prob, size)
        triggers = fire.heralded
        inputs = fire.heralded & fire.signal_present
        # Retention needs n_select heralds and n_select detected outputs;
        # the latter is impossible unless all heralded signals survived.
        candidates = np.flatnonzero(
            (triggers.sum(axis=1) == n_select) & (inputs.sum(axis=1) == n_select)
        )
        if candidates.size == 0:
            continue
        draws = rng.random(candidates.size)
        for u_draw, row in zip(draws, candidates):
            key = tuple(np.flatnonzero(inputs[row]))
            cached = dist_cache.get(key)
            if cached is None:
                occ = np.zeros(modes, dtype=int)
                occ[list(key)] = 1
                dist = exact_distribution(u, occ)
                cached = (dist.outcomes, dist.cumulative())
                dist_cache[key] = cached
            outcomes, cum = cached
            output = outcomes[min(np.searchsorted(cum, u_draw, side="right"), len(cum) - 1)]
            if perfect_detectors:
                detected = output
            else:
                detected = tuple(int(x) for x in rng.binomial(output, detect_prob))
                if sum(detected) != n_select:
                    continue
            records.append(
                SampleRecord(
                    trigger=tuple(int(x) for x in triggers[row]),
                    input=tuple(int(x) for x in inputs[row]),
                    output=detected,
                    pulse_index=start + int(row),
                )
            )
    rate = rep * len(records) / pulses
    report = RateReport(
        n=n_select,
        retained_events=len(records),
        pulses=pulses,
        rate_hz=rate,
        predicted_rate_hz=_predicted_run_rate(params, n_select),
    )
    return ScattershotResult(records=records, report=report)


_LOG_COLUMNS = "pulse_index,trigger_pattern,input_pattern,output_pattern"


def write_sample_log(path, records: Sequence[SampleRecord], header_lines=()) -> None:
    """Write retained events as CSV with compact occupation strings.

    Lines starting with '#' carry run metadata; the column row follows.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(_LOG_COLUMNS + "\n")
        for rec in records:
            fh.write(
                f"{rec.pulse_index},{occupation_to_string(rec.trigger)},"
                f"{occupation_to_string(rec.input)},{occupation_to_string(rec.output)}\n"
            )


def read_sample_log(path) -> list:
    """Read a sample log back into records, skipping '#' metadata lines."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header_seen = False
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != _LOG_COLUMNS:
                    raise DataError(
                        f"line {line_no}: expected column header {_LOG_COLUMNS!r}"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DataError(f"line {line_no}: expected 4 fields, got {len(parts)}")
            try:
                records.append(
                    SampleRecord(
                        trigger=occupation_from_string(parts[1]),
                        input=occupation_from_string(parts[2]),
                        output=occupation_from_string(parts[3]),
                        pulse_index=int(parts[0]),
                    )
                )
            except (ValueError, ContractError) as exc:
                raise DataError(f"line {line_no}: {exc}") from exc
    if not header_seen:
        raise DataError("sample log has no column header")
    return records
