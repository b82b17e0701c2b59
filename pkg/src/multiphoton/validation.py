"""Statistical comparison of sample streams against theory distributions.

Implements the Bhattacharyya similarity S = sum(sqrt(p_i q_i)), the total
variation distance D = (1/2) sum|p_i - q_i|, a cumulative log
likelihood-ratio test between the indistinguishable and distinguishable
photon hypotheses, and the per-trigger-group aggregation used to validate
scattershot runs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ContractError, DataError
from .linalg import as_complex_matrix, check_unitary, is_no_collision
from .sampling import (
    OutcomeDistribution,
    SampleRecord,
    distinguishable_distribution,
    exact_distribution,
)

__all__ = [
    "ValidationReport",
    "GroupValidation",
    "AggregateValidationReport",
    "empirical_distribution",
    "similarity",
    "tv_distance",
    "likelihood_ratio_test",
    "scattershot_aggregate_validation",
]

VERDICTS = ("indistinguishable", "distinguishable", "inconclusive")

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of comparing a sample stream against the two hypotheses.

    ``similarity`` and ``distance`` compare the empirical distribution with
    the indistinguishable-hypothesis model; ``lr_trajectory`` holds the
    cumulative log likelihood ratio after each consumed sample.
    """

    similarity: float
    distance: float
    lr_trajectory: np.ndarray
    verdict: str
    samples_used: int

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ContractError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        if len(self.lr_trajectory) != self.samples_used:
            raise ContractError("trajectory length must equal samples_used")


@dataclass(frozen=True)
class GroupValidation:
    """Similarity and distance of one trigger group against its exact model."""

    trigger: tuple
    samples: int
    similarity: float
    distance: float


@dataclass(frozen=True)
class AggregateValidationReport:
    """Per-trigger-group statistics plus the pooled report.

    ``mean_similarity`` and ``mean_distance`` average the per-group values;
    the spreads are sample standard deviations across groups.  ``pooled``
    carries the joint similarity/distance over all (trigger, output) pairs
    and the pooled likelihood-ratio verdict.
    """

    groups: tuple
    mean_similarity: float
    similarity_std: float
    mean_distance: float
    distance_std: float
    pooled: ValidationReport

    @property
    def group_count(self) -> int:
        return len(self.groups)


def _as_prob_map(dist) -> dict:
    if isinstance(dist, OutcomeDistribution):
        return dict(zip(dist.outcomes, (float(p) for p in dist.probabilities)))
    if isinstance(dist, Mapping):
        return {key: float(value) for key, value in dist.items()}
    raise ContractError(f"expected a distribution or mapping, got {type(dist).__name__}")


def _check_common_support(p: dict, q: dict) -> None:
    if set(p) != set(q):
        raise ContractError("distributions are over different outcome sets")
    for name, dist in (("first", p), ("second", q)):
        total = math.fsum(dist.values())
        if abs(total - 1.0) > _NORM_TOL:
            raise ContractError(f"{name} distribution sums to {total}, expected 1")
        if min(dist.values(), default=0.0) < 0:
            raise ContractError(f"{name} distribution has a negative entry")


def similarity(p, q) -> float:
    """Bhattacharyya similarity S = sum(sqrt(p_i q_i)) over a common support.

    Equals 1 exactly when the distributions coincide and 0 when their
    supports are disjoint.
    """
    pm, qm = _as_prob_map(p), _as_prob_map(q)
    _check_common_support(pm, qm)
    return math.fsum(math.sqrt(pm[k] * qm[k]) for k in pm)


def tv_distance(p, q) -> float:
    """Total variation distance D = (1/2) sum|p_i - q_i| over a common support."""
    pm, qm = _as_prob_map(p), _as_prob_map(q)
    _check_common_support(pm, qm)
    return 0.5 * math.fsum(abs(pm[k] - qm[k]) for k in pm)


def empirical_distribution(patterns, support) -> dict:
    """Plug-in frequency distribution over a fixed outcome support.

    ``support`` is an OutcomeDistribution or an iterable of patterns; every
    sample must fall inside it (no smoothing is applied, unseen outcomes
    keep frequency zero).
    """
    if isinstance(support, OutcomeDistribution):
        keys = support.outcomes
    else:
        keys = tuple(tuple(int(x) for x in pattern) for pattern in support)
    counts = dict.fromkeys(keys, 0)
    if len(counts) != len(keys):
        raise ContractError("support contains duplicate patterns")
    total = 0
    for pattern in patterns:
        key = tuple(int(x) for x in pattern)
        if key not in counts:
            raise DataError(f"sample {key} lies outside the outcome support")
        counts[key] += 1
        total += 1
    if total == 0:
        raise DataError("no samples provided")
    return {key: count / total for key, count in counts.items()}


def _model_oracle(model) -> Callable:
    if isinstance(model, OutcomeDistribution):
        return lambda _input: model
    if callable(model):
        cache: dict = {}

        def oracle(input_pattern):
            hit = cache.get(input_pattern)
            if hit is None:
                hit = model(input_pattern)
                if not isinstance(hit, OutcomeDistribution):
                    raise ContractError("model oracle must return an OutcomeDistribution")
                cache[input_pattern] = hit
            return hit

        return oracle
    raise ContractError("hypothesis model must be a distribution or a per-input callable")


def _joint_similarity_distance(pairs, q_oracle):
    # Empirical joint frequencies over (input, output) against the model
    # joint built from the empirical input marginal times the per-input
    # model: q_hat(i, o) = p_hat(i) * q(o | i).
    total = len(pairs)
    input_counts = Counter(inp for inp, _ in pairs)
    joint_counts = Counter(pairs)
    seen_by_input: dict = {}
    for inp, out in joint_counts:
        seen_by_input.setdefault(inp, set()).add(out)
    s_acc = 0.0
    d_acc = 0.0
    for inp, count in input_counts.items():
        dist = q_oracle(inp)
        weight = count / total
        for out in set(dist.outcomes) | seen_by_input[inp]:
            p_hat = joint_counts.get((inp, out), 0) / total
            q_hat = weight * dist.prob(out)
            s_acc += math.sqrt(p_hat * q_hat)
            d_acc += abs(p_hat - q_hat)
    return s_acc, 0.5 * d_acc


def likelihood_ratio_test(samples, q_model, p_model, threshold: float = 5.0) -> ValidationReport:
    """Cumulative log likelihood-ratio test between two hypotheses.

    ``samples`` is a sequence of (input, output) pattern pairs; ``q_model``
    and ``p_model`` give the per-input output distributions under the
    indistinguishable and distinguishable hypotheses (either a single
    distribution applied to every input, or a callable mapping an input
    pattern to one).  The statistic ``L_t = sum_{i<=t} ln(q(x_i)/p(x_i))``
    is accumulated over all samples; the verdict is ``indistinguishable``
    when the final value exceeds ``threshold``, ``distinguishable`` below
    ``-threshold``, otherwise ``inconclusive``.  A sample with probability
    zero under exactly one hypothesis decides immediately for the other;
    zero under both is an impossible event and raises DataError.
    """
    if not threshold > 0:
        raise ContractError(f"threshold must be positive, got {threshold}")
    q_oracle = _model_oracle(q_model)
    p_oracle = _model_oracle(p_model)
    trajectory = []
    consumed = []
    level = 0.0
    verdict = None
    for inp, out in samples:
        key_in = tuple(int(x) for x in inp)
        key_out = tuple(int(x) for x in out)
        consumed.append((key_in, key_out))
        q = q_oracle(key_in).prob(key_out)
        p = p_oracle(key_in).prob(key_out)
        if q == 0.0 and p == 0.0:
            raise DataError(
                f"sample {key_out} for input {key_in} is impossible under both hypotheses"
            )
        if p == 0.0:
            trajectory.append(math.inf)
            verdict = "indistinguishable"
            break
        if q == 0.0:
            trajectory.append(-math.inf)
            verdict = "distinguishable"
            break
        level += math.log(q / p)
        trajectory.append(level)
    if not consumed:
        raise ContractError("no samples supplied")
    if verdict is None:
        if level > threshold:
            verdict = "indistinguishable"
        elif level < -threshold:
            verdict = "distinguishable"
        else:
            verdict = "inconclusive"
    s, d = _joint_similarity_distance(consumed, q_oracle)
    return ValidationReport(
        similarity=s,
        distance=d,
        lr_trajectory=np.array(trajectory),
        verdict=verdict,
        samples_used=len(consumed),
    )


def scattershot_aggregate_validation(records: Sequence[SampleRecord], unitary,
                                     collisions: bool = True,
                                     threshold: float = 5.0) -> AggregateValidationReport:
    """Validate a scattershot record set against the exact theory per input.

    Records are grouped by trigger pattern; each group's empirical output
    distribution is compared with ``exact_distribution`` for that input
    (similarity and distance), and all samples feed one pooled
    likelihood-ratio test against the distinguishable hypothesis.  With
    ``collisions=False`` the analysis restricts to collision-free outputs.
    The group statistics do not depend on record order.
    """
    if not records:
        raise ContractError("empty record set")
    u = as_complex_matrix(unitary)
    check_unitary(u)
    for rec in records:
        if sum(rec.trigger) != sum(rec.output):
            raise ContractError(
                f"record at pulse {rec.pulse_index} is not post-selected: "
                f"{sum(rec.trigger)} triggers vs {sum(rec.output)} detected photons"
            )
    kept = records if collisions else [r for r in records if is_no_collision(r.output)]
    if not kept:
        raise ContractError("no records left after removing collision outputs")
    grouped: dict = {}
    for rec in kept:
        grouped.setdefault(rec.trigger, []).append(rec.output)

    q_oracle = _model_oracle(lambda inp: exact_distribution(u, inp, collisions))
    p_oracle = _model_oracle(lambda inp: distinguishable_distribution(u, inp, collisions))

    groups = []
    for trigger in sorted(grouped):
        outputs = grouped[trigger]
        dist = q_oracle(trigger)
        freq = empirical_distribution(outputs, dist)
        groups.append(
            GroupValidation(
                trigger=trigger,
                samples=len(outputs),
                similarity=similarity(freq, dist),
                distance=tv_distance(freq, dist),
            )
        )
    sims = np.array([g.similarity for g in groups])
    dists = np.array([g.distance for g in groups])
    spread = (
        (float(sims.std(ddof=1)), float(dists.std(ddof=1))) if len(groups) > 1 else (0.0, 0.0)
    )
    pooled_samples = [
        (trigger, out) for trigger in sorted(grouped) for out in grouped[trigger]
    ]
    pooled = likelihood_ratio_test(pooled_samples, q_oracle, p_oracle, threshold)
    return AggregateValidationReport(
        groups=tuple(groups),
        mean_similarity=float(sims.mean()),
        similarity_std=spread[0],
        mean_distance=float(dists.mean()),
        distance_std=spread[1],
        pooled=pooled,
    )
