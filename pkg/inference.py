"""
Sequential Beta-Bernoulli hypothesis testing and measurement planning.

Outcome polarity: 1 ("success") is always the outcome consistent with a
high ground-state overlap, e.g. the Bell projector NOT firing. A small left
alpha-error accepts the hypothesis p > H0; a small right alpha-error
rejects it.
"""

import logging
import math
from typing import Callable, Dict, Iterable, Iterator, Optional, Tuple, Union

import numpy as np
from scipy.special import betainc

from enums import Decision
from schemas import BetaPosterior, DecisionResult
from utils.error_handler import InvalidInputError

logger = logging.getLogger("vqaa.inference")

DEFAULT_PRIOR = BetaPosterior(a=10.0, b=2.0)
FLAT_PRIOR = BetaPosterior(a=1.0, b=1.0)
MAX_ALPHA_THRESHOLD = 0.5

Outcomes = Union[Iterable[int], Callable[[], int]]


# ============================================================================
# Posterior updates
# ============================================================================

def update(post: BetaPosterior, outcome: int) -> BetaPosterior:
    if outcome:
        return BetaPosterior(a=post.a + 1, b=post.b)
    return BetaPosterior(a=post.a, b=post.b + 1)


def update_batch(post: BetaPosterior, successes: int, failures: int) -> BetaPosterior:
    if successes < 0 or failures < 0:
        raise InvalidInputError("Outcome counts must be nonnegative")
    return BetaPosterior(a=post.a + successes, b=post.b + failures)


def alpha_errors(post: BetaPosterior, h0: float, epsilon: float) -> Tuple[float, float]:
    """
    Posterior mass on either side of the dead zone [h0 - epsilon, h0 + epsilon].

    Returns:
        Tuple[float, float]: (left, right) where left = P(p < h0 - epsilon)
        and right = P(p > h0 + epsilon)
    """
    if epsilon < 0:
        raise InvalidInputError(f"Epsilon must be nonnegative, got {epsilon}")
    if not (0 < h0 - epsilon and h0 + epsilon < 1):
        raise InvalidInputError(f"Dead zone [{h0 - epsilon}, {h0 + epsilon}] must lie inside (0, 1)")
    left = float(betainc(post.a, post.b, h0 - epsilon))
    right = float(1.0 - betainc(post.a, post.b, h0 + epsilon))
    return left, right


# ============================================================================
# Decision algorithm
# ============================================================================

def _stream(outcomes: Outcomes) -> Iterator[int]:
    if callable(outcomes):
        while True:
            yield outcomes()
    yield from outcomes


def decide(
    outcomes: Outcomes,
    h0: float,
    epsilon: float,
    alpha_threshold: float = 0.05,
    max_samples: int = 2000,
    prior: BetaPosterior = DEFAULT_PRIOR,
) -> DecisionResult:
    """
    Update the posterior outcome by outcome until one alpha-error drops below the threshold.

    Args:
        outcomes: Iterable of bits or a zero-argument sampler
        h0: Hypothesis threshold H0
        epsilon: Half-width of the undecidable zone
        alpha_threshold: Stopping threshold in (0, 0.5]
        max_samples: Samples drawn before giving up (Undecided)
        prior: Starting posterior

    Returns:
        DecisionResult: Decision, samples used, final posterior and the test log
    """
    if not 0 < alpha_threshold <= MAX_ALPHA_THRESHOLD:
        raise InvalidInputError(f"Alpha threshold must lie in (0, 0.5], got {alpha_threshold}")
    alpha_errors(prior, h0, epsilon)

    post = prior
    log = []
    left = right = float("nan")
    decision = Decision.UNDECIDED
    used = 0
    stream = _stream(outcomes)
    for used in range(1, max_samples + 1):
        try:
            outcome = int(next(stream))
        except StopIteration:
            used -= 1
            break
        post = update(post, outcome)
        left, right = alpha_errors(post, h0, epsilon)
        if left < alpha_threshold:
            decision = Decision.ACCEPT
        elif right < alpha_threshold:
            decision = Decision.REJECT
        log.append({
            "sample_idx": used,
            "outcome": outcome,
            "a": post.a,
            "b": post.b,
            "left_err": left,
            "right_err": right,
            "decision": decision.value,
        })
        if decision != Decision.UNDECIDED:
            break

    return DecisionResult(
        decision=decision,
        samples_used=used,
        posterior=post,
        left_error=left,
        right_error=right,
        alpha_threshold=alpha_threshold,
        log=log,
    )


def sequential_test(
    sampler: Outcomes,
    h0: float,
    epsilon: float,
    alpha_threshold: float = 0.05,
    max_samples: int = 2000,
    prior: BetaPosterior = DEFAULT_PRIOR,
) -> DecisionResult:
    """Run ``decide``; on Undecided double the threshold (up to 0.5) and keep sampling."""
    stream = _stream(sampler)
    threshold = alpha_threshold
    post = prior
    total = 0
    log = []
    while True:
        result = decide(stream, h0, epsilon, threshold, max_samples, post)
        for row in result.log:
            row["sample_idx"] += total
        log.extend(result.log)
        total += result.samples_used
        post = result.posterior
        if result.decision != Decision.UNDECIDED or threshold >= MAX_ALPHA_THRESHOLD or result.samples_used == 0:
            break
        threshold = min(2 * threshold, MAX_ALPHA_THRESHOLD)
        logger.info(f"Undecided after {total} samples, relaxing alpha threshold to {threshold}")

    return result.model_copy(update={"samples_used": total, "log": log})


def expected_samples(
    p_true: float,
    h0: float,
    epsilon: float,
    alpha_threshold: float = 0.05,
    prior: BetaPosterior = DEFAULT_PRIOR,
    max_samples: int = 2000,
    runs: int = 1000,
    rng: Optional[np.random.Generator] = None,
) -> Dict[str, float]:
    """Monte-Carlo sample counts and decision rates of ``decide`` for Bernoulli(p_true) data."""
    rng = rng if rng is not None else np.random.default_rng()
    counts, accepts, rejects = [], 0, 0
    for _ in range(runs):
        draws = rng.random(max_samples) < p_true
        result = decide(draws.astype(int), h0, epsilon, alpha_threshold, max_samples, prior)
        counts.append(result.samples_used)
        accepts += result.decision == Decision.ACCEPT
        rejects += result.decision == Decision.REJECT
    return {
        "mean": float(np.mean(counts)),
        "median": float(np.median(counts)),
        "accept_rate": accepts / runs,
        "reject_rate": rejects / runs,
    }


# ============================================================================
# Chernoff-Hoeffding planning
# ============================================================================

def hoeffding_samples(epsilon: float, eta: float, value_range: float = 2.0) -> int:
    """Measurements m so that the sample mean is within epsilon with probability 1 - eta."""
    if not 0 < epsilon < 1:
        raise InvalidInputError(f"Epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < eta < 1:
        raise InvalidInputError(f"Eta must lie in (0, 1), got {eta}")
    return math.ceil(value_range ** 2 / 2.0 / epsilon ** 2 * math.log(1.0 / eta))


def plan_measurements(
    fidelity: float,
    n_estimates: int,
    success_probability: float = 0.5,
    value_range: float = 2.0,
) -> Tuple[int, float, float]:
    """
    Shots per estimate for a whole optimization run.

    Every one of ``n_estimates`` estimates must land within (1 - F)/20 of its
    mean, jointly with probability ``success_probability``.

    Returns:
        Tuple[int, float, float]: (m, epsilon, eta)
    """
    if not 0 < fidelity < 1:
        raise InvalidInputError(f"Fidelity must lie in (0, 1), got {fidelity}")
    if n_estimates < 1:
        raise InvalidInputError(f"Need at least one estimate, got {n_estimates}")
    epsilon = (1.0 - fidelity) / 20.0
    eta = 1.0 - success_probability ** (1.0 / n_estimates)
    m = hoeffding_samples(epsilon, eta, value_range)
    logger.debug(f"Planned m={m} for F={fidelity}, {n_estimates} estimates (eps={epsilon:.4g}, eta={eta:.4g})")
    return m, epsilon, eta
