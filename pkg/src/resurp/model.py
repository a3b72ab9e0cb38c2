"""Closed-form quantities of the structure-marginal word model.

A model is a prior over K structural analyses together with the
probability each structure assigns to one critical word.  Everything in
this module is an exact function of those two vectors (or of an
alternative weight vector standing in for the prior, e.g. an empirical
particle distribution).  All logarithms are natural, so surprisal and KL
values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SUM_TOLERANCE",
    "RENORM_TOLERANCE",
    "ParseFailureError",
    "ModelSpec",
    "as_distribution",
    "marginal_word_prob",
    "surprisal",
    "bayes_posterior",
    "kl_divergence",
    "asymptotic_expected_surprisal",
    "kl_cost",
]

# Vectors summing to 1 within SUM_TOLERANCE are accepted verbatim; within
# RENORM_TOLERANCE they are renormalized (config files carry rounded
# decimal literals); beyond that they are rejected.
SUM_TOLERANCE = 1e-12
RENORM_TOLERANCE = 1e-9


class ParseFailureError(Exception):
    """Total parse failure: every structure carrying weight gives the word probability 0."""


def as_distribution(vec, *, name: str = "distribution") -> np.ndarray:
    """Validate ``vec`` as a probability vector and return it read-only.

    Entries must be in [0, 1].  The sum must be 1 within
    ``SUM_TOLERANCE``; sums off by up to ``RENORM_TOLERANCE`` are
    renormalized, anything worse raises ``ValueError``.
    """
    arr = np.array(vec, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} entries must lie in [0, 1], got {arr}")
    total = float(arr.sum())
    err = abs(total - 1.0)
    if err > SUM_TOLERANCE:
        if err > RENORM_TOLERANCE:
            raise ValueError(f"{name} sums to {total!r}, outside renormalization tolerance {RENORM_TOLERANCE}")
        arr /= total
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """The world for one critical word: structures, prior, and word likelihoods.

    Parameters
    ----------
    prior : array-like
        Probability of each structure given the context (length K).
    likelihood : array-like
        Probability of the critical word under each structure (length K),
        entries in [0, 1].  An entry of exactly 0 is legal only with
        ``allow_parse_failure=True``, because particles committed to such
        a structure fail outright at the word.
    structures : sequence of str, optional
        Labels; defaults to ``("T1", ..., "TK")``.
    allow_parse_failure : bool
        Opt-in switch for zero likelihood entries.
    """

    prior: np.ndarray
    likelihood: np.ndarray
    structures: tuple = ()
    allow_parse_failure: bool = False

    def __post_init__(self):
        prior = as_distribution(self.prior, name="prior")
        likelihood = np.array(self.likelihood, dtype=float)
        if likelihood.ndim != 1 or likelihood.shape != prior.shape:
            raise ValueError(
                f"likelihood shape {likelihood.shape} does not match prior shape {prior.shape}"
            )
        if not np.all(np.isfinite(likelihood)):
            raise ValueError("likelihood has non-finite entries")
        if np.any(likelihood < 0.0) or np.any(likelihood > 1.0):
            raise ValueError(f"likelihood entries must lie in [0, 1], got {likelihood}")
        if not self.allow_parse_failure and np.any(likelihood == 0.0):
            raise ValueError(
                "likelihood contains an exact 0; construct with allow_parse_failure=True "
                "to model total parse failure"
            )
        likelihood.flags.writeable = False
        structures = tuple(self.structures) or tuple(f"T{i + 1}" for i in range(prior.size))
        if len(structures) != prior.size:
            raise ValueError(f"{len(structures)} structure labels for K={prior.size}")
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "likelihood", likelihood)
        object.__setattr__(self, "structures", structures)

    @property
    def k(self) -> int:
        """Number of structures."""
        return self.prior.size


def _check_weights(spec: ModelSpec, weights) -> np.ndarray:
    w = as_distribution(weights, name="weights")
    if w.size != spec.k:
        raise ValueError(f"weights length {w.size} does not match spec K={spec.k}")
    return w


def marginal_word_prob(spec: ModelSpec, weights) -> float:
    """Word probability marginalized over structures: sum_T Q(w|T,C) * weights(T)."""
    w = _check_weights(spec, weights)
    p = float(w @ spec.likelihood)
    # dot products of probabilities can spill past 1 by a few ulp
    return min(max(p, 0.0), 1.0)


def surprisal(p: float) -> float:
    """Surprisal -ln(p) in nats; p == 0 maps to +inf rather than raising."""
    p = float(p)
    if not 0.0 <= p <= 1.0 + SUM_TOLERANCE:
        raise ValueError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0.0:
        return math.inf
    return -math.log(min(p, 1.0))


def bayes_posterior(spec: ModelSpec, weights) -> np.ndarray:
    """Posterior over structures after observing the word, from Bayes' rule.

    Raises ``ParseFailureError`` when the marginal word probability is 0,
    i.e. no structure carrying weight can produce the word.
    """
    w = _check_weights(spec, weights)
    joint = w * spec.likelihood
    total = float(joint.sum())
    if total == 0.0:
        raise ParseFailureError("marginal word probability is 0: no surviving analysis")
    post = joint / total
    post.flags.writeable = False
    return post


def kl_divergence(p, q) -> float:
    """Kullback-Leibler divergence D(p || q) in nats, with 0*ln(0/x) = 0.

    Returns +inf when q puts zero mass where p does not (absolute
    continuity violated).
    """
    p = as_distribution(p, name="p")
    q = as_distribution(q, name="q")
    if p.shape != q.shape:
        raise ValueError(f"p and q have different lengths: {p.size} vs {q.size}")
    support = p > 0.0
    if np.any(q[support] == 0.0):
        return math.inf
    val = float(np.sum(p[support] * np.log(p[support] / q[support])))
    # exact arithmetic guarantees >= 0 (Gibbs); rounding can leave ~-1e-16
    return max(val, 0.0)


def asymptotic_expected_surprisal(spec: ModelSpec, weights) -> float:
    """Expected surprisal once every particle set has collapsed to one structure.

    Equals sum_T weights(T) * (-ln Q(w|T,C)): the limit of the expected
    surprisal under indefinite resampling started from ``weights``.
    +inf when any structure with positive weight assigns the word
    probability 0.
    """
    w = _check_weights(spec, weights)
    support = w > 0.0
    q = spec.likelihood[support]
    if np.any(q == 0.0):
        return math.inf
    return float(w[support] @ (-np.log(q)))


def kl_cost(spec: ModelSpec, weights) -> float:
    """Surprisal cost of resampling forever: D(weights || posterior).

    The divergence between the structure distribution and its Bayes
    update measures the structural information in the word that an
    indefinitely-resampled parser ends up ignoring.  Equals
    ``kl_divergence(weights, bayes_posterior(spec, weights))`` computed
    in one pass, and identically
    ``asymptotic_expected_surprisal - surprisal(marginal_word_prob)``.
    Returns +inf on zero marginal (total parse failure).
    """
    w = _check_weights(spec, weights)
    joint = w * spec.likelihood
    total = float(joint.sum())
    if total == 0.0:
        return math.inf
    post = joint / total
    support = w > 0.0
    if np.any(post[support] == 0.0):
        return math.inf
    val = float(np.sum(w[support] * np.log(w[support] / post[support])))
    return max(val, 0.0)
