"""Expected-surprisal dynamics of particle-filter parsers under repeated resampling.

The package simulates what happens to the surprisal of a single critical
word when a resource-limited incremental parser represents structural
uncertainty with N particles and repeatedly resamples them while reading
an uninformative ambiguous region.  It provides:

- ``model``: closed-form quantities (word probability, surprisal, Bayes
  posterior, KL divergence, asymptotic surprisal, KL cost).
- ``dynamics``: the stochastic resampling process and Monte Carlo
  estimation of expected-surprisal trajectories.
- ``oracle``: exact Markov-chain computation over particle-count
  compositions, the ground truth for every stochastic estimate.
- ``approx``: closed-form predictions of the per-step surprisal increase
  (second-order Jensen-gap estimate and Wright-Fisher linear-diffusion
  estimate).
- ``experiments``: reproductions of the trajectory, digging-in and
  approximation-fit studies, with CSV/JSON emission.
- ``cli``: the ``resurp`` command-line entry point.
"""

from resurp.model import (
    ModelSpec,
    ParseFailureError,
    asymptotic_expected_surprisal,
    bayes_posterior,
    kl_cost,
    kl_divergence,
    marginal_word_prob,
    surprisal,
)

__all__ = [
    "ModelSpec",
    "ParseFailureError",
    "asymptotic_expected_surprisal",
    "bayes_posterior",
    "kl_cost",
    "kl_divergence",
    "marginal_word_prob",
    "surprisal",
]

__version__ = "0.1.0"
