"""The stochastic resampling process and Monte Carlo trajectory estimation.

A particle set is a vector of per-structure counts summing to N.  One
resampling step draws N particles with replacement from the current set
(a multinomial draw with the empirical weights), so each structure's
weight is a bounded martingale that eventually fixes on one structure.
Under the uninformative-region assumption the word likelihoods never
reweight the particles, so the simulated cycle is resampling-only; the
critical word's surprisal is evaluated against each step's state without
mutating it.

Reproducibility contract: ``simulate_counts`` (and everything built on
it) produces identical output for identical ``(spec, n, steps, trials,
seed)`` regardless of worker count.  Trials are partitioned into
fixed-size blocks of ``BLOCK_TRIALS``; block ``b`` draws from the
dedicated stream ``SeedSequence(entropy=seed, spawn_key=(b,))`` and
writes into its own slice, so thread scheduling cannot affect results,
and per-step statistics are reduced over the fixed trial axis.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from resurp.model import ModelSpec, ParseFailureError, surprisal

__all__ = [
    "BLOCK_TRIALS",
    "ParticleState",
    "TrajectoryStats",
    "sample_initial",
    "resample_step",
    "simulate_trajectory",
    "simulate_counts",
    "trajectory_stats_from_counts",
    "estimate_expected_surprisal",
]

# Fixed trial-block size for seeding and vectorized draws.  Changing this
# value changes the random stream, so it is part of the output contract.
BLOCK_TRIALS = 4096


@dataclass(frozen=True)
class ParticleState:
    """Counts of particles per structure; the empirical distribution is counts/n."""

    counts: np.ndarray
    n: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size < 1:
            raise ValueError(f"counts must be a 1-d vector, got shape {counts.shape}")
        if np.any(counts < 0):
            raise ValueError(f"counts must be nonnegative, got {counts}")
        if self.n < 1:
            raise ValueError(f"particle count must be >= 1, got {self.n}")
        if int(counts.sum()) != self.n:
            raise ValueError(f"counts sum to {int(counts.sum())}, expected n={self.n}")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    @property
    def weights(self) -> np.ndarray:
        """Empirical distribution over structures."""
        return self.counts / self.n

    @property
    def absorbed(self) -> bool:
        """True when every particle carries the same structure."""
        return bool(self.counts.max() == self.n)


@dataclass(frozen=True)
class TrajectoryStats:
    """Aggregate statistics of the surprisal distribution at one resampling step.

    ``step`` 0 is the state after the initial draw from the prior.  When
    any trial hits a failed parse (marginal word probability 0), the
    unconditional moments are +inf and the ``*_finite`` fields carry the
    statistics over the surviving trials.
    """

    step: int
    mean_surprisal: float
    stdev_surprisal: float
    stderr: float
    absorbed_fraction: float
    failed_fraction: float
    trials: int
    mean_surprisal_finite: float
    finite_trials: int


def sample_initial(spec: ModelSpec, n: int, rng: np.random.Generator) -> ParticleState:
    """Draw the initial particle set: one multinomial of n trials from the prior."""
    if n < 1:
        raise ValueError(f"particle count must be >= 1, got {n}")
    return ParticleState(counts=rng.multinomial(n, spec.prior), n=n)


def resample_step(state: ParticleState, rng: np.random.Generator) -> ParticleState:
    """Resample n particles with replacement from the current empirical weights.

    Absorbed states are returned unchanged (they are fixed points and
    consume no randomness).
    """
    if state.absorbed:
        return state
    return ParticleState(counts=rng.multinomial(state.n, state.weights), n=state.n)


def simulate_trajectory(
    spec: ModelSpec, n: int, steps: int, rng: np.random.Generator
) -> np.ndarray:
    """Surprisal of the critical word at steps 0..steps of one resampling run."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    state = sample_initial(spec, n, rng)
    out = np.empty(steps + 1)
    for i in range(steps + 1):
        out[i] = surprisal(float(state.weights @ spec.likelihood))
        if i < steps:
            state = resample_step(state, rng)
    return out


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block,)))


def _fill_block(out: np.ndarray, spec: ModelSpec, n: int, seed: int, block: int, lo: int, hi: int):
    rng = _block_rng(seed, block)
    steps = out.shape[1] - 1
    counts = rng.multinomial(n, np.broadcast_to(spec.prior, (hi - lo, spec.k)))
    out[lo:hi, 0] = counts
    for i in range(1, steps + 1):
        # absorbed rows have degenerate weights and redraw themselves
        counts = rng.multinomial(n, counts / n)
        out[lo:hi, i] = counts


def simulate_counts(
    spec: ModelSpec,
    n: int,
    steps: int,
    trials: int,
    seed: int,
    *,
    threads: int = 1,
) -> np.ndarray:
    """Simulate ``trials`` independent resampling runs.

    Returns
    -------
    ndarray of shape (trials, steps + 1, K), int64
        Per-trial particle counts at every step, trial ``t`` at index
        ``t`` irrespective of which worker simulated it.
    """
    if n < 1:
        raise ValueError(f"particle count must be >= 1, got {n}")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    out = np.empty((trials, steps + 1, spec.k), dtype=np.int64)
    blocks = [
        (b, lo, min(lo + BLOCK_TRIALS, trials))
        for b, lo in enumerate(range(0, trials, BLOCK_TRIALS))
    ]
    if threads <= 1 or len(blocks) == 1:
        for b, lo, hi in blocks:
            _fill_block(out, spec, n, seed, b, lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_fill_block, out, spec, n, seed, b, lo, hi) for b, lo, hi in blocks
            ]
            for f in futures:
                f.result()
    return out


def surprisal_matrix(spec: ModelSpec, counts: np.ndarray) -> np.ndarray:
    """Per-trial, per-step surprisal values for a counts tensor (inf on failed parses)."""
    n = int(counts.reshape(-1, counts.shape[-1])[0].sum())
    marg = (counts @ spec.likelihood) / n
    with np.errstate(divide="ignore"):
        return -np.log(marg)


def trajectory_stats_from_counts(spec: ModelSpec, counts: np.ndarray) -> list[TrajectoryStats]:
    """Reduce a (trials, steps+1, K) counts tensor to per-step TrajectoryStats.

    Raises ``ParseFailureError`` if any trial fails the parse while the
    spec was not constructed with ``allow_parse_failure``.
    """
    trials, nsteps, _ = counts.shape
    n = int(counts[0, 0].sum())
    surp = surprisal_matrix(spec, counts)
    absorbed = counts.max(axis=2) == n
    failed = ~np.isfinite(surp)
    if failed.any() and not spec.allow_parse_failure:
        raise ParseFailureError(
            "a trial hit marginal word probability 0; spec lacks allow_parse_failure"
        )
    stats = []
    for i in range(nsteps):
        col = surp[:, i]
        fin = np.isfinite(col)
        nfin = int(fin.sum())
        if nfin == trials:
            mean = float(col.mean())
            stdev = float(col.std(ddof=1)) if trials > 1 else 0.0
            stderr = stdev / math.sqrt(trials)
            mean_fin = mean
        else:
            mean = math.inf
            stdev = math.inf
            stderr = math.inf
            mean_fin = float(col[fin].mean()) if nfin else math.inf
        stats.append(
            TrajectoryStats(
                step=i,
                mean_surprisal=mean,
                stdev_surprisal=stdev,
                stderr=stderr,
                absorbed_fraction=float(absorbed[:, i].mean()),
                failed_fraction=float(failed[:, i].mean()),
                trials=trials,
                mean_surprisal_finite=mean_fin,
                finite_trials=nfin,
            )
        )
    return stats


def estimate_expected_surprisal(
    spec: ModelSpec,
    n: int,
    steps: int,
    trials: int,
    seed: int,
    *,
    threads: int = 1,
) -> list[TrajectoryStats]:
    """Monte Carlo estimate of the expected-surprisal trajectory.

    Aggregates ``trials`` independent runs; deterministic for a given
    seed regardless of ``threads`` (see module docstring).
    """
    counts = simulate_counts(spec, n, steps, trials, seed, threads=threads)
    return trajectory_stats_from_counts(spec, counts)
