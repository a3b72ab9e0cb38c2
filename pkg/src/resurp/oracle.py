"""Exact Markov-chain computation of the resampling process for small N and K.

The resampling chain lives on compositions of n particles into K
structure counts.  For modest state counts the chain is small enough to
build explicitly, giving exact expected-surprisal trajectories,
absorption probabilities and absorption times; these serve as ground
truth for every Monte Carlo estimate in the package.

States are enumerated in colexicographic order (the last count varies
slowest), so state indices and any dumped golden files are stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve
from scipy.sparse.linalg import spsolve
from scipy.special import gammaln

from resurp.model import ModelSpec

__all__ = [
    "DEFAULT_STATE_BUDGET",
    "DENSE_STATE_LIMIT",
    "StateBudgetExceededError",
    "CompositionChain",
    "build_chain",
    "exact_expected_surprisal",
    "exact_absorption_time",
    "exact_surprisal_delta",
    "expected_conditional_variance",
    "absorption_distribution",
    "dump_chain_csv",
]

DEFAULT_STATE_BUDGET = 200_000
# dense transition matrices up to this many states; row-compressed beyond
DENSE_STATE_LIMIT = 2_000


class StateBudgetExceededError(ValueError):
    """The composition space is larger than the configured state budget."""


def _compositions_colex(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for last in range(n + 1):
        for head in _compositions_colex(n - last, k - 1):
            yield head + (last,)


@dataclass(frozen=True)
class CompositionChain:
    """Exact resampling chain over compositions of n particles into k counts.

    ``transition`` is row-stochastic; row s is the multinomial
    distribution of n draws with probabilities ``states[s] / n``.  It is
    a dense ndarray up to ``DENSE_STATE_LIMIT`` states and a CSR matrix
    beyond (multinomial rows underflow to structural sparsity there).
    """

    n: int
    k: int
    states: np.ndarray
    initial_distribution: np.ndarray
    transition: object

    @property
    def num_states(self) -> int:
        return self.states.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Empirical distribution of each state, shape (num_states, k)."""
        return self.states / self.n

    @property
    def absorbing_mask(self) -> np.ndarray:
        """True for states with all n particles on one structure."""
        return self.states.max(axis=1) == self.n


def _multinomial_pmf_rows(states: np.ndarray, n: int, log_coef: np.ndarray, p: np.ndarray):
    """Multinomial pmf over all composition states for one probability vector."""
    support = p > 0.0
    feasible = states[:, ~support].sum(axis=1) == 0
    pmf = np.zeros(states.shape[0])
    if not feasible.any():
        return pmf
    logp = states[np.ix_(feasible, support)] @ np.log(p[support])
    pmf[feasible] = np.exp(log_coef[feasible] + logp)
    return pmf


def build_chain(
    spec: ModelSpec,
    n: int,
    *,
    state_budget: int = DEFAULT_STATE_BUDGET,
    dense_limit: int = DENSE_STATE_LIMIT,
) -> CompositionChain:
    """Enumerate the composition states and build the exact transition matrix.

    Raises ``StateBudgetExceededError`` when C(n+k-1, k-1) exceeds
    ``state_budget``.
    """
    if n < 1:
        raise ValueError(f"particle count must be >= 1, got {n}")
    k = spec.k
    num_states = math.comb(n + k - 1, k - 1)
    if num_states > state_budget:
        raise StateBudgetExceededError(
            f"{num_states} composition states for n={n}, k={k} exceed budget {state_budget}"
        )
    states = np.array(list(_compositions_colex(n, k)), dtype=np.int64)
    states.flags.writeable = False

    # log of the multinomial coefficient n! / prod(c_j!) per state
    log_coef = gammaln(n + 1) - gammaln(states + 1).sum(axis=1)
    initial = _multinomial_pmf_rows(states, n, log_coef, spec.prior)
    initial.flags.writeable = False

    rows = [
        _multinomial_pmf_rows(states, n, log_coef, states[s] / n) for s in range(num_states)
    ]
    if num_states <= dense_limit:
        transition = np.array(rows)
        transition.flags.writeable = False
    else:
        transition = sp.csr_matrix(np.array(rows))
        transition.eliminate_zeros()
    return CompositionChain(
        n=n, k=k, states=states, initial_distribution=initial, transition=transition
    )


def _state_surprisals(chain: CompositionChain, spec: ModelSpec) -> np.ndarray:
    marg = chain.weights @ spec.likelihood
    with np.errstate(divide="ignore"):
        return -np.log(marg)


def _push(dist: np.ndarray, transition) -> np.ndarray:
    out = dist @ transition
    return np.asarray(out).ravel()


def _expectation(dist: np.ndarray, values: np.ndarray) -> float:
    """sum(dist * values) treating inf values as the sentinel they are."""
    hot = dist > 0.0
    if np.any(np.isinf(values[hot])):
        return math.inf
    return float(dist[hot] @ values[hot])


def exact_expected_surprisal(
    chain: CompositionChain, spec: ModelSpec, steps: int
) -> np.ndarray:
    """Exact E[S] at steps 0..steps, pushing the state distribution through the chain."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    svals = _state_surprisals(chain, spec)
    dist = chain.initial_distribution.copy()
    out = np.empty(steps + 1)
    for i in range(steps + 1):
        out[i] = _expectation(dist, svals)
        if i < steps:
            dist = _push(dist, chain.transition)
    return out


def exact_surprisal_delta(chain: CompositionChain, spec: ModelSpec, i: int) -> float:
    """Exact increase in expected surprisal from step i to i+1 (nonnegative up to rounding)."""
    if i < 0:
        raise ValueError(f"step index must be >= 0, got {i}")
    traj = exact_expected_surprisal(chain, spec, i + 1)
    return float(traj[i + 1] - traj[i])


def exact_absorption_time(chain: CompositionChain) -> float:
    """Expected number of steps until all particles share one structure.

    Solves the fundamental-matrix system (I - T_transient) t = 1 and
    averages over the initial distribution; absorbing states take time 0.
    """
    absorbing = chain.absorbing_mask
    transient = ~absorbing
    if not transient.any():
        return 0.0
    if sp.issparse(chain.transition):
        tt = chain.transition[transient][:, transient]
        system = sp.eye(tt.shape[0], format="csc") - tt.tocsc()
        times = spsolve(system, np.ones(tt.shape[0]))
    else:
        tt = chain.transition[np.ix_(transient, transient)]
        times = solve(np.eye(tt.shape[0]) - tt, np.ones(tt.shape[0]))
    if not np.all(np.isfinite(times)):
        raise RuntimeError("singular transient block in absorption-time solve")
    return float(chain.initial_distribution[transient] @ times)


def expected_conditional_variance(
    chain: CompositionChain, spec: ModelSpec, i: int
) -> float:
    """Exact E[Var(M_{i+1} | state_i)] at step i.

    One resampling step turns the word's marginal probability into a
    sample mean of n likelihood draws from the current weights, so the
    conditional variance at a state is Var_weights(Q) / n.  This is the
    quantity whose positivity makes the per-step surprisal increase
    strict.
    """
    if i < 0:
        raise ValueError(f"step index must be >= 0, got {i}")
    w = chain.weights
    mean = w @ spec.likelihood
    var = np.clip(w @ (spec.likelihood**2) - mean**2, 0.0, None)
    dist = chain.initial_distribution.copy()
    for _ in range(i):
        dist = _push(dist, chain.transition)
    return float(dist @ (var / chain.n))


def absorption_distribution(
    chain: CompositionChain, *, tol: float = 1e-12, max_steps: int = 1_000_000
) -> np.ndarray:
    """Mass absorbed into each structure in the long run.

    Iterates the chain until transient mass falls below ``tol`` (the
    chain absorbs geometrically, so this is cheap and numerically robust)
    and returns the per-structure absorbed mass, which by the martingale
    property equals the initial expected weights.
    """
    absorbing = chain.absorbing_mask
    dist = chain.initial_distribution.copy()
    steps = 0
    while float(dist[~absorbing].sum()) > tol:
        if steps >= max_steps:
            raise RuntimeError(f"transient mass above {tol} after {max_steps} steps")
        dist = _push(dist, chain.transition)
        steps += 1
    out = np.zeros(chain.k)
    idx = np.flatnonzero(absorbing)
    structure = chain.states[idx].argmax(axis=1)
    np.add.at(out, structure, dist[idx])
    return out


def dump_chain_csv(chain: CompositionChain, path) -> None:
    """Debugging dump: one row per state with counts, initial mass and transition row."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["state"]
            + [f"count_{j + 1}" for j in range(chain.k)]
            + ["initial_probability"]
            + [f"p_to_{s}" for s in range(chain.num_states)]
        )
        dense = (
            chain.transition.toarray() if sp.issparse(chain.transition) else chain.transition
        )
        for s in range(chain.num_states):
            writer.writerow(
                [s]
                + [int(c) for c in chain.states[s]]
                + [format(chain.initial_distribution[s], ".17g")]
                + [format(p, ".17g") for p in dense[s]]
            )
