"""Closed-form predictions of the per-step expected-surprisal increase.

Two interpretable estimates of the increase from resampling step i to
i+1, both scaling as 1/(2N):

- second-order: a Taylor (Jensen-gap) estimate, (1/2N) * E[CV^2], where
  CV is the coefficient of variation of the word likelihood across
  structures under the current weights;
- linear-diffusion: the total remaining cost (the KL cost of resampling
  forever) spread evenly over the Wright-Fisher fixation time.

Both take the expectation over a caller-supplied sample of weight
vectors: empirical particle states from ``dynamics``, or exact state
distributions from ``oracle``.  Keeping the sample external keeps these
functions deterministic and pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from resurp.model import RENORM_TOLERANCE, ModelSpec, as_distribution

__all__ = [
    "SECOND_ORDER",
    "LINEAR_DIFFUSION",
    "DeltaPrediction",
    "coefficient_of_variation_sq",
    "second_order_delta",
    "fixation_time",
    "linear_diffusion_delta",
]

SECOND_ORDER = "second_order"
LINEAR_DIFFUSION = "linear_diffusion"

# below this distance from 1, a weight counts as a point mass: the
# (1-w)ln(1-w) fixation term has a removable singularity there
_POINT_MASS_EPS = 1e-15


@dataclass(frozen=True)
class DeltaPrediction:
    """A predicted surprisal increase for one resampling step."""

    kind: str
    step: int
    value: float


def _weight_rows(sample, k: int) -> np.ndarray:
    """Validate a collection of weight vectors as a (m, k) array."""
    rows = np.atleast_2d(np.asarray(sample, dtype=float))
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise ValueError(f"weights sample must be a non-empty collection, got shape {rows.shape}")
    if rows.shape[1] != k:
        raise ValueError(f"weights have length {rows.shape[1]}, spec has K={k}")
    if np.any(rows < 0.0) or not np.all(np.isfinite(rows)):
        raise ValueError("weights must be finite and nonnegative")
    totals = rows.sum(axis=1)
    if np.any(np.abs(totals - 1.0) > RENORM_TOLERANCE):
        raise ValueError("a sampled weight vector does not sum to 1")
    return rows / totals[:, None]


def _cv_sq_rows(spec: ModelSpec, rows: np.ndarray) -> np.ndarray:
    mean = rows @ spec.likelihood
    var = np.clip(rows @ (spec.likelihood**2) - mean**2, 0.0, None)
    out = np.full(rows.shape[0], math.inf)
    ok = mean > 0.0
    out[ok] = var[ok] / mean[ok] ** 2
    return out


def coefficient_of_variation_sq(spec: ModelSpec, weights) -> float:
    """Squared coefficient of variation of the word likelihood under ``weights``.

    Var(Q)/E[Q]^2 with moments taken across structures; +inf when the
    mean word probability is 0.
    """
    w = as_distribution(weights, name="weights")
    return float(_cv_sq_rows(spec, w[None, :])[0])


def second_order_delta(
    spec: ModelSpec, weights_sample, n: int, *, step: int = 0
) -> DeltaPrediction:
    """Taylor estimate of the surprisal increase: (1/2n) * mean of CV^2 over the sample.

    ``weights_sample`` is a collection of weight vectors (e.g. the
    empirical particle states at the step of interest); +inf sample
    members (zero marginal) propagate to the prediction.
    """
    if n < 1:
        raise ValueError(f"particle count must be >= 1, got {n}")
    rows = _weight_rows(weights_sample, spec.k)
    return DeltaPrediction(
        kind=SECOND_ORDER, step=step, value=float(_cv_sq_rows(spec, rows).mean()) / (2 * n)
    )


def fixation_time(weights, n: int) -> float:
    """Wright-Fisher diffusion estimate of the expected steps to absorption.

    -2n * sum_T (1 - w_T) ln(1 - w_T); a structure with all the weight
    contributes 0 (already converged).
    """
    if n < 1:
        raise ValueError(f"particle count must be >= 1, got {n}")
    w = as_distribution(weights, name="weights")
    rem = 1.0 - w
    keep = rem > _POINT_MASS_EPS
    return float(-2 * n * np.sum(rem[keep] * np.log(rem[keep])))


def _ld_ratio_rows(spec: ModelSpec, rows: np.ndarray) -> np.ndarray:
    """Per-row KL cost over unscaled fixation entropy; point-mass rows are 0 by definition."""
    out = np.zeros(rows.shape[0])
    live = rows.max(axis=1) <= 1.0 - _POINT_MASS_EPS
    if not live.any():
        return out
    w = rows[live]
    marg = w @ spec.likelihood
    with np.errstate(divide="ignore", invalid="ignore"):
        post = spec.likelihood * w / marg[:, None]
        terms = np.where(w > 0.0, w * (np.log(w) - np.log(post)), 0.0)
        rem = 1.0 - w
        den = np.where(rem > _POINT_MASS_EPS, -rem * np.log(np.where(rem > 0, rem, 1.0)), 0.0)
    kl = terms.sum(axis=1)
    kl[marg == 0.0] = math.inf
    out[live] = kl / den.sum(axis=1)
    return out


def linear_diffusion_delta(
    spec: ModelSpec, weights_sample, n: int, *, step: int = 0
) -> DeltaPrediction:
    """Diffusion estimate: mean over the sample of KL cost / fixation time.

    Sample members that are point masses contribute 0 (a single
    maintained structure pins the surprisal); zero-marginal members
    propagate +inf, matching the KL-cost rules.
    """
    if n < 1:
        raise ValueError(f"particle count must be >= 1, got {n}")
    rows = _weight_rows(weights_sample, spec.k)
    value = float(_ld_ratio_rows(spec, rows).mean()) / (2 * n)
    return DeltaPrediction(kind=LINEAR_DIFFUSION, step=step, value=value)
