"""Tests for the closed-form model quantities.

Hand-derived expected values are frozen from 40-digit mpmath evaluations
of the defining formulas (see docstrings of the individual tests); the
running example is the two-structure garden-path setup with word
likelihoods Q = (0.004, 0.5) and priors (0.8, 0.2) / (0.2, 0.8).
"""

import math

import numpy as np
import pytest

from resurp.model import (
    ModelSpec,
    ParseFailureError,
    as_distribution,
    asymptotic_expected_surprisal,
    bayes_posterior,
    kl_cost,
    kl_divergence,
    marginal_word_prob,
    surprisal,
)

AMB = ModelSpec(prior=[0.8, 0.2], likelihood=[0.004, 0.5])
UNAMB = ModelSpec(prior=[0.2, 0.8], likelihood=[0.004, 0.5])


def random_spec(rng, k=None, q_low=0.01):
    """Random valid spec: Dirichlet prior, likelihoods bounded away from 0."""
    k = k if k is not None else int(rng.integers(2, 6))
    prior = rng.dirichlet(np.ones(k))
    likelihood = rng.uniform(q_low, 1.0, size=k)
    return ModelSpec(prior=prior, likelihood=likelihood)


class TestValidation:
    def test_prior_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ModelSpec(prior=[0.5, 0.4], likelihood=[0.1, 0.2])

    def test_small_drift_is_renormalized(self):
        spec = ModelSpec(prior=[0.3, 0.7 + 2e-10], likelihood=[0.1, 0.2])
        assert spec.prior.sum() == pytest.approx(1.0, abs=1e-12)

    def test_large_drift_is_rejected(self):
        with pytest.raises(ValueError):
            as_distribution([0.3, 0.7 + 1e-6])

    def test_entries_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError):
            as_distribution([1.2, -0.2])

    def test_likelihood_length_mismatch(self):
        with pytest.raises(ValueError):
            ModelSpec(prior=[0.5, 0.5], likelihood=[0.1, 0.2, 0.3])

    def test_zero_likelihood_needs_flag(self):
        with pytest.raises(ValueError):
            ModelSpec(prior=[0.5, 0.5], likelihood=[0.0, 0.5])
        spec = ModelSpec(prior=[0.5, 0.5], likelihood=[0.0, 0.5], allow_parse_failure=True)
        assert spec.likelihood[0] == 0.0

    def test_default_structure_labels(self):
        assert AMB.structures == ("T1", "T2")

    def test_vectors_are_immutable(self):
        with pytest.raises(ValueError):
            AMB.prior[0] = 0.5


class TestMarginalWordProb:
    def test_amb_fig_parameters(self):
        # 0.8*0.004 + 0.2*0.5, exact decimal
        assert marginal_word_prob(AMB, [0.8, 0.2]) == pytest.approx(0.1032, abs=1e-15)

    def test_unamb_fig_parameters(self):
        assert marginal_word_prob(UNAMB, [0.2, 0.8]) == pytest.approx(0.4008, abs=1e-15)

    def test_constant_likelihood_gives_q(self):
        spec = ModelSpec(prior=[0.5, 0.5], likelihood=[0.3, 0.3])
        for w in ([0.1, 0.9], [0.5, 0.5], [1.0, 0.0]):
            assert marginal_word_prob(spec, w) == pytest.approx(0.3, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            marginal_word_prob(AMB, [0.2, 0.3, 0.5])

    def test_linearity_in_weights(self):
        """Marginalization is linear: M(a*w1 + (1-a)*w2) == a*M1 + (1-a)*M2."""
        rng = np.random.default_rng(7)
        for _ in range(200):
            spec = random_spec(rng)
            w1 = rng.dirichlet(np.ones(spec.k))
            w2 = rng.dirichlet(np.ones(spec.k))
            a = rng.uniform()
            mixed = marginal_word_prob(spec, a * w1 + (1 - a) * w2)
            parts = a * marginal_word_prob(spec, w1) + (1 - a) * marginal_word_prob(spec, w2)
            assert mixed == pytest.approx(parts, abs=1e-12)


class TestSurprisal:
    def test_amb_marginal(self):
        # -ln(0.1032) = 2.2710864259346747 (mpmath, 40 digits)
        assert surprisal(0.1032) == pytest.approx(2.2710864259346747, abs=1e-12)

    def test_certain_word(self):
        assert surprisal(1.0) == 0.0

    def test_impossible_word_is_infinite(self):
        assert surprisal(0.0) == math.inf

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            surprisal(-0.1)
        with pytest.raises(ValueError):
            surprisal(1.1)

    def test_float_spill_above_one_is_clamped(self):
        assert surprisal(1.0 + 1e-13) == 0.0


class TestBayesPosterior:
    def test_amb_update(self):
        # (0.0032, 0.1) / 0.1032
        post = bayes_posterior(AMB, [0.8, 0.2])
        np.testing.assert_allclose(
            post, [0.031007751937984496, 0.9689922480620155], atol=1e-15
        )

    def test_uninformative_word_keeps_prior(self):
        spec = ModelSpec(prior=[0.5, 0.5], likelihood=[0.2, 0.2])
        for a in (0.1, 0.37, 0.9):
            np.testing.assert_allclose(bayes_posterior(spec, [a, 1 - a]), [a, 1 - a], atol=1e-15)

    def test_degenerate_weights_are_fixed_point(self):
        np.testing.assert_allclose(bayes_posterior(AMB, [1.0, 0.0]), [1.0, 0.0], atol=0)

    def test_zero_marginal_raises(self):
        spec = ModelSpec(prior=[0.5, 0.5], likelihood=[0.0, 0.5], allow_parse_failure=True)
        with pytest.raises(ParseFailureError):
            bayes_posterior(spec, [1.0, 0.0])

    def test_normalization_randomized(self):
        """Posterior sums to 1 within 1e-12 across 10^4 random specs."""
        rng = np.random.default_rng(11)
        for _ in range(10_000):
            spec = random_spec(rng)
            w = rng.dirichlet(np.ones(spec.k))
            post = bayes_posterior(spec, w)
            assert abs(post.sum() - 1.0) <= 1e-12
            assert np.all(post >= 0.0)


class TestKLDivergence:
    def test_identical_distributions(self):
        assert kl_divergence([0.8, 0.2], [0.8, 0.2]) == 0.0

    def test_prior_vs_posterior_amb(self):
        # D((0.8,0.2) || (0.031007..., 0.968992...)) = 2.2847117444671115
        post = bayes_posterior(AMB, [0.8, 0.2])
        assert kl_divergence([0.8, 0.2], post) == pytest.approx(2.2847117444671115, abs=1e-12)

    def test_point_mass_vs_uniform(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_absolute_continuity_violation(self):
        assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_gibbs_inequality_randomized(self):
        """D(p||q) >= 0 with equality iff p == q."""
        rng = np.random.default_rng(13)
        for _ in range(2000):
            k = int(rng.integers(2, 6))
            p = rng.dirichlet(np.ones(k))
            q = rng.dirichlet(np.ones(k))
            d = kl_divergence(p, q)
            assert d >= 0.0
            if not np.allclose(p, q, atol=1e-12):
                assert d > 0.0
            assert kl_divergence(p, p) == 0.0


class TestAsymptoticExpectedSurprisal:
    def test_amb(self):
        # 0.8*(-ln 0.004) + 0.2*(-ln 0.5) = 4.555798170401786
        assert asymptotic_expected_surprisal(AMB, [0.8, 0.2]) == pytest.approx(
            4.555798170401786, abs=1e-12
        )

    def test_unamb(self):
        # 0.2*(-ln 0.004) + 0.8*(-ln 0.5) = 1.6588099280204055
        assert asymptotic_expected_surprisal(UNAMB, [0.2, 0.8]) == pytest.approx(
            1.6588099280204055, abs=1e-12
        )

    def test_single_maintained_structure(self):
        assert asymptotic_expected_surprisal(AMB, [0.0, 1.0]) == pytest.approx(
            -math.log(0.5), abs=1e-15
        )

    def test_infinite_when_supported_structure_fails(self):
        spec = ModelSpec(prior=[0.5, 0.5], likelihood=[0.0, 0.5], allow_parse_failure=True)
        assert asymptotic_expected_surprisal(spec, [0.5, 0.5]) == math.inf
        # no weight on the failing structure: finite
        assert asymptotic_expected_surprisal(spec, [0.0, 1.0]) == pytest.approx(
            -math.log(0.5), abs=1e-15
        )


class TestKLCost:
    def test_amb_value(self):
        # equals 4.555798170401786 - 2.2710864259346747
        assert kl_cost(AMB, [0.8, 0.2]) == pytest.approx(2.2847117444671115, abs=1e-12)

    def test_unamb_value(self):
        # equals 1.6588099280204055 - 0.914292729211482
        assert kl_cost(UNAMB, [0.2, 0.8]) == pytest.approx(0.7445171988089235, abs=1e-12)

    def test_uninformative_word_costs_nothing(self):
        spec = ModelSpec(prior=[0.3, 0.7], likelihood=[0.4, 0.4])
        assert kl_cost(spec, [0.3, 0.7]) == 0.0

    def test_zero_marginal_is_infinite_sentinel(self):
        spec = ModelSpec(prior=[0.5, 0.5], likelihood=[0.0, 0.5], allow_parse_failure=True)
        assert kl_cost(spec, [1.0, 0.0]) == math.inf

    def test_composition_contract(self):
        """kl_cost is exactly D(weights || bayes_posterior)."""
        rng = np.random.default_rng(19)
        for _ in range(500):
            spec = random_spec(rng)
            w = rng.dirichlet(np.ones(spec.k))
            assert kl_cost(spec, w) == pytest.approx(
                kl_divergence(w, bayes_posterior(spec, w)), abs=1e-14
            )

    def test_identity_with_asymptote_randomized(self):
        """kl_cost == asymptotic surprisal - current surprisal, both routes independent."""
        rng = np.random.default_rng(17)
        for _ in range(2000):
            spec = random_spec(rng)
            w = rng.dirichlet(np.ones(spec.k))
            lhs = kl_cost(spec, w)
            rhs = asymptotic_expected_surprisal(spec, w) - surprisal(marginal_word_prob(spec, w))
            assert lhs == pytest.approx(rhs, abs=1e-10)
