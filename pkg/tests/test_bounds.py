"""Tests for worst-case VaR and ES."""
import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from bounds_app import bounds
from bounds_app.distributions import (Exponential, Gamma, LogNormal,
                                      MarginVector, Pareto, PointMass,
                                      Uniform, Weibull)
from bounds_app.mixtures import DoublyStochasticMatrix, quantile_mixture
from bounds_app.rearrangement import RearrangementOptions, ra_lower_bound

FAST = bounds.OptimizerOptions(restarts=4, seed=7, max_evals=2000)
PARETO_MARGINS = MarginVector((Pareto(3, 1), Pareto(3, 2), Pareto(3, 3)))
UNIFORM_MARGINS = MarginVector((Uniform(0, 1),) * 3)
POINT_MARGINS = MarginVector((PointMass(1), PointMass(-2), PointMass(4.5)))
PARETO_LOWER = 6 * 0.05 ** (-1 / 3)
PARETO_UPPER = 1.5 * PARETO_LOWER


class TestDualObjective(SimpleTestCase):
    """Test the dual objective."""

    def test_zero_beta_is_es_sum(self):
        """beta = 0 gives the sum of the margins' ES."""
        value = bounds.dual_objective(0.95, PARETO_MARGINS, bounds.BetaVector.zeros(3))
        self.assertAlmostEqual(value, bounds.worst_case_es(0.95, PARETO_MARGINS), places=10)

    def test_closed_form_against_quadrature(self):
        """Closed-form Pareto integrals agree with quadrature."""
        beta = (0.1, 0.1, 0.1)
        value = bounds.dual_objective(0.95, PARETO_MARGINS, beta)
        lower = 0.95 + 0.05 * 0.2
        upper = 1 - 0.05 * 0.1
        numeric = sum(
            margin.numeric_quantile_integral(lower, upper) for margin in PARETO_MARGINS
        ) / (0.05 * 0.7)
        self.assertTrue(math.isfinite(value))
        self.assertAlmostEqual(value, numeric, places=8)

    def test_infinite_mean_margin_needs_positive_beta(self):
        """An infinite-mean margin with beta_i = 0 makes the objective infinite."""
        margins = MarginVector((Pareto(1 / 3, 1), Pareto(3, 1)))
        self.assertEqual(bounds.dual_objective(0.95, margins, (0.0, 0.1)), math.inf)
        self.assertTrue(math.isfinite(bounds.dual_objective(0.95, margins, (0.1, 0.1))))

    def test_invalid_beta(self):
        """Beta must lie in B_n and match the dimension."""
        for beta in ((0.5, 0.6, 0.0), (-0.1, 0.1, 0.1), (0.1, 0.1)):
            with self.assertRaises(ValidationError):
                bounds.dual_objective(0.95, PARETO_MARGINS, beta)


class TestWorstCaseVaR(SimpleTestCase):
    """Test worstCaseVaR on anchored cases."""

    def test_uniform_margins(self):
        """Equal uniforms reach the ES sum 3 (1 + p) / 2."""
        result = bounds.worst_case_var(0.95, UNIFORM_MARGINS, FAST)
        self.assertAlmostEqual(result.value, 2.925, delta=1e-6)
        self.assertIs(result.exactness, bounds.Exactness.EXACT)
        self.assertIs(result.method, bounds.Method.DUAL_EXACT)

    def test_point_masses(self):
        """Degenerate margins give the sum of the atoms."""
        result = bounds.worst_case_var(0.5, POINT_MARGINS, FAST)
        self.assertAlmostEqual(result.value, 3.5, places=10)
        self.assertTrue(result.converged)

    def test_pareto_sandwich(self):
        """Pareto(3) margins lie between the comonotonic VaR and the ES sum."""
        result = bounds.worst_case_var(0.95, PARETO_MARGINS, FAST)
        self.assertGreaterEqual(result.value, PARETO_LOWER - 1e-6)
        self.assertLessEqual(result.value, PARETO_UPPER + 1e-6)
        self.assertTrue(result.converged)
        beta = bounds.BetaVector(result.beta_star)
        self.assertLess(beta.total, 1)

    def test_rearrangement_below_dual(self):
        """The rearrangement estimate does not exceed the dual value."""
        dual = bounds.worst_case_var(0.95, PARETO_MARGINS, FAST).value
        lower = ra_lower_bound(0.95, PARETO_MARGINS, RearrangementOptions(n=2000)).lower_var
        self.assertLessEqual(lower, dual * (1 + 1e-3))
        self.assertGreater(lower, PARETO_LOWER)

    def test_mixed_classes_are_upper_bounds(self):
        """Non-monotone p-tails make the dual value an upper bound."""
        margins = MarginVector((Gamma(5, 1), Weibull(1, 5)))
        result = bounds.worst_case_var(0.01, margins, FAST)
        self.assertIs(result.exactness, bounds.Exactness.UPPER_BOUND)
        self.assertIs(result.method, bounds.Method.DUAL_UPPER_BOUND)

    def test_invalid_level(self):
        """p must lie in (0, 1)."""
        with self.assertRaises(ValidationError):
            bounds.worst_case_var(1.0, UNIFORM_MARGINS, FAST)

    def test_deterministic(self):
        """Equal seeds reproduce the value."""
        first = bounds.worst_case_var(0.9, PARETO_MARGINS, FAST)
        second = bounds.worst_case_var(0.9, PARETO_MARGINS, FAST)
        self.assertEqual(first.value, second.value)
        self.assertEqual(first.beta_star, second.beta_star)


class TestWorstCaseES(SimpleTestCase):
    """Test worstCaseES."""

    def test_pareto(self):
        """Sum of closed-form Pareto ES values."""
        self.assertAlmostEqual(
            bounds.worst_case_es(0.95, PARETO_MARGINS), PARETO_UPPER, places=10,
        )

    def test_uniform_and_point_masses(self):
        """Uniform ES (1 + p) / 2 and atoms."""
        self.assertAlmostEqual(bounds.worst_case_es(0.95, UNIFORM_MARGINS), 2.925, places=12)
        self.assertAlmostEqual(bounds.worst_case_es(0.3, POINT_MARGINS), 3.5, places=12)

    def test_infinite_mean(self):
        """An infinite-mean margin gives an infinite ES."""
        margins = MarginVector((Pareto(0.5, 1), Uniform(0, 1)))
        self.assertEqual(bounds.worst_case_es(0.5, margins), math.inf)
        self.assertEqual(bounds.worst_case_es_result(0.5, margins).as_dict()['value'], 'inf')


class TestParetoBounds(SimpleTestCase):
    """Test the analytic Pareto sandwich."""

    def test_values(self):
        """alpha = 3, theta = (1, 2, 3), p = 0.95."""
        lower, upper = bounds.pareto_var_bounds(0.95, 3, (1, 2, 3))
        self.assertAlmostEqual(lower, 16.2865, places=4)
        self.assertAlmostEqual(upper, 24.4298, places=4)

    def test_ratio(self):
        """upper / lower = alpha / (alpha - 1)."""
        lower, upper = bounds.pareto_var_bounds(0.5, 100, (1, 1))
        self.assertAlmostEqual(upper / lower, 100 / 99, places=12)

    def test_invalid(self):
        """alpha <= 1 and non-positive scales are rejected."""
        with self.assertRaises(ValidationError):
            bounds.pareto_var_bounds(0.95, 1, (1, 2))
        with self.assertRaises(ValidationError):
            bounds.pareto_var_bounds(0.95, 3, (1, 0))


class TestEssentialInfimum(SimpleTestCase):
    """Test the p -> 0 limit."""

    def test_point_masses(self):
        """Atoms sum up."""
        result = bounds.essential_infimum_worst_case(POINT_MARGINS, FAST)
        self.assertAlmostEqual(result.value, 3.5, places=10)

    def test_pareto_pair(self):
        """Two Pareto(2, 1) margins: above both minima, below the sum of means."""
        margins = MarginVector((Pareto(2, 1), Pareto(2, 1)))
        result = bounds.essential_infimum_worst_case(margins, FAST)
        self.assertGreaterEqual(result.value, 2.0)
        self.assertLessEqual(result.value, 4.0 + 1e-9)


class TestLocationScale(SimpleTestCase):
    """Test location-scale families."""

    def test_shift_is_added(self):
        """Shifts add to the worst-case value."""
        result = bounds.location_scale_worst_case(0.95, Uniform(0, 1), (1, 1, 1), (1, 2, 3), FAST)
        self.assertAlmostEqual(result.value, 8.925, delta=1e-6)
        self.assertEqual(result.extra, {'shift': 6.0})

    def test_margins(self):
        """T_x(F^lambda) margins."""
        margins = bounds.location_scale_margins(Exponential(1), (2, 0.5), (1, 0))
        self.assertAlmostEqual(margins[0].quantile(0.5), 1 + 2 * math.log(2), places=9)
        self.assertEqual(margins[1], Exponential(2))
        with self.assertRaises(ValidationError):
            bounds.location_scale_margins(Exponential(1), (1, 1), (0,))

    def test_diversified_scales_dominate(self):
        """gam majorized by lam gives a larger worst-case VaR."""
        comparison = bounds.compare_location_scale(
            0.9, Exponential(1), (0.7, 0.2, 0.1), (0, 0, 0), (1 / 3, 1 / 3, 1 / 3), (0, 0, 0), FAST,
        )
        self.assertTrue(comparison['hypotheses'])
        self.assertTrue(comparison['holds'])


class TestBoundResult(SimpleTestCase):
    """Test serialisation of results."""

    def test_as_dict(self):
        """Enums become strings and beta a list."""
        result = bounds.BoundResult(
            value=1.5,
            method=bounds.Method.DUAL_EXACT,
            exactness=bounds.Exactness.EXACT,
            beta_star=(0.1, 0.2),
        )
        payload = result.as_dict()
        self.assertEqual(payload['method'], 'dualExact')
        self.assertEqual(payload['exactness'], 'exact')
        self.assertEqual(payload['beta_star'], [0.1, 0.2])
        self.assertEqual(payload['value'], 1.5)


def create_slack_test(slack):
    """
    Create a test method for the dual objective close to the edge of B_n.

    Args:
        slack (float): 1 minus the sum of beta.

    Returns:
        test: A test method comparing the objective with its limit 2 VaR_0.95 of Exp(1).
    """

    def test(self):
        margins = MarginVector((Exponential(1), Exponential(1)))
        value = bounds.dual_objective(0.9, margins, (0.5, 0.5 - slack))
        self.assertAlmostEqual(value, 2 * math.log(20), delta=1e-4)

    return test


slack_methods = {
    f'test_slack_{index}': create_slack_test(slack)
    for index, slack in enumerate((1e-6, 1e-9, 2e-12))
}
TestObjectiveSlack = type('TestObjectiveSlack', (SimpleTestCase,), slack_methods)


class TestObjectiveNearEdge(SimpleTestCase):
    """The objective tends to the sum of quantiles at the upper limits."""

    def test_concentrated_margin(self):
        """Beta close to (1, 0, 0) leaves the VaR of the only random margin."""
        margins = MarginVector((Exponential(1), PointMass(0), PointMass(0)))
        value = bounds.dual_objective(0.9, margins, (1 - 2e-12, 0.0, 0.0))
        self.assertAlmostEqual(value, math.log(10), places=9)

    def test_unbounded_margin_with_zero_beta(self):
        """A vanishing slack does not make the objective collapse to zero."""
        value = bounds.dual_objective(0.95, PARETO_MARGINS, (0.5, 0.5 - 1e-6, 0.0))
        self.assertGreater(value, PARETO_UPPER)

    def test_limit_is_reported_by_the_search(self):
        """The optimizer may approach the edge without losing the value."""
        result = bounds.worst_case_var(
            0.9, MarginVector((Exponential(1), PointMass(0), PointMass(0))), FAST,
        )
        self.assertAlmostEqual(result.value, math.log(10), delta=0.02)
        self.assertLess(sum(result.beta_star), 1)


def create_agreement_test(values, best, expected):
    """
    Create a test method for the restart agreement rule.

    Args:
        values (tuple): Final values of the restarts.
        best (float): Best value found overall.
        expected (bool): Whether the search counts as converged.

    Returns:
        test: A test method for restarts_agree.
    """

    def test(self):
        self.assertIs(bounds.restarts_agree(values, best), expected)

    return test


agreement_data = (
    ((1.0, 1.0 + 1e-6, 2.0), 1.0, True),
    ((1.0, 1.5, 2.0), 1.0, False),
    ((1.0, 1.3), 0.999, False),
    ((3.0, math.inf, 3.0), 3.0, True),
    ((math.inf, math.inf), math.inf, True),
    ((0.0, 1e-5), 0.0, True),
)
agreement_methods = {
    f'test_agreement_{index}': create_agreement_test(*args)
    for index, args in enumerate(agreement_data)
}
TestRestartAgreement = type('TestRestartAgreement', (SimpleTestCase,), agreement_methods)


def create_homogeneity_test(factor):
    """
    Create a test method for VaR(lambda F) = lambda VaR(F) on Pareto margins.

    Args:
        factor (float): Common multiplier of the Pareto scales.

    Returns:
        test: A test method comparing both sides.
    """

    def test(self):
        base = bounds.worst_case_var(0.95, PARETO_MARGINS, FAST).value
        scaled = MarginVector(tuple(Pareto(3, factor * theta) for theta in (1, 2, 3)))
        value = bounds.worst_case_var(0.95, scaled, FAST).value
        self.assertLess(abs(value - factor * base) / value, 1e-5)

    return test


homogeneity_methods = {
    f'test_factor_{index}': create_homogeneity_test(factor)
    for index, factor in enumerate((0.5, 5, 20))
}
TestHomogeneity = type('TestHomogeneity', (SimpleTestCase,), homogeneity_methods)

DECREASING_MARGINS = (Pareto(3, 1), Exponential(0.5), Weibull(1, 0.5))


def create_permutation_test(order):
    """
    Create a test method for invariance under reordering the margins.

    Args:
        order (tuple): Permutation of the margin indices.

    Returns:
        test: A test method comparing the reordered worst case with the original one.
    """

    def test(self):
        original = bounds.worst_case_var(0.95, MarginVector(DECREASING_MARGINS), FAST).value
        permuted = MarginVector(tuple(DECREASING_MARGINS[index] for index in order))
        value = bounds.worst_case_var(0.95, permuted, FAST).value
        self.assertAlmostEqual(value, original, delta=1e-6 * max(1.0, abs(original)))

    return test


permutation_methods = {
    f'test_order_{index}': create_permutation_test(order)
    for index, order in enumerate(((2, 1, 0), (1, 2, 0), (0, 2, 1)))
}
TestPermutationInvariance = type(
    'TestPermutationInvariance', (SimpleTestCase,), permutation_methods,
)

FINITE_MEAN_FAMILIES = (
    lambda rng: Pareto(rng.uniform(1.5, 6), rng.uniform(0.5, 3)),
    lambda rng: Exponential(rng.uniform(0.2, 3)),
    lambda rng: Gamma(rng.uniform(0.5, 5), rng.uniform(0.5, 2)),
    lambda rng: Weibull(rng.uniform(0.5, 2), rng.uniform(0.5, 4)),
    lambda rng: LogNormal(rng.uniform(-1, 1), rng.uniform(0.2, 1.2)),
    lambda rng: Uniform(0, rng.uniform(0.5, 4)),
)


def random_margins(seed):
    """Level and 2, 3 or 5 finite-mean margins drawn from the families above."""
    rng = np.random.default_rng(seed)
    n = (2, 3, 5)[seed % 3]
    families = rng.integers(len(FINITE_MEAN_FAMILIES), size=n)
    margins = MarginVector(tuple(FINITE_MEAN_FAMILIES[index](rng) for index in families))
    return float(rng.uniform(0.5, 0.99)), margins


def create_zero_beta_test(seed):
    """
    Create a test method for the objective at beta = 0 on random margins.

    Args:
        seed (int): Seed of the random margin vector.

    Returns:
        test: A test method comparing the objective with the ES sum.
    """

    def test(self):
        p, margins = random_margins(seed)
        value = bounds.dual_objective(p, margins, bounds.BetaVector.zeros(margins.n))
        expected = bounds.worst_case_es(p, margins)
        self.assertLessEqual(abs(value - expected), 1e-9 * max(1.0, abs(expected)))

    return test


zero_beta_methods = {f'test_seed_{seed}': create_zero_beta_test(seed) for seed in range(20)}
TestZeroBetaIsESSum = type('TestZeroBetaIsESSum', (SimpleTestCase,), zero_beta_methods)


class TestParetoMonotonicity(SimpleTestCase):
    """The Pareto worst case decreases in alpha and increases in every scale."""

    def test_decreasing_in_alpha(self):
        """alpha = 1.5, 3, 10 with theta = (1, 2, 3)."""
        values = [
            bounds.worst_case_var(
                0.95, MarginVector(tuple(Pareto(alpha, theta) for theta in (1, 2, 3))), FAST,
            ).value
            for alpha in (1.5, 3, 10)
        ]
        self.assertGreater(values[0], values[1])
        self.assertGreater(values[1], values[2])

    def test_increasing_in_scales(self):
        """Raising any one scale raises the worst case."""
        base = bounds.worst_case_var(0.95, PARETO_MARGINS, FAST).value
        for index in range(3):
            thetas = [1.0, 2.0, 3.0]
            thetas[index] += 0.5
            margins = MarginVector(tuple(Pareto(3, theta) for theta in thetas))
            self.assertGreater(bounds.worst_case_var(0.95, margins, FAST).value, base)


def create_uniform_test(p):
    """
    Create a test method for averaging uniform margins with the flat matrix.

    Args:
        p (float): Probability level.

    Returns:
        test: A test method checking VaR(F) <= VaR of the averaged quantiles.
    """

    def test(self):
        margins = MarginVector((Uniform(0, 1), Uniform(0, 3), Uniform(1, 2)))
        averaged = quantile_mixture(DoublyStochasticMatrix.uniform(3), margins)
        original = bounds.worst_case_var(p, margins, FAST).value
        mixed = bounds.worst_case_var(p, averaged, FAST).value
        self.assertLessEqual(original, mixed + 1e-6 * max(1.0, abs(mixed)))
        # three copies of U(1/3, 2) mix completely in the tail
        self.assertAlmostEqual(mixed, 3 * (1 / 3 + 5 / 3 * (1 + p) / 2), delta=1e-6)

    return test


uniform_methods = {
    f'test_level_{index}': create_uniform_test(p) for index, p in enumerate((0.5, 0.9, 0.95))
}
TestUniformAveraging = type('TestUniformAveraging', (SimpleTestCase,), uniform_methods)
