"""Long-running checks on the shipped experiment configs."""
from dataclasses import replace

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, tag

from bounds_app import experiments
from bounds_app.bounds import OptimizerOptions, worst_case_var
from bounds_app.management.base import build, read_json
from bounds_app.rearrangement import RearrangementOptions, ra_lower_bound
from bounds_app.serializers import ExperimentConfigSerializer

SWEEP_BUDGET = OptimizerOptions(restarts=6, seed=42, max_evals=3000)


def load_config(name):
    """ExperimentConfig of configs/<name>.json."""
    path = settings.BASE_DIR / 'configs' / f'{name}.json'
    return build(ExperimentConfigSerializer, read_json(path))


def create_verdict_test(name, expected):
    """
    Create a test method for the monotonicity verdict of a shipped config.

    Args:
        name (str): Config name under configs/.
        expected (bool): Whether a decrease beyond the noise band is expected.

    Returns:
        test: A test method running the repeated rearrangement sweep.
    """

    def test(self):
        config = replace(load_config(name), kinds=(experiments.QUANTILE,))
        frame, verdict = experiments.run_monotonicity_check(config)
        self.assertIs(verdict, expected)
        self.assertEqual(list(frame['k']), list(config.k_list))
        self.assertTrue((frame['seeds'] == config.seeds).all())

    return test


verdict_data = (
    ('binomial_gamma_weibull', True),
    ('decreasing_densities', False),
)
verdict_methods = {
    f'test_{name}': create_verdict_test(name, expected) for name, expected in verdict_data
}
TestMonotonicityVerdict = tag('slow')(
    type('TestMonotonicityVerdict', (SimpleTestCase,), verdict_methods),
)


@tag('slow')
class TestParetoSweeps(SimpleTestCase):
    """Both mixture curves over k = 0..10 for Pareto margins with alpha = 3 and 1/3."""

    names = ('pareto_finite_mean', 'pareto_infinite_mean')

    @classmethod
    def setUpClass(cls):
        """Run the dual sweeps once."""
        super().setUpClass()
        cls.frames = {
            name: experiments.run_sweep(
                replace(load_config(name), engines=('dual',), optimizer=SWEEP_BUDGET),
            )
            for name in cls.names
        }

    def curve(self, name, kind) -> np.ndarray:
        """Values of one curve ordered by k."""
        frame = self.frames[name]
        rows = frame[frame['kind'] == kind].sort_values('k')
        return rows['value'].to_numpy(dtype=float)

    def test_all_cells_computed(self):
        """Eleven powers, two kinds, no engine failures."""
        for frame in self.frames.values():
            self.assertEqual(len(frame), 22)
            self.assertEqual(set(frame['error']), {''})

    def test_curves_nondecreasing(self):
        """Mixing never lowers the worst-case VaR for Pareto margins."""
        for name in self.names:
            for kind in experiments.KINDS:
                self.assertTrue(
                    experiments.curve_is_nondecreasing(self.frames[name], kind, 'dual', rtol=1e-6),
                    msg=f'{name} {kind}',
                )

    def test_power_zero_coincides(self):
        """At k = 0 both curves start from the same value."""
        for name in self.names:
            quantile = self.curve(name, experiments.QUANTILE)[0]
            distribution = self.curve(name, experiments.DISTRIBUTION)[0]
            self.assertAlmostEqual(quantile, distribution, delta=1e-6 * quantile)

    def test_finite_mean_distribution_curve_on_top(self):
        """With alpha = 3 the distribution mixture gives the larger value for k >= 1."""
        quantile = self.curve('pareto_finite_mean', experiments.QUANTILE)
        distribution = self.curve('pareto_finite_mean', experiments.DISTRIBUTION)
        for k in range(1, 11):
            self.assertGreaterEqual(distribution[k], quantile[k] * (1 - 1e-6), msg=f'k={k}')

    def test_infinite_mean_chain(self):
        """With alpha = 1/3: VaR(F) <= VaR(L^k F) <= VaR(L^k (x) F)."""
        quantile = self.curve('pareto_infinite_mean', experiments.QUANTILE)
        distribution = self.curve('pareto_infinite_mean', experiments.DISTRIBUTION)
        for k in range(11):
            self.assertLessEqual(quantile[0], distribution[k] * (1 + 1e-6), msg=f'k={k}')
            self.assertLessEqual(distribution[k], quantile[k] * (1 + 1e-6), msg=f'k={k}')
        self.assertGreater(quantile[10], distribution[10])
        self.assertGreater(quantile[10], quantile[0])


def create_sandwich_test(kind, k):
    """
    Create a test method comparing the rearrangement estimate with the dual value.

    Args:
        kind (str): Mixture kind.
        k (int): Power of the mixing matrix.

    Returns:
        test: A test method checking RA <= dual within 1e-4 and a gap below 1e-2, relative.
    """

    def test(self):
        config = load_config('pareto_finite_mean')
        margins = experiments.mixed_margins(config, k, kind)
        dual = worst_case_var(config.p, margins, SWEEP_BUDGET).value
        lower = ra_lower_bound(config.p, margins, RearrangementOptions(n=10 ** 4)).lower_var
        self.assertLessEqual(lower, dual * (1 + 1e-4))
        self.assertLess((dual - lower) / dual, 1e-2)

    return test


sandwich_data = (
    (experiments.QUANTILE, 0),
    (experiments.QUANTILE, 5),
    (experiments.QUANTILE, 10),
    (experiments.DISTRIBUTION, 10),
)
sandwich_methods = {
    f'test_{kind}_{k}': create_sandwich_test(kind, k) for kind, k in sandwich_data
}
TestRearrangementSandwich = tag('slow')(
    type('TestRearrangementSandwich', (SimpleTestCase,), sandwich_methods),
)
