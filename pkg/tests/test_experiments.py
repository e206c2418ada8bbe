"""Tests for sweeps over powers of the mixing matrix."""
import json
import math
import tempfile
from pathlib import Path

import pandas as pd
from django.test import SimpleTestCase

from bounds_app import experiments
from bounds_app.bounds import OptimizerOptions
from bounds_app.distributions import MarginVector, Pareto, PointMass, Uniform
from bounds_app.mixtures import DoublyStochasticMatrix
from bounds_app.rearrangement import GridKind, RearrangementOptions

FAST = OptimizerOptions(restarts=4, seed=7, max_evals=2000)
MATRIX = DoublyStochasticMatrix.convex_identity_uniform(0.8, 3)
PARETO_CONFIG = experiments.ExperimentConfig(
    name='pareto',
    margins=MarginVector((Pareto(3, 1), Pareto(3, 2), Pareto(3, 3))),
    matrix=MATRIX,
    k_list=(0, 1, 2),
    p=0.95,
    engines=('dual',),
    kinds=(experiments.QUANTILE,),
    optimizer=FAST,
    rearrangement=RearrangementOptions(n=200),
    raw={'name': 'pareto'},
)
POINT_CONFIG = experiments.ExperimentConfig(
    name='atoms',
    margins=MarginVector((PointMass(1), PointMass(-2), PointMass(4.5))),
    matrix=MATRIX,
    k_list=(0, 1, 2, 4),
    p=0.01,
    engines=('ra',),
    kinds=(experiments.QUANTILE,),
    optimizer=FAST,
    rearrangement=RearrangementOptions(n=20),
    seeds=2,
)


def curve(values, noise):
    """Synthetic quantile curve over k = 0, 1, ..."""
    return pd.DataFrame({
        'k': range(len(values)),
        'kind': experiments.QUANTILE,
        'engine': 'ra',
        'value': values,
        'noise': noise,
    })


class TestRunSweep(SimpleTestCase):
    """Test the sweep table."""

    @classmethod
    def setUpClass(cls):
        """Run the Pareto sweep once."""
        super().setUpClass()
        cls.frame = experiments.run_sweep(PARETO_CONFIG)

    def test_shape(self):
        """One row per (k, kind, engine) with the fixed columns."""
        self.assertEqual(tuple(self.frame.columns), experiments.COLUMNS)
        self.assertEqual(len(self.frame), 3)
        self.assertEqual(list(self.frame['k']), [0, 1, 2])

    def test_rows_are_exact_and_converged(self):
        """Pareto margins have decreasing densities."""
        self.assertTrue(self.frame['converged'].all())
        self.assertEqual(set(self.frame['exactness']), {'exact'})
        self.assertEqual(set(self.frame['error']), {''})
        self.assertTrue((self.frame['wall_time_ms'] >= 0).all())

    def test_beta_star_is_serialised(self):
        """Optimal beta is written as a semicolon separated list."""
        for beta_star in self.frame['beta_star']:
            values = [float(token) for token in beta_star.split(';')]
            self.assertEqual(len(values), 3)
            self.assertLess(sum(values), 1)

    def test_quantile_curve_nondecreasing(self):
        """Mixing scales towards equality does not lower the worst-case VaR."""
        self.assertTrue(
            experiments.curve_is_nondecreasing(self.frame, experiments.QUANTILE, 'dual', rtol=1e-4),
        )

    def test_deterministic(self):
        """A second run with the same seed reproduces the values."""
        again = experiments.run_sweep(PARETO_CONFIG)
        self.assertEqual(list(again['value']), list(self.frame['value']))


class TestSweepKinds(SimpleTestCase):
    """Test both mixture kinds."""

    def test_power_zero_coincides(self):
        """At k = 0 both mixtures equal F."""
        config = experiments.ExperimentConfig(
            name='k0',
            margins=MarginVector((Pareto(3, 1), Pareto(3, 2), Pareto(3, 3))),
            matrix=MATRIX,
            k_list=(0,),
            p=0.95,
            engines=('dual', 'es'),
            optimizer=FAST,
        )
        frame = experiments.run_sweep(config)
        self.assertEqual(len(frame), 4)
        for engine in ('dual', 'es'):
            rows = frame[frame['engine'] == engine]
            self.assertAlmostEqual(rows['value'].iloc[0], rows['value'].iloc[1], places=9)

    def test_es_is_constant_for_quantile_mixtures(self):
        """ES of a comonotonic sum only sees the column sums of L^k."""
        config = experiments.ExperimentConfig(
            name='es',
            margins=MarginVector((Uniform(0, 1), Uniform(0, 2), Uniform(0, 3))),
            matrix=MATRIX,
            k_list=(0, 1, 3),
            p=0.9,
            engines=('es',),
            kinds=(experiments.QUANTILE,),
        )
        frame = experiments.run_sweep(config)
        for value in frame['value']:
            self.assertAlmostEqual(value, 3 * 0.95 * 2, places=9)

    def test_workers(self):
        """A process pool keeps the row order and the values."""
        config = experiments.ExperimentConfig(
            name='pool',
            margins=MarginVector((Uniform(0, 1), Uniform(0, 2), Uniform(0, 3))),
            matrix=MATRIX,
            k_list=(0, 1, 2),
            p=0.9,
            engines=('es',),
        )
        serial = experiments.run_sweep(config, workers=1)
        pooled = experiments.run_sweep(config, workers=2)
        self.assertEqual(list(pooled['k']), list(serial['k']))
        self.assertEqual(list(pooled['kind']), list(serial['kind']))
        self.assertEqual(list(pooled['value']), list(serial['value']))


class TestComputeRow(SimpleTestCase):
    """Test a single cell."""

    def test_engine_failure_is_recorded(self):
        """An unbounded upper grid is reported in the error column."""
        config = experiments.ExperimentConfig(
            name='failing',
            margins=MarginVector((Pareto(3, 1), Pareto(3, 2), Pareto(3, 3))),
            matrix=MATRIX,
            k_list=(0,),
            p=0.5,
            engines=('ra',),
            rearrangement=RearrangementOptions(n=10, grid=GridKind.UPPER),
        )
        row = experiments.compute_row((config, 0, experiments.QUANTILE, 'ra'))
        self.assertTrue(math.isnan(row['value']))
        self.assertFalse(row['converged'])
        self.assertIn('unbounded', row['error'])

    def test_mixed_margins(self):
        """k = 0 returns F for both kinds."""
        for kind in experiments.KINDS:
            margins = experiments.mixed_margins(PARETO_CONFIG, 0, kind)
            self.assertEqual(margins.margins, PARETO_CONFIG.margins.margins)


class TestMonotonicityCheck(SimpleTestCase):
    """Test the repeated rearrangement curve and its verdict."""

    def test_point_masses(self):
        """Constant sums give a flat, noiseless curve."""
        frame, verdict = experiments.run_monotonicity_check(POINT_CONFIG)
        self.assertFalse(verdict)
        self.assertEqual(tuple(frame.columns), experiments.CHECK_COLUMNS)
        self.assertEqual(list(frame['k']), [0, 1, 2, 4])
        self.assertEqual(set(frame['seeds']), {2})
        for value, noise in zip(frame['value'], frame['noise']):
            self.assertAlmostEqual(value, 3.5, places=9)
            self.assertAlmostEqual(noise, 0.0, places=9)

    def test_clear_decrease(self):
        """A drop larger than the noise band is detected."""
        self.assertTrue(experiments.non_monotone(curve([1.0, 2.0, 1.5], [0.0, 0.0, 0.0])))

    def test_drop_within_noise(self):
        """A drop inside three times the combined noise is ignored."""
        self.assertFalse(experiments.non_monotone(curve([1.0, 2.0, 1.5], [0.1, 0.1, 0.1])))

    def test_rows_are_sorted_by_k(self):
        """The verdict follows k, not row order."""
        frame = curve([1.0, 2.0, 3.0], [0.0, 0.0, 0.0]).iloc[::-1]
        self.assertFalse(experiments.non_monotone(frame))

    def test_nondecreasing_helper(self):
        """Relative tolerance of the nondecreasing check."""
        frame = curve([1.0, 1.0 - 1e-8, 2.0], [0.0, 0.0, 0.0])
        self.assertTrue(experiments.curve_is_nondecreasing(frame, experiments.QUANTILE, 'ra'))
        self.assertFalse(
            experiments.curve_is_nondecreasing(frame, experiments.QUANTILE, 'ra', rtol=1e-10),
        )


class TestOutputs(SimpleTestCase):
    """Test the CSV table and its sidecar."""

    def test_write_outputs(self):
        """The CSV round-trips and the sidecar echoes the config."""
        frame = pd.DataFrame([{
            'k': 0, 'kind': 'quantile', 'engine': 'dual', 'value': 1.5, 'exactness': 'exact',
            'converged': True, 'beta_star': '0.1;0.2', 'wall_time_ms': 3.0, 'error': '',
        }], columns=experiments.COLUMNS)
        with tempfile.TemporaryDirectory() as directory:
            csv_path = Path(directory) / 'nested' / 'pareto.csv'
            sidecar = experiments.write_outputs(frame, csv_path, PARETO_CONFIG, verdict=True)
            written = pd.read_csv(csv_path, keep_default_na=False)
            payload = json.loads(sidecar.read_text())
        self.assertEqual(sidecar.name, 'pareto.meta.json')
        self.assertEqual(tuple(written.columns), experiments.COLUMNS)
        self.assertEqual(written['beta_star'].iloc[0], '0.1;0.2')
        self.assertEqual(payload['config'], {'name': 'pareto'})
        self.assertEqual(payload['seed'], 7)
        self.assertTrue(payload['all_converged'])
        self.assertTrue(payload['non_monotone_detected'])
        self.assertIn('numpy', payload['versions'])

    def test_metadata_path(self):
        """results/x.csv -> results/x.meta.json."""
        self.assertEqual(
            experiments.metadata_path('results/x.csv'), Path('results/x.meta.json'),
        )


class TestConfigOverrides(SimpleTestCase):
    """Test command-line overrides."""

    def test_seed_and_engines(self):
        """Seed goes to the optimizer, engines replace the list."""
        config = PARETO_CONFIG.with_overrides(seed=3, engines=['ra', 'es'])
        self.assertEqual(config.optimizer.seed, 3)
        self.assertEqual(config.optimizer.restarts, FAST.restarts)
        self.assertEqual(config.engines, ('ra', 'es'))
        self.assertEqual(PARETO_CONFIG.optimizer.seed, 7)

    def test_no_overrides(self):
        """Nothing given keeps the config."""
        self.assertEqual(PARETO_CONFIG.with_overrides(), PARETO_CONFIG)
