"""Tests for models."""
import math
from datetime import datetime, timezone

import pandas as pd
from django.core.exceptions import ValidationError
from django.test import TestCase

from bounds_app import models
from bounds_app.bounds import OptimizerOptions
from bounds_app.distributions import MarginVector, Pareto
from bounds_app.experiments import COLUMNS, ExperimentConfig
from bounds_app.mixtures import DoublyStochasticMatrix


def create_str_test(model, attrs, expected):
    """
    Create a test method for checking the string representation of a model instance.

    Args:
        model (class): The model class to test.
        attrs (dict): Dictionary containing attributes for creating the instance.
        expected (str): The expected string representation of the instance.

    Returns:
        test: A test method for checking the string representation.
    """

    def test(self):
        self.assertEqual(str(model.objects.create(**attrs)), expected)

    return test


run_attrs = {'name': 'pareto', 'kind': models.ExperimentRun.SWEEP}
check_attrs = {'name': 'atoms', 'kind': models.ExperimentRun.MONOTONICITY, 'verdict': False}

test_str_data = (
    (models.ExperimentRun, run_attrs, 'pareto (sweep)'),
    (models.ExperimentRun, check_attrs, 'atoms (monotonicity)'),
)

test_str_methods = {
    f'test_{args[0].__name__}_{index}': create_str_test(*args)
    for index, args in enumerate(test_str_data)
}
TestStr = type('TestStr', (TestCase,), test_str_methods)


class TestSweepRow(TestCase):
    """Test case for the SweepRow model."""

    def setUp(self):
        """Create a run to attach rows to."""
        self.run = models.ExperimentRun.objects.create(**run_attrs)

    def test_str(self):
        """Power, kind, engine and value."""
        row = models.SweepRow.objects.create(
            run=self.run, k=2, kind='quantile', engine='dual', value=2.5,
        )
        self.assertEqual(str(row), 'k=2 quantile/dual: 2.5')

    def test_rows_follow_the_run(self):
        """Rows are reachable from the run and deleted with it."""
        models.SweepRow.objects.create(run=self.run, k=0, kind='quantile', engine='ra', value=1.0)
        self.assertEqual(self.run.rows.count(), 1)
        self.run.delete()
        self.assertEqual(models.SweepRow.objects.count(), 0)


class TestFromFrame(TestCase):
    """Test storing a result table."""

    config = ExperimentConfig(
        name='stored',
        margins=MarginVector((Pareto(3, 1), Pareto(3, 2))),
        matrix=DoublyStochasticMatrix.identity(2),
        k_list=(0, 1),
        p=0.95,
        optimizer=OptimizerOptions(seed=11),
        raw={'name': 'stored', 'p': 0.95},
    )
    frame = pd.DataFrame([
        {
            'k': 0, 'kind': 'quantile', 'engine': 'dual', 'value': 1.5, 'exactness': 'exact',
            'converged': True, 'beta_star': '0.1;0.2', 'wall_time_ms': 3.0, 'error': '',
        },
        {
            'k': 1, 'kind': 'distribution', 'engine': 'ra', 'value': math.nan, 'exactness': '',
            'converged': False, 'beta_star': '', 'wall_time_ms': 1.0, 'error': 'unbounded',
        },
    ], columns=COLUMNS)

    def test_run(self):
        """Name, config echo, seed and verdict are stored."""
        run = models.ExperimentRun.from_frame(
            self.frame, self.config, kind=models.ExperimentRun.MONOTONICITY, verdict=True,
        )
        run.refresh_from_db()
        self.assertEqual(run.name, 'stored')
        self.assertEqual(run.config, {'name': 'stored', 'p': 0.95})
        self.assertEqual(run.seed, 11)
        self.assertTrue(run.verdict)

    def test_rows(self):
        """One row per line; NaN values become NULL."""
        run = models.ExperimentRun.from_frame(self.frame, self.config)
        rows = list(run.rows.order_by('k'))
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[0].value, 1.5)
        self.assertEqual(rows[0].beta_star, '0.1;0.2')
        self.assertIsNone(rows[1].value)
        self.assertFalse(rows[1].converged)
        self.assertEqual(rows[1].error, 'unbounded')
        self.assertIsNone(run.verdict)


PAST_YEAR = 2007
FUTURE_YEAR = 3000

valid_tests = (
    (models.check_created, datetime(PAST_YEAR, 1, 1, 1, 1, 1, 1, tzinfo=timezone.utc)),
    (models.check_beta_star, '0.1;0.25;0'),
    (models.check_beta_star, ''),
)
invalid_tests = (
    (models.check_created, datetime(FUTURE_YEAR, 1, 1, 1, 1, 1, 1, tzinfo=timezone.utc)),
    (models.check_beta_star, '0.5;0.5'),
    (models.check_beta_star, '0.1;-0.2'),
    (models.check_beta_star, '0.1,0.2'),
)


def create_validation_test(validator, validation_value, valid=True):
    """
    Create a validation test method for a specific validator.

    Args:
        validator (function): The validation function to test.
        validation_value: The value to be validated.
        valid (bool, optional): Flag indicating whether the value is expected to be valid or not.

    Returns:
        test: A test method for the validation function.
    """
    if valid:
        return lambda _: validator(validation_value)

    def test(self):
        with self.assertRaises(ValidationError):
            validator(validation_value)

    return test


valid_methods = {
    f'test_valid_{args[0].__name__}_{index}': create_validation_test(*args)
    for index, args in enumerate(valid_tests)
}
invalid_methods = {
    f'test_invalid_{args[0].__name__}_{index}': create_validation_test(*args, valid=False)
    for index, args in enumerate(invalid_tests)
}

TestValidators = type('TestValidators', (TestCase,), valid_methods | invalid_methods)
