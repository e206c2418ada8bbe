"""Rearrangement curves over k with a non-monotonicity verdict."""
from django.core.management.base import CommandError

from bounds_app.experiments import run_monotonicity_check, write_outputs
from bounds_app.management.base import NOT_CONVERGED, BoundsCommand
from bounds_app.management.commands.run_sweep import (add_experiment_arguments,
                                                      load_experiment, workers)
from bounds_app.models import ExperimentRun


class Command(BoundsCommand):
    """Repeat rearrangement estimates over seeds and test the curve for monotonicity."""

    help = 'Check whether the quantile-mixture curve decreases somewhere in k'

    def add_arguments(self, parser):
        """Add experiment flags."""
        super().add_arguments(parser)
        add_experiment_arguments(parser)

    def handle(self, *args, **options):
        """
        Execute the repeated sweep, print the verdict and write the outputs.

        Args:
            args: args.
            options: parsed flags.
        """
        config = load_experiment(options)
        frame, verdict = run_monotonicity_check(config, workers(options))
        out = options.get('out') or self.default_output(config)
        write_outputs(frame, out, config, verdict=verdict)
        if options['save']:
            ExperimentRun.from_frame(frame, config, kind=ExperimentRun.MONOTONICITY, verdict=verdict)
        self.report('non_monotone_detected={0}'.format(str(verdict).lower()))
        self.report('Wrote {0} rows to {1}'.format(len(frame), out))
        if not frame['converged'].all():
            raise CommandError('Some rows did not converge', returncode=NOT_CONVERGED)
