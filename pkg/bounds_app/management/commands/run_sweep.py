"""Worst-case values along powers of the mixing matrix, written as CSV."""
from django.conf import settings
from django.core.management.base import CommandError

from bounds_app.experiments import ENGINES, run_sweep, write_outputs
from bounds_app.management.base import (NOT_CONVERGED, BoundsCommand, build,
                                        config_error, read_json)
from bounds_app.models import ExperimentRun
from bounds_app.serializers import ExperimentConfigSerializer


def add_experiment_arguments(parser):
    """Flags shared by run_sweep and check_monotonicity."""
    parser.add_argument('--config', required=True, help='Experiment JSON config')
    parser.add_argument('--out', help='CSV destination, default results/<name>.csv')
    parser.add_argument('--seed', type=int, help='Overrides the optimizer seed of the config')
    parser.add_argument('--engines', help='Comma separated engines: dual, ra, es')
    parser.add_argument('--workers', type=int, help='Process pool size')
    parser.add_argument('--save', action='store_true', help='Store the run in the database')


def load_experiment(options):
    """Validated ExperimentConfig with command-line overrides applied."""
    config = build(ExperimentConfigSerializer, read_json(options['config']))
    engines = None
    if options.get('engines'):
        engines = [engine.strip() for engine in options['engines'].split(',') if engine.strip()]
        unknown = sorted(set(engines) - set(ENGINES))
        if unknown or not engines:
            raise config_error('Unknown engines {0}; choose from {1}'.format(unknown, ENGINES))
    return config.with_overrides(seed=options.get('seed'), engines=engines)


def workers(options) -> int:
    """--workers or the configured default."""
    return options.get('workers') or settings.RISK_BOUNDS['SWEEP_WORKERS']


class Command(BoundsCommand):
    """Run a sweep over the k list of a config."""

    help = 'Compute worst-case values of quantile and distribution mixtures over k'

    def add_arguments(self, parser):
        """Add experiment flags."""
        super().add_arguments(parser)
        add_experiment_arguments(parser)

    def handle(self, *args, **options):
        """
        Execute the sweep and write the CSV with its metadata sidecar.

        Args:
            args: args.
            options: parsed flags.

        Raises:
            CommandError: returncode 2 on config errors, 3 when some row did not converge.
        """
        config = load_experiment(options)
        frame = run_sweep(config, workers(options))
        out = options.get('out') or self.default_output(config)
        sidecar = write_outputs(frame, out, config)
        if options['save']:
            ExperimentRun.from_frame(frame, config, kind=ExperimentRun.SWEEP)
        self.report('Wrote {0} rows to {1} ({2})'.format(len(frame), out, sidecar))
        failed = frame[~frame['converged']]
        if len(failed):
            raise CommandError(
                '{0} rows did not converge'.format(len(failed)), returncode=NOT_CONVERGED,
            )
