"""Merging constant of weighted r-means of p-values."""
import json

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from bounds_app.applications import PMergeSpec, p_merge_constant
from bounds_app.management.base import (NOT_CONVERGED, BoundsCommand,
                                        config_error, parse_floats)
from bounds_app.serializers import default_optimizer


class Command(BoundsCommand):
    """Compute a_{r,w}."""

    help = 'Constant a making a (sum w_i p_i^r)^(1/r) a valid p-value'

    def add_arguments(self, parser):
        """Add --r, --weights and --no-cross-check."""
        super().add_arguments(parser)
        parser.add_argument('--r', type=float, required=True, help='Finite exponent r')
        parser.add_argument('--weights', required=True, help='Comma separated weights')
        parser.add_argument(
            '--no-cross-check', action='store_true',
            help='Skip the small-p extrapolation check',
        )

    def handle(self, *args, **options):
        """
        Print the constant and its cross-check as JSON.

        Args:
            args: args.
            options: parsed flags.
        """
        weights = parse_floats(options['weights'], '--weights')
        try:
            spec = PMergeSpec(options['r'], weights)
            constant = p_merge_constant(
                spec, default_optimizer(), cross_check=not options['no_cross_check'],
            )
        except ValidationError as error:
            raise config_error('; '.join(error.messages))
        payload = constant.as_dict()
        self.report(json.dumps(payload, indent=2))
        if not constant.consistent:
            self.warn('The p=0 value and the small-p extrapolation disagree')
        if not payload['converged']:
            raise CommandError('The optimizer did not converge', returncode=NOT_CONVERGED)
