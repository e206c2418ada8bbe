"""Single worst-case VaR or ES value printed as JSON."""
import json

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from bounds_app.bounds import worst_case_es_result, worst_case_var
from bounds_app.management.base import (NOT_CONVERGED, BoundsCommand, build,
                                        config_error, parse_json, read_json)
from bounds_app.serializers import BUILT, WorstCaseRequestSerializer, default_optimizer


class Command(BoundsCommand):
    """Compute the worst-case VaR or ES of given margins."""

    help = 'Worst-case VaR_p or ES_p of a sum with the given margins'

    def add_arguments(self, parser):
        """Add --config or --margins with --p and --measure."""
        super().add_arguments(parser)
        parser.add_argument('--config', help='JSON file with p, margins, measure, optimizer')
        parser.add_argument('--margins', help='JSON list of distribution literals')
        parser.add_argument('--p', type=float, help='Probability level in (0, 1)')
        parser.add_argument('--measure', choices=['var', 'es'], default='var')

    def request(self, options) -> dict:
        """Request body from the config file or the inline flags."""
        if options.get('config'):
            return read_json(options['config'])
        if options.get('margins') is None or options.get('p') is None:
            raise config_error('Give --config, or --margins together with --p')
        return {
            'p': options['p'],
            'margins': parse_json(options['margins'], '--margins'),
            'measure': options['measure'],
        }

    def handle(self, *args, **options):
        """
        Print the BoundResult as JSON.

        Args:
            args: args.
            options: parsed flags.
        """
        serializer = WorstCaseRequestSerializer(data=self.request(options))
        if not serializer.is_valid():
            raise config_error(json.dumps(serializer.errors, default=str))
        data = serializer.validated_data
        optimizer = data.get('optimizer')
        try:
            if data['measure'] == 'es':
                result = worst_case_es_result(data['p'], data['margins'])
            else:
                budget = optimizer[BUILT] if optimizer else default_optimizer()
                result = worst_case_var(data['p'], data['margins'], budget)
        except ValidationError as error:
            raise config_error('; '.join(error.messages))
        self.report(json.dumps(result.as_dict(), indent=2))
        if not result.converged:
            raise CommandError('The optimizer did not converge', returncode=NOT_CONVERGED)
