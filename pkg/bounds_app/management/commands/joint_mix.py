"""Joint mixability checks."""
import json

from django.core.exceptions import ValidationError
from rest_framework import serializers

from bounds_app.applications import bernoulli_jm, mean_length_jm_check
from bounds_app.management.base import (BoundsCommand, config_error,
                                        parse_floats, read_json)
from bounds_app.serializers import MarginsField


class Command(BoundsCommand):
    """Decide joint mixability of Bernoulli tuples or decreasing-density margins."""

    help = 'Joint mixability of --bernoulli parameters or of the margins in --config'

    def add_arguments(self, parser):
        """Add --bernoulli or --config."""
        super().add_arguments(parser)
        group = parser.add_mutually_exclusive_group(required=True)
        group.add_argument('--bernoulli', help='Comma separated Bernoulli parameters')
        group.add_argument('--config', help='JSON file with a margins list')

    def handle(self, *args, **options):
        """
        Print the verdict as JSON.

        Args:
            args: args.
            options: parsed flags.
        """
        try:
            payload = self.bernoulli(options) if options.get('bernoulli') else self.margins(options)
        except ValidationError as error:
            raise config_error('; '.join(error.messages))
        self.report(json.dumps(payload, indent=2))

    def bernoulli(self, options) -> dict:
        """Integer-sum criterion with its arc construction."""
        certificate = bernoulli_jm(parse_floats(options['bernoulli'], '--bernoulli'))
        return {
            'feasible': certificate.feasible,
            'center': certificate.center,
            'construction': [list(arc) for arc in certificate.construction or ()],
        }

    def margins(self, options) -> dict:
        """Mean-length condition for the configured margins."""
        field = MarginsField()
        try:
            margins = field.run_validation(read_json(options['config']).get('margins'))
        except serializers.ValidationError as error:
            raise config_error(json.dumps(error.detail, default=str))
        return {'feasible': mean_length_jm_check(margins)}
