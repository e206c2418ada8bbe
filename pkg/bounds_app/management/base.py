"""Shared plumbing of the bounds management commands."""
import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

CONFIG_ERROR = 2
NOT_CONVERGED = 3


def config_error(message) -> CommandError:
    """CommandError exiting with the configuration error code."""
    return CommandError(message, returncode=CONFIG_ERROR)


def read_json(path) -> dict:
    """Parse a JSON file, reporting missing or malformed files as config errors."""
    try:
        with open(path, 'r') as config_file:
            return json.load(config_file)
    except OSError as error:
        raise config_error('Cannot read {0}: {1}'.format(path, error))
    except json.JSONDecodeError as error:
        raise config_error('Malformed JSON in {0}: {1}'.format(path, error))


def parse_json(text: str, option: str):
    """Parse an inline JSON argument."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as error:
        raise config_error('Malformed JSON in {0}: {1}'.format(option, error))


def parse_floats(text: str, option: str) -> tuple:
    """Parse a comma separated list of numbers."""
    try:
        return tuple(float(token) for token in text.split(',') if token.strip())
    except ValueError:
        raise config_error('{0} expects comma separated numbers, got {1!r}'.format(option, text))


def build(serializer_class, data):
    """Validate data with a building serializer and return the domain object."""
    serializer = serializer_class(data=data)
    if not serializer.is_valid():
        raise config_error(json.dumps(serializer.errors, default=str))
    try:
        return serializer.save()
    except serializers.ValidationError as error:
        raise config_error(json.dumps(error.detail, default=str))


class BoundsCommand(BaseCommand):
    """BaseCommand with --quiet and styled reporting."""

    def add_arguments(self, parser):
        """Add --quiet."""
        parser.add_argument('--quiet', action='store_true', help='Print nothing on success')

    def execute(self, *args, **options):
        """Remember --quiet before handle() runs."""
        self.quiet = options.get('quiet', False)
        return super().execute(*args, **options)

    def report(self, message: str, style=None) -> None:
        """Write a message unless --quiet was given."""
        if not self.quiet:
            self.stdout.write((style or self.style.SUCCESS)(message))

    def warn(self, message: str) -> None:
        """Write a warning to stderr regardless of --quiet."""
        self.stderr.write(self.style.WARNING(message))

    def default_output(self, config, suffix: str = '') -> Path:
        """results/<name><suffix>.csv unless the config names an output."""
        if config.output:
            return Path(config.output)
        return Path('results') / '{0}{1}.csv'.format(config.name, suffix)
