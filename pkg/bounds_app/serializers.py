"""
Serializers for the bounds application.

Defines:
- model serializers for ExperimentRun and SweepRow
- config serializers for distributions, matrices, optimizer and
  rearrangement options and whole experiments; their save() returns the
  domain object
- the request serializer of the worst-case endpoint
"""

from django.conf import settings
from django.core.exceptions import ValidationError as DomainError
from rest_framework import serializers

from .bounds import OptimizerOptions
from .distributions import FAMILIES, MarginVector, build_distribution
from .experiments import ENGINES, KINDS, ExperimentConfig
from .mixtures import DoublyStochasticMatrix
from .models import ExperimentRun, SweepRow
from .rearrangement import GridKind, RearrangementOptions

BUILT = 'built'
SCALED_FAMILIES = frozenset({'gamma', 'weibull'})


def _domain(factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except DomainError as error:
        raise serializers.ValidationError(error.messages)


class ExperimentRunSerializer(serializers.ModelSerializer):
    """Serializer for the ExperimentRun model."""

    class Meta:
        """Meta class."""

        model = ExperimentRun
        fields = '__all__'


class SweepRowSerializer(serializers.ModelSerializer):
    """Serializer for the SweepRow model."""

    class Meta:
        """Meta class."""

        model = SweepRow
        fields = '__all__'


class BuildingSerializer(serializers.Serializer):
    """Serializer whose validate() builds a domain object returned by save()."""

    def build(self, attrs):
        """Construct the domain object from validated attributes."""
        raise NotImplementedError

    def validate(self, attrs):
        """Build the domain object, turning domain errors into field errors."""
        attrs[BUILT] = _domain(self.build, attrs)
        return attrs

    def create(self, validated_data):
        """Return the built domain object."""
        return validated_data[BUILT]


class DistributionSerializer(BuildingSerializer):
    """
    Distribution grammar.

    {"family": "pareto", "alpha": 3, "theta": 1, "shift": 0, "scale": 1}.
    For gamma and weibull "scale" is the family scale parameter, which is
    the same as scaling the unit-scale law.
    """

    family = serializers.ChoiceField(choices=sorted(FAMILIES))
    alpha = serializers.FloatField(required=False)
    theta = serializers.FloatField(required=False, default=1.0)
    a = serializers.FloatField(required=False)
    b = serializers.FloatField(required=False)
    shape = serializers.FloatField(required=False)
    mu = serializers.FloatField(required=False)
    sigma = serializers.FloatField(required=False)
    m = serializers.IntegerField(required=False, min_value=1)
    q = serializers.FloatField(required=False, min_value=0, max_value=1)
    x = serializers.FloatField(required=False)
    rate = serializers.FloatField(required=False)
    c = serializers.FloatField(required=False)
    shift = serializers.FloatField(required=False, default=0.0)
    scale = serializers.FloatField(required=False, min_value=0, default=1.0)

    def build(self, attrs):
        """Build the distribution described by attrs."""
        family = attrs['family']
        params = dict(attrs)
        scale = params.pop('scale')
        if family in SCALED_FAMILIES:
            params['scale'] = scale
            scale = 1.0
        return build_distribution(family, params, shift=params.pop('shift'), scale=scale)


class MatrixSerializer(BuildingSerializer):
    """Matrix literal: identity, uniform, convex_identity_uniform (a, n) or explicit rows."""

    kind = serializers.ChoiceField(
        choices=['identity', 'uniform', 'convex_identity_uniform', 'explicit'],
    )
    n = serializers.IntegerField(required=False, min_value=2)
    a = serializers.FloatField(required=False, min_value=0, max_value=1)
    rows = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(min_value=0)), required=False,
    )

    def validate(self, attrs):
        """Check that the keys required by the matrix kind are present."""
        kind = attrs['kind']
        needed = {'explicit': ('rows',), 'convex_identity_uniform': ('a', 'n')}.get(kind, ('n',))
        missing = [key for key in needed if key not in attrs]
        if missing:
            raise serializers.ValidationError(
                {key: 'This field is required for {0} matrices.'.format(kind) for key in missing},
            )
        return super().validate(attrs)

    def build(self, attrs):
        """Build the doubly stochastic matrix."""
        kind = attrs['kind']
        if kind == 'explicit':
            return DoublyStochasticMatrix(attrs['rows'])
        if kind == 'convex_identity_uniform':
            return DoublyStochasticMatrix.convex_identity_uniform(attrs['a'], attrs['n'])
        return getattr(DoublyStochasticMatrix, kind)(attrs['n'])


class OptimizerSerializer(BuildingSerializer):
    """Optimizer budget; missing keys fall back to settings.RISK_BOUNDS['OPTIMIZER']."""

    restarts = serializers.IntegerField(required=False, min_value=0)
    seed = serializers.IntegerField(required=False, min_value=0)
    max_evals = serializers.IntegerField(required=False, min_value=1)
    tol = serializers.FloatField(required=False, min_value=0)

    def build(self, attrs):
        """Merge attrs over the configured defaults."""
        options = dict(settings.RISK_BOUNDS['OPTIMIZER'])
        options.update({key: value for key, value in attrs.items() if key != BUILT})
        return OptimizerOptions(**options)


class RearrangementSerializer(BuildingSerializer):
    """Rearrangement options; missing keys fall back to settings.RISK_BOUNDS['RA']."""

    n = serializers.IntegerField(required=False, min_value=2)
    eps = serializers.FloatField(required=False, min_value=0)
    max_sweeps = serializers.IntegerField(required=False, min_value=1)
    grid = serializers.ChoiceField(choices=[kind.value for kind in GridKind], required=False)

    def build(self, attrs):
        """Merge attrs over the configured defaults."""
        options = dict(settings.RISK_BOUNDS['RA'])
        options.update({key: value for key, value in attrs.items() if key != BUILT})
        options['grid'] = GridKind(options.get('grid', GridKind.MIDPOINT.value))
        return RearrangementOptions(**options)


def default_optimizer() -> OptimizerOptions:
    """Optimizer options from settings alone."""
    return OptimizerSerializer().build({})


def default_rearrangement() -> RearrangementOptions:
    """Rearrangement options from settings alone."""
    return RearrangementSerializer().build({})


class MarginsField(serializers.ListField):
    """List of distribution literals turned into a MarginVector."""

    child = DistributionSerializer()

    def __init__(self, **kwargs):
        kwargs.setdefault('min_length', 2)
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        """Validate each literal and assemble the margin vector."""
        items = super().to_internal_value(data)
        return _domain(MarginVector, tuple(item[BUILT] for item in items))


class ExperimentConfigSerializer(BuildingSerializer):
    """Whole experiment description read from a JSON config file."""

    name = serializers.CharField(max_length=100)
    margins = MarginsField()
    matrix = MatrixSerializer()
    k_list = serializers.ListField(
        child=serializers.IntegerField(min_value=0), allow_empty=False,
    )
    p = serializers.FloatField(min_value=0, max_value=1)
    engines = serializers.ListField(
        child=serializers.ChoiceField(choices=ENGINES), allow_empty=False, default=['dual'],
    )
    kinds = serializers.ListField(
        child=serializers.ChoiceField(choices=KINDS), allow_empty=False, default=list(KINDS),
    )
    optimizer = OptimizerSerializer(required=False)
    ra = RearrangementSerializer(required=False)
    seeds = serializers.IntegerField(required=False, min_value=1)
    output = serializers.CharField(required=False)

    def validate_p(self, value):
        """Reject the closed endpoints."""
        if not 0 < value < 1:
            raise serializers.ValidationError('p must lie strictly between 0 and 1.')
        return value

    def build(self, attrs):
        """Assemble the ExperimentConfig."""
        if attrs['matrix'][BUILT].n != attrs['margins'].n:
            raise serializers.ValidationError(
                {'matrix': 'Matrix dimension does not match the number of margins.'},
            )
        optimizer = attrs.get('optimizer')
        ra = attrs.get('ra')
        return ExperimentConfig(
            name=attrs['name'],
            margins=attrs['margins'],
            matrix=attrs['matrix'][BUILT],
            k_list=tuple(attrs['k_list']),
            p=attrs['p'],
            engines=tuple(attrs['engines']),
            kinds=tuple(attrs['kinds']),
            optimizer=optimizer[BUILT] if optimizer else default_optimizer(),
            rearrangement=ra[BUILT] if ra else default_rearrangement(),
            seeds=attrs.get('seeds', settings.RISK_BOUNDS['CHECK_SEEDS']),
            output=attrs.get('output'),
            raw=dict(self.initial_data),
        )


class WorstCaseRequestSerializer(serializers.Serializer):
    """Body of POST /api/worst-case/."""

    p = serializers.FloatField(min_value=0, max_value=1)
    margins = MarginsField()
    measure = serializers.ChoiceField(choices=['var', 'es'], default='var')
    optimizer = OptimizerSerializer(required=False)

    def validate_p(self, value):
        """Reject the closed endpoints."""
        if not 0 < value < 1:
            raise serializers.ValidationError('p must lie strictly between 0 and 1.')
        return value
