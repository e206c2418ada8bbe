import math
from datetime import datetime, timezone
from uuid import uuid4

from django.core.exceptions import ValidationError
from django.core.validators import MinValueValidator
from django.db import models, transaction
from django.utils.translation import gettext_lazy as _


def get_datetime() -> datetime:
    return datetime.now(timezone.utc)


def check_created(dt: datetime) -> None:
    if dt > get_datetime():
        raise ValidationError(
            _('Date and time is bigger than current!'),
            params={'created': dt}
        )


def check_beta_star(beta_star: str) -> None:
    if not beta_star:
        return
    try:
        values = [float(token) for token in beta_star.split(';')]
    except ValueError:
        raise ValidationError(
            _('Beta must be a semicolon separated list of numbers!'),
            params={'beta_star': beta_star},
        )
    if any(value < 0 for value in values) or sum(values) >= 1:
        raise ValidationError(
            _('Beta must be nonnegative with sum below one!'),
            params={'beta_star': beta_star},
        )


def _finite_or_none(value):
    value = float(value)
    return value if math.isfinite(value) else None


class UUIDMixin(models.Model):
    id = models.UUIDField(primary_key=True, default=uuid4, editable=False)

    class Meta:
        abstract = True


class CreatedMixin(models.Model):
    created = models.DateTimeField(
        _('created'), null=True, blank=True,
        default=get_datetime, validators=[check_created],
    )

    class Meta:
        abstract = True


class ExperimentRun(UUIDMixin, CreatedMixin):
    SWEEP = 'sweep'
    MONOTONICITY = 'monotonicity'
    KIND_CHOICES = (
        (SWEEP, _('sweep')),
        (MONOTONICITY, _('non-monotonicity check')),
    )

    name = models.TextField(_('name'), null=False, blank=False, max_length=100)
    kind = models.CharField(_('kind'), max_length=20, choices=KIND_CHOICES, default=SWEEP)
    config = models.JSONField(_('config'), default=dict)
    seed = models.IntegerField(_('seed'), default=42)
    verdict = models.BooleanField(_('non-monotone detected'), null=True, blank=True)

    @classmethod
    def from_frame(cls, frame, config, kind=SWEEP, verdict=None) -> 'ExperimentRun':
        """
        Store a result table as a run with one SweepRow per line.

        Args:
            frame: pandas.DataFrame with the sweep columns.
            config: ExperimentConfig the table was computed from.
            kind: SWEEP or MONOTONICITY.
            verdict: Non-monotonicity verdict of a monotonicity check.

        Returns:
            ExperimentRun: The saved run.
        """
        with transaction.atomic():
            run = cls.objects.create(
                name=config.name,
                kind=kind,
                config=config.raw,
                seed=config.optimizer.seed,
                verdict=verdict,
            )
            SweepRow.objects.bulk_create([
                SweepRow(
                    run=run,
                    k=int(record['k']),
                    kind=record['kind'],
                    engine=record['engine'],
                    value=_finite_or_none(record['value']),
                    exactness=record['exactness'] or '',
                    converged=bool(record['converged']),
                    beta_star=record['beta_star'] or '',
                    wall_time_ms=float(record['wall_time_ms']),
                    error=record['error'] or '',
                )
                for record in frame.to_dict('records')
            ])
        return run

    def __str__(self):
        return f'{self.name} ({self.kind})'

    class Meta:
        ordering = ['-created', 'name']
        verbose_name = _('experiment run')
        verbose_name_plural = _('experiment runs')


class SweepRow(UUIDMixin):
    QUANTILE = 'quantile'
    DISTRIBUTION = 'distribution'
    KIND_CHOICES = (
        (QUANTILE, _('quantile mixture')),
        (DISTRIBUTION, _('distribution mixture')),
    )
    ENGINE_CHOICES = (
        ('dual', _('dual')),
        ('ra', _('rearrangement')),
        ('es', _('expected shortfall')),
    )

    run = models.ForeignKey(
        'ExperimentRun', on_delete=models.CASCADE, verbose_name=_('run'), related_name='rows',
    )
    k = models.PositiveIntegerField(_('power'), validators=[MinValueValidator(0)])
    kind = models.CharField(_('mixture kind'), max_length=20, choices=KIND_CHOICES)
    engine = models.CharField(_('engine'), max_length=10, choices=ENGINE_CHOICES)
    value = models.FloatField(_('value'), null=True, blank=True)
    exactness = models.CharField(_('exactness'), max_length=20, blank=True, default='')
    converged = models.BooleanField(_('converged'), default=True)
    beta_star = models.TextField(
        _('optimal beta'), blank=True, default='', validators=[check_beta_star],
    )
    wall_time_ms = models.FloatField(_('wall time, ms'), default=0, validators=[MinValueValidator(0)])
    error = models.TextField(_('error'), blank=True, default='')

    def __str__(self):
        return f'k={self.k} {self.kind}/{self.engine}: {self.value}'

    class Meta:
        ordering = ['run', 'k', 'kind', 'engine']
        verbose_name = _('sweep row')
        verbose_name_plural = _('sweep rows')
