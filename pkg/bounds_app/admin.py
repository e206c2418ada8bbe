"""
Admin configuration for the bounds application.

Registers ExperimentRun with its sweep rows inline, and SweepRow.
"""

from django.contrib import admin

from .models import ExperimentRun, SweepRow


class SweepRowInline(admin.TabularInline):
    """Inline for rows of an experiment run."""

    model = SweepRow
    extra = 0


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """Admin configuration for the ExperimentRun model."""

    model = ExperimentRun
    list_display = ('name', 'kind', 'seed', 'verdict', 'created')
    list_filter = ('kind',)
    inlines = [SweepRowInline]


@admin.register(SweepRow)
class SweepRowAdmin(admin.ModelAdmin):
    """Admin configuration for the SweepRow model."""

    model = SweepRow
    list_display = ('run', 'k', 'kind', 'engine', 'value', 'converged')
    list_filter = ('kind', 'engine', 'converged')
