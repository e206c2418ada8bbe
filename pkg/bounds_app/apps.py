"""App configuration for the bounds application."""

from django.apps import AppConfig


class BoundsAppConfig(AppConfig):
    """App configuration for the bounds application."""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'bounds_app'
    verbose_name = 'Worst-case risk bounds'
