from django.apps import AppConfig


class ClimConfig(AppConfig):
    name = "apps.clim"
    verbose_name = "Long-range motion integration"
