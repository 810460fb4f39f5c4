from django.apps import AppConfig


class ShiftConfig(AppConfig):
    name = "apps.shift"
    verbose_name = "Temporal shift"
