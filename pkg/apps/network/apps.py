from django.apps import AppConfig


class NetworkAppConfig(AppConfig):
    name = "apps.network"
    verbose_name = "IMG network"
