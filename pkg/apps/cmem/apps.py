from django.apps import AppConfig


class CmemAppConfig(AppConfig):
    name = "apps.cmem"
    verbose_name = "Short-range motion attention"
