from django.apps import AppConfig


class TensorConfig(AppConfig):
    name = "apps.tensor"
    verbose_name = "Tensor core and autodiff"
