from django.apps import AppConfig


class GrassmannConfig(AppConfig):
    name = "causalqft.grassmann"
