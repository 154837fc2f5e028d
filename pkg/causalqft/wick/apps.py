from django.apps import AppConfig


class WickConfig(AppConfig):
    name = "causalqft.wick"
