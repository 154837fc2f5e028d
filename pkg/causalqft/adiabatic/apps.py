from django.apps import AppConfig


class AdiabaticConfig(AppConfig):
    name = "causalqft.adiabatic"
