from django.apps import AppConfig


class FockConfig(AppConfig):
    name = "causalqft.fock"
