from django.apps import AppConfig


class QedConfig(AppConfig):
    name = "causalqft.qed"
