from django.apps import AppConfig


class SplittingConfig(AppConfig):
    name = "causalqft.splitting"
