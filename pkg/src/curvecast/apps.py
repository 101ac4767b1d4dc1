from django.apps import AppConfig


class CurvecastConfig(AppConfig):
    name = "curvecast"
    verbose_name = "Curvecast learning-curve forecasting"
