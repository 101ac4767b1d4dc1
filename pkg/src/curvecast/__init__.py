from curvecast.api import ForecastResult, forecast

__all__ = ["ForecastResult", "forecast"]
