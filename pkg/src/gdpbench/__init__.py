"""Multi-country GDP growth forecasting benchmark toolkit."""

__version__ = "0.1.0"
