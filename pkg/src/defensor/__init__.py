"""Defensive forecasting for prediction with expert advice on binary outcomes."""
__version__ = "0.1.0"
