"""tailcast: realized-measure tail risk forecasting engine."""

__version__ = "0.1.0"
