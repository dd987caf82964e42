"""Panel elasticity regressions for region x year data."""

__version__ = "0.1.0"
