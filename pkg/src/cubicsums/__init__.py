"""High-precision verification workbench for cubic Euler sums."""

__version__ = "0.1.0"
