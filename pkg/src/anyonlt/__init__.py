"""Desk-scale numerics for the extended-anyon Lieb-Thirring inequality."""

__version__ = "0.1.0"
