"""Zonal reserve and transmission capacity design for wind-dominated power systems."""

__version__ = "0.1.0"
