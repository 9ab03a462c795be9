"""Redfield and Davies master equations for quadratic lattice systems."""

__version__ = "0.1.0"
CONFIG_SCHEMA_VERSION = 1
