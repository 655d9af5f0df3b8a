"""Desk-scale testbed for GNSS-disciplined oscillators under UAV-flight disturbances."""

__version__ = "0.1.0"
