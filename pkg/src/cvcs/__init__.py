"""Compressive-sensing codec and evaluation harness for vehicle speed telemetry."""

__version__ = "0.1.0"
