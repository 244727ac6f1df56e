"""Partitioned reduced-order models of Volt-VAr inverters.

Probe an inverter model with amplitude-partitioned square chirps, fit one
low-order discrete transfer function per voltage range, choose the
partition count by bisection, and use the result inside a 12-house
low-voltage feeder simulation.
"""
from .errors import GridFitError
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "GridFitError", "__version__"]
