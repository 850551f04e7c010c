"""Numerical harness for SDEs driven by symmetric alpha-stable noise with
rough (negative-regularity) drifts: samplers, dyadic analysis, mollified
Euler stepping, and weak-rate experiments."""

__version__ = "0.1.0"
