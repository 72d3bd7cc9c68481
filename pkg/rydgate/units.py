"""
Unit helpers.

hbar = 1 everywhere: energies and Rabi frequencies are angular frequencies
in rad/s, times in seconds, distances in micrometres.
"""

import math

TWO_PI = 2.0 * math.pi

MHZ_2PI = TWO_PI * 1e6   # rad/s per (2pi x MHz)
GHZ_2PI = TWO_PI * 1e9   # rad/s per (2pi x GHz)

S = 1.0
MS = 1e-3
US = 1e-6
NS = 1e-9
PS = 1e-12


def mhz_2pi(value: float) -> float:
    return value * MHZ_2PI


def ghz_2pi(value: float) -> float:
    return value * GHZ_2PI


def to_mhz_2pi(omega: float) -> float:
    """rad/s -> value in units of 2pi x MHz."""
    return omega / MHZ_2PI
