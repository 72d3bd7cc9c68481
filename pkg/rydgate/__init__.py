"""
rydgate – Rydberg-EIT multiqubit gate simulator.

Simulates CNOT^N and C2NOT2 gates built from Rydberg blockade and
electromagnetically induced transparency on Rb/Cs atom arrays.
"""

__version__ = "0.1.0"
