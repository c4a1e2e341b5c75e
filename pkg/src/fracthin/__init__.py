"""Pseudo-spectral simulator for the nonlocal thin film equation
du/dt = div(u^n grad (-Delta)^s u) on Neumann boxes, with a verification
suite for its entropy structure, finite speed of propagation, and
waiting-time behaviour.
"""

__version__ = "0.1.0"
