"""Time-harmonic Maxwell solver with a Laguerre-transform-in-time preconditioner."""

__version__ = "0.1.0"
