"""Finite block-length rate bounds for the noncoherent Rayleigh block-fading channel."""

__version__ = "0.1.0"
