"""Pilot-wave (de Broglie-Bohm) trajectory simulation."""
__version__ = "0.1.0"
