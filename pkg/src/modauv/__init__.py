"""Desk-scale software stack and simulator for a modular underwater vehicle."""

__version__ = "0.1.0"
