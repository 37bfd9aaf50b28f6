"""Simulation and verification workbench for population protocols under
one-way and omissive interaction models."""

__version__ = "0.1.0"
