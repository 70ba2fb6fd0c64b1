"""Annihilators of explicit polynomial maps and circuits with projection gates."""

__version__ = "0.1.0"
