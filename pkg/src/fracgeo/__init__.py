"""Fractional L_p seminorms, polar projection bodies and star-body geometry on grids."""

__version__ = "0.1.0"
