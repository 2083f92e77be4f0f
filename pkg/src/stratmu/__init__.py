"""Exact computation of stratified Milnor numbers by polar, Morsification
and homological engines."""

__version__ = "0.1.0"
