"""Compression-optimal tokeniser construction via LP relaxation."""

__version__ = "0.1.0"
