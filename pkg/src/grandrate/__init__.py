"""Achievable rates and decoders for the GRAND family on general bit channels."""

__version__ = "0.1.0"
