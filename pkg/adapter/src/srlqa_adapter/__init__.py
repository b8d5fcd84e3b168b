"""Annotation adapter: raw captions to interchange records plus embedding
store export."""

__version__ = "0.1.0"
