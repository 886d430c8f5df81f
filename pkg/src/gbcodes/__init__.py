"""Generalized-bicycle codes, phenomenological noise and sliding-window decoding."""

__version__ = "0.1.0"
