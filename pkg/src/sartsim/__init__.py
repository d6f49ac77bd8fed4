"""Simulator for a two-tier range-indexed sensor overlay and its Chord baseline."""

__version__ = "0.1.0"
