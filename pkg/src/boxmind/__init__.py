"""Tactical analytics for one-vs-one boxing: punch-event logs in, match
predictions and gradient-based strategy advice out."""

__version__ = "0.1.0"
