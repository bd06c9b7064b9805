"""Entity-specific ranking of knowledge-base properties."""

__version__ = "0.1.0"
