"""evex: corpus-to-evaluation toolkit for code-format event extraction."""

__version__ = "0.1.0"
