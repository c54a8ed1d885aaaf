"""pyoracle: executes schema blocks and output expressions as real Python."""

from .core import oracle_eval

__version__ = "0.1.0"
__all__ = ["oracle_eval"]
