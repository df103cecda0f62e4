"""hopcheck: diagnostics toolkit for multi-hop reading-comprehension datasets."""

__version__ = "0.1.0"
