"""Cross-lingual in-context learning toolkit."""

__version__ = "0.1.0"
