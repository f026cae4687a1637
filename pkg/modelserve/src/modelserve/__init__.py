"""Reference sidecar for the /embed, /score, /translate wire protocols."""

__version__ = "0.1.0"
