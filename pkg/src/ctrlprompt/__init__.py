"""Soft-prompt controlled text generation workbench."""

__version__ = "0.1.0"
