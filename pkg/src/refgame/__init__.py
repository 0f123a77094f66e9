"""Refereed verification games with deposits, slashing and prize protocols."""

__version__ = "0.1.0"
