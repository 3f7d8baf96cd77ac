"""Batch figure rendering for sweep CSV artifacts."""

from .render import KINDS, FigureSpec, SchemaError, render

__all__ = ["KINDS", "FigureSpec", "SchemaError", "render"]
__version__ = "0.1.0"
