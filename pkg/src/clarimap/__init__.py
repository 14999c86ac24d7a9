"""Interactive, uncertainty-aware semantic parsing for map queries."""

__version__ = "0.1.0"
