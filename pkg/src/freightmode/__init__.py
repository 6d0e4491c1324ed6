"""Freight mode choice from shipment survey records.

Derived per-mode distances, per-category local models, voting and stacking
ensembles, and TreeSHAP explanations built on compiled CART kernels.
"""
__version__ = "0.1.0"

from .core import ModeLabel, ShipmentRecord, Unmatched, aggregate_mode  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "ModeLabel", "ShipmentRecord", "Unmatched", "aggregate_mode", "BACKEND"]
