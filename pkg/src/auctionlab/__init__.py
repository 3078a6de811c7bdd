"""Repeated auctions played by regret-minimizing agents."""

__version__ = "0.1.0"
