"""Decentralized wireless power control with delayed multi-hop aggregation policies."""

__version__ = "0.1.0"
