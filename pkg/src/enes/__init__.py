"""Enes: edge-node-edge causal motif classification with a gated two-expert network."""

__version__ = "0.1.0"
