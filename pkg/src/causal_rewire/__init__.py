"""Causal graphs from transfer entropy, curvature-guided rewiring, and GCN graph classification."""

__version__ = "0.1.0"
