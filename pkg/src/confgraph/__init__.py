"""Graph complex models of configuration spaces of points on closed manifolds."""

__version__ = "0.1.0"
