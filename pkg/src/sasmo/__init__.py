"""Multi-objective optimization by domination-measure minimization."""

__version__ = "0.1.0"
