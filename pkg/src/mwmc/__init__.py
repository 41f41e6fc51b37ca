"""Multi-weight nuclear-norm matrix completion with prior subspace information."""

__version__ = "0.1.0"
