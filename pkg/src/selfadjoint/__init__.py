"""Self-adjoint extensions of 1D Laplace/Schrodinger and Dirac operators."""

__version__ = "0.1.0"
