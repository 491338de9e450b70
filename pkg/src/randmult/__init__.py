"""Random multiplicative functions: sieve, partial sums, martingale decomposition and inequality checks."""

__version__ = "0.1.0"
