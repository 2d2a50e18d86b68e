"""Random clique and Čech complexes: exact homology, moment formulas and
Monte Carlo checks of Betti-number central limit theorems."""

__version__ = "0.1.0"
