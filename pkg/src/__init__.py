"""
graphpq - critical points of quasilinear (p,q)-Laplacian systems on weighted graphs.

This package contains the tool's modules:
- core: Graphs, discrete calculus, problems, audits, energy and solvers
- services: Configuration, logging and file I/O
- ui: Command-line front end
"""

__version__ = "0.1.0"
