"""Numerical core: graphs, calculus, problems, audits, energy functional and solvers."""
