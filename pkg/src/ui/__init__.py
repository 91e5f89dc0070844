"""Command-line front end for graphpq."""
