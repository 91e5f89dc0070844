"""Services package for graphpq (configuration, logging, file I/O)."""
