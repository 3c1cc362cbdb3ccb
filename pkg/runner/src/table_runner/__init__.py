"""Sandbox harness executing one generated data-frame program per process."""

__version__ = "1.0.0"

PROTOCOL_VERSION = 1
DIALECT = "python-pandas"
