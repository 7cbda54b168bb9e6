"""Verifier for FIFO channel machines under input/output-bounded restrictions."""

__version__ = "0.1.0"
