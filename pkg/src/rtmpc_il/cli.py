#!/usr/bin/env python3
"""Console entry point; the click group lives in _cli."""

from ._cli import cli, main

__all__ = ["cli", "main"]

# EOF
