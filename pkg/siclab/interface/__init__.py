"""Command-line interface for the siclab package."""

from siclab.interface.cli import build_parser, main

__all__ = [
    'build_parser',
    'main',
]
