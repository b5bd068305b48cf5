"""
Command-line adapter for walker-lab.
"""

from src.adapters.cli.commands import build_parser, main

__all__ = ["build_parser", "main"]
