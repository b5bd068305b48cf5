#!/usr/bin/env python3
"""
walker-lab - Main Entry Point

Usage:
    python -m src.main <verb> [flags]

Verbs: simulate, calibrate, analyze, decompose, classify, sweep, figures.
Run `python -m src.main <verb> --help` for the flags of each verb.
"""

import sys

from src.adapters.cli import main


def run() -> None:
    """Run the command line and exit with its status."""
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
