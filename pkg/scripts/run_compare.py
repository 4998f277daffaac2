#!/usr/bin/env python3
"""Thin wrapper over the compare subcommand; extra flags pass through."""
import sys

from aoi_secrecy.cli import main

if __name__ == "__main__":
    sys.exit(main(["compare", *sys.argv[1:]]))
