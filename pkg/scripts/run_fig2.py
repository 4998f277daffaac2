#!/usr/bin/env python3
"""Thin wrapper over the fig2 subcommand; extra flags pass through."""
import sys

from aoi_secrecy.cli import main

if __name__ == "__main__":
    sys.exit(main(["fig2", *sys.argv[1:]]))
