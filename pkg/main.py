#!/usr/bin/env python3
"""
AMOS-VPR: CNN visual place recognition
Main entry point for the AMOS-VPR command line
"""

import sys
from pathlib import Path

# Add the project root to Python path
sys.path.insert(0, str(Path(__file__).parent))

from core.utils.cli import cli


if __name__ == "__main__":
    cli(prog_name="amos-vpr")
