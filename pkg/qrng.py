#!/usr/bin/env python3
"""
Holographic QRNG command-line entry point.

Usage:
    python qrng.py <command> [options]

Example:
    python qrng.py simulate --config configs/biased.yaml --out runs/biased/tags.qtag
    python qrng.py calibrate --tags runs/biased/tags.qtag --out runs/biased/calibration.json
    python qrng.py test runs/balanced/bits.txt --out runs/balanced/report.json
"""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
