#!/usr/bin/env python3
"""
mabcs
=====

Command-line entry point for instance analysis, bounds, simulation sweeps,
ratings ingestion and aggregation.

Usage:
    python scripts/mabcs.py analyze data/nu2.txt
    python scripts/mabcs.py simulate configs/ablation_combine.json --workers 8
"""

import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.cli import main


if __name__ == "__main__":
    sys.exit(main())
