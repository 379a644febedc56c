#!/usr/bin/env python3
"""
Run the loopcanon command-line interface.

Examples:
    python run_cli.py basis --label "O(-1)" --xi-max 3
    python run_cli.py verify --suite telescoping --t 0 --xi-max 6
    python run_cli.py hall p1 --q 2,3 --window "deg=-2..3,tor<=2" --check quadratic,line,cross
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
