#!/usr/bin/env python3
"""
Accelerated Oracles - command-line launcher

Loads `.env` and hands the arguments to the CLI:

    python app.py run configs/smoke.json
    python app.py parse-data data/synthetic_1000.svm
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from dotenv import load_dotenv
load_dotenv()

from src.cli import main


if __name__ == "__main__":
    sys.exit(main())
