#!/usr/bin/env python3
"""
SPPRT Planner - Main Entry Point

Runs the command-line application from the source tree without installing
the package.
"""

import sys
import os

# Add src directory to Python path so we can import our modules
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from spprt_planner.core.application import main

if __name__ == "__main__":
    sys.exit(main())
