"""
Version: v1.0

This script is the entry point of the curve shortening flow toolkit. It builds self-similar
solutions (shrinkers and expanders) in the plane and in R^n, checks that they are planar and
closed where the theory says so, and runs the polygonal flow on arbitrary curves.

Key Features:
- Planar shrinkers and expanders from alpha(0), alpha'(0), exported as CSV and SVG.
- Direct integration in R^n with plane fit, (r, s) planarity check and spherical residuals.
- Closure scan over alpha(0) with CSV, Excel or PDF tables.
- Polygonal curve shortening flow with snapshots and a homothety check.

Usage:
- python main.py shrink2d --alpha0 0.5 --periods 3 --svg shrinker.svg
- python main.py --lang de closure-scan --from 0.05 --to 0.95 --grid 50 --csv scan.csv
- python main.py <command> --help for the options of each command.
"""

import warnings
import sys
import os

# Add the project root to the Python path to resolve module imports
project_root = os.path.dirname(os.path.abspath(__file__))
src_path = os.path.join(project_root, 'src')
sys.path.insert(0, project_root)
sys.path.insert(0, src_path)

import cli  # noqa: E402

# Suppress warnings for cleaner output
warnings.filterwarnings("ignore", category=UserWarning, module="matplotlib")


def main():
    return cli.run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
