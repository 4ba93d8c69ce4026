"""Run the twelve acceptance criteria and print one PASS/FAIL line each (exit 1 if any fails)."""

import runpy
import sys
from pathlib import Path

if __name__ == "__main__":
    sys.argv = [str(Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py")]
    runpy.run_path(sys.argv[0], run_name="__main__")
