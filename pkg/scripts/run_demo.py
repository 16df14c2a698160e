"""End-to-end demo through the CLI entry point, followed by the validation suite."""

from __future__ import annotations

import sys

from sphardy.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    code = main(["validate", *args])
    code = max(code, main(["demo", *args]))
    sys.exit(code)
