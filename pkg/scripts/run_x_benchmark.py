#!/usr/bin/env python3
"""Single-qubit X-repetition benchmark: noisy gates vs channel simulator
against the Lindblad reference, at the shipped desk calibration.

Writes the comparison bundle (distributions, Hellinger series, summary
with relative improvement) under runs/.
"""

import sys
from pathlib import Path

from noisygates.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "compare",
                "--experiment", "repeat_x",
                "--reps", "500",
                "--checkpoints", "50",
                "--shots", "4000",
                "--runs", "10",
                "--seed", "0",
                "--device", str(ROOT / "configs" / "desk_device.json"),
                "--out", str(ROOT / "runs"),
            ]
            + sys.argv[1:]
        )
    )
