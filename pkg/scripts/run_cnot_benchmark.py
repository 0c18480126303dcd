#!/usr/bin/env python3
"""Two-qubit CNOT-repetition benchmark from |10> with measured qubits
(pre-measurement readout noise in every backend).  Pass
``--cnot-mode decomposed`` to execute each CNOT as RZ/SX/CR."""

import sys
from pathlib import Path

from noisygates.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "compare",
                "--experiment", "repeat_cnot",
                "--reps", "100",
                "--checkpoints", "50",
                "--shots", "1000",
                "--runs", "10",
                "--seed", "0",
                "--device", str(ROOT / "configs" / "desk_device.json"),
                "--out", str(ROOT / "runs"),
            ]
            + sys.argv[1:]
        )
    )
