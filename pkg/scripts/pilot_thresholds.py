"""Pilot run that freezes the derived sweep thresholds.

Writes ``tests/fixtures/frozen_thresholds.json``. The file is produced only
by this script; rerun it instead of editing the numbers.

Usage: python scripts/pilot_thresholds.py [output.json]
"""

from __future__ import annotations

import json
import math
import sys
import time
from pathlib import Path

from qptmpdo.experiments.sweep import SYNTHETIC_DEVICE_SEED, synthetic_policy, truncation_sweep

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "frozen_thresholds.json"

ACCEPTANCE = {"depths": [2, 4, 8], "trials": 100, "chis": [2, 4, 8], "kappas": [1, 2, 4], "seed": 0}
CLI_SMOKE = {"depths": [2, 4, 6], "trials": 50, "chis": [2, 4, 8], "kappas": [1, 2, 4], "seed": 0}


def floor3(x: float) -> float:
    return math.floor(x * 1000) / 1000


def pilot(n_qubits: int, cfg: dict) -> dict:
    t = time.time()
    table = truncation_sweep(
        n_qubits, cfg["depths"], cfg["trials"], cfg["chis"], cfg["kappas"], synthetic_policy(n_qubits), cfg["seed"]
    )
    means = [p.mean for p in table.points]
    return {
        "n_qubits": n_qubits,
        **cfg,
        "pilot_min_mean_fidelity": min(means),
        "min_mean_fidelity_threshold": floor3(min(means)),
        "pilot_seconds": round(time.time() - t, 1),
    }


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else OUT
    frozen = {
        "generator": "scripts/pilot_thresholds.py",
        "noise": {"kind": "synthetic-qpt-device", "device_seed": SYNTHETIC_DEVICE_SEED, "strength": 1.0},
        "sweep_q3_acceptance": pilot(3, ACCEPTANCE),
        "sweep_q3_cli_smoke": pilot(3, CLI_SMOKE),
    }
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(frozen, indent=2) + "\n")
    print(json.dumps(frozen, indent=2))


if __name__ == "__main__":
    main()
