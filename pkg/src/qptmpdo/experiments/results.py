"""Result files.

Column layouts:

* trace (``kind="trace"``): ``epoch, loss, fidelity``
* distribution (``kind="distribution"``): ``bitstring, probability``
* sweep (``kind="sweep"``): ``n_qubits, depth, chi, kappa, mean_fidelity,
  stderr, trials`` (``chi``/``kappa`` may be ``"full"``)

JSON output is ``{"kind": ..., "columns": [...], "rows": [{...}, ...]}``.
Rows keep their given order.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ParameterError

COLUMNS = {
    "trace": ["epoch", "loss", "fidelity"],
    "distribution": ["bitstring", "probability"],
    "sweep": ["n_qubits", "depth", "chi", "kappa", "mean_fidelity", "stderr", "trials"],
}


def trace_rows(losses: Sequence[float], fidelities: Sequence[float] | None = None) -> list[dict]:
    fids = list(fidelities) if fidelities is not None else [float("nan")] * len(losses)
    return [{"epoch": i, "loss": float(l), "fidelity": float(f)} for i, (l, f) in enumerate(zip(losses, fids))]


def distribution_rows(dist, n_qubits: int | None = None, tol: float = 1e-8) -> list[dict]:
    dist = np.asarray(dist, dtype=float)
    if abs(dist.sum() - 1.0) > tol:
        raise ParameterError(f"distribution sums to {dist.sum()}, not 1")
    n = n_qubits if n_qubits is not None else int(np.log2(len(dist)))
    return [{"bitstring": format(i, f"0{n}b"), "probability": float(p)} for i, p in enumerate(dist)]


def emit_results(rows: Sequence[dict], path, fmt: str = "csv", kind: str = "sweep") -> Path:
    """Write rows to ``path`` as CSV or JSON (header-only when ``rows`` is empty)."""
    if kind not in COLUMNS:
        raise ParameterError(f"unknown result kind {kind!r}; choose from {sorted(COLUMNS)}")
    cols = COLUMNS[kind]
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="raise")
            w.writeheader()
            for r in rows:
                w.writerow({c: r[c] for c in cols})
    elif fmt == "json":
        with open(path, "w") as fh:
            json.dump({"kind": kind, "columns": cols, "rows": [{c: r[c] for c in cols} for r in rows]}, fh, indent=1)
    else:
        raise ParameterError(f"unknown output format {fmt!r}; choose csv or json")
    return path
