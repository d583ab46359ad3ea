"""Random-circuit truncation sweep.

A depth-``m`` random circuit on ``Q`` qubits has ``m`` blocks of
(single-qubit layer, CNOT layer) followed by a final single-qubit layer.
Single-qubit gates are drawn from {RX, RY, RZ} with angles uniform on
``(0, 2pi]``; CNOT layers alternate between (even, odd) and (odd, even)
pairs. Crosstalk RZ rotations are injected next to every CNOT before noise
is attached.

Each trial compares the truncated MPDO state with the untruncated state of
the same noisy circuit (dense oracle) through the Uhlmann fidelity.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .. import dense, metrics, mpdo
from .. import qpt_io
from ..circuit import Circuit, Gate, NoiseMode, NoisePolicy, attach_noise, inject_crosstalk
from ..errors import ParameterError

MAX_SWEEP_QUBITS = 8
SINGLE_QUBIT_KINDS = ("RX", "RY", "RZ")
SYNTHETIC_DEVICE_SEED = 7


def synthetic_policy(n_qubits: int, device_seed: int = SYNTHETIC_DEVICE_SEED, strength: float = 1.0) -> NoisePolicy:
    """QPT-mode policy from a seeded synthetic device (the reference sweep noise)."""
    device = qpt_io.synthetic_device(n_qubits, device_seed, strength)
    return NoisePolicy(NoiseMode.QPT, gateset=qpt_io.build_noisy_gateset(device.records()))


def random_circuit(n_qubits: int, depth: int, rng: np.random.Generator) -> Circuit:
    if n_qubits < 2:
        raise ParameterError("random circuits need at least two qubits")
    gates: list[Gate] = []

    def single_layer():
        for q in range(n_qubits):
            kind = SINGLE_QUBIT_KINDS[int(rng.integers(3))]
            # rng.random() is in [0, 1); map to (0, 2pi]
            angle = 2 * np.pi * (1.0 - rng.random())
            gates.append(Gate(kind, (q,), (angle,)))

    for layer in range(depth):
        single_layer()
        for a in range(layer % 2, n_qubits - 1, 2):
            gates.append(Gate("CNOT", (a, a + 1)))
    single_layer()
    return Circuit(n_qubits, tuple(gates))


def noisy_random_circuit(n_qubits: int, depth: int, policy: NoisePolicy, seed: int, crosstalk: bool = True) -> Circuit:
    rng = np.random.default_rng(seed)
    circ = random_circuit(n_qubits, depth, rng)
    if crosstalk:
        circ = inject_crosstalk(circ, int(rng.integers(2**31)))
    return attach_noise(circ, policy)


def truncated_fidelity(circuit: Circuit, reference: np.ndarray, chi: int | None, kappa: int | None) -> float:
    st = mpdo.simulate_mpdo(circuit, mpdo.TruncationConfig(chi_max=chi, kappa_max=kappa))
    rho = mpdo.full_density_matrix(st)
    rho = rho / np.trace(rho).real
    return metrics.fidelity(reference, rho)


@dataclass(frozen=True)
class SweepPoint:
    n_qubits: int
    depth: int
    chi: int | None
    kappa: int | None
    mean: float
    stderr: float
    trials: int


@dataclass
class SweepTable:
    points: list[SweepPoint] = field(default_factory=list)

    def get(self, n_qubits: int, depth: int, chi, kappa) -> SweepPoint:
        for p in self.points:
            if (p.n_qubits, p.depth, p.chi, p.kappa) == (n_qubits, depth, chi, kappa):
                return p
        raise KeyError((n_qubits, depth, chi, kappa))

    def rows(self) -> list[dict]:
        return [
            {
                "n_qubits": p.n_qubits,
                "depth": p.depth,
                "chi": "full" if p.chi is None else p.chi,
                "kappa": "full" if p.kappa is None else p.kappa,
                "mean_fidelity": p.mean,
                "stderr": p.stderr,
                "trials": p.trials,
            }
            for p in self.points
        ]


def _trial(args) -> list[float]:
    n_qubits, depth, policy, seed, grid, crosstalk = args
    circ = noisy_random_circuit(n_qubits, depth, policy, seed, crosstalk)
    ref = dense.simulate_dense(circ).rho
    return [truncated_fidelity(circ, ref, chi, kappa) for chi, kappa in grid]


def truncation_sweep(
    n_qubits: int,
    depths: Sequence[int],
    trials: int,
    chis: Sequence[int | None],
    kappas: Sequence[int | None],
    policy: NoisePolicy,
    seed: int = 0,
    crosstalk: bool = True,
    workers: int = 1,
) -> SweepTable:
    """Mean fidelity and standard error over ``trials`` random circuits.

    Trial ``t`` uses seed ``seed + t`` for every depth, so results do not
    depend on scheduling; with ``workers > 1`` trials run in worker
    processes.
    """
    if n_qubits > MAX_SWEEP_QUBITS:
        raise ParameterError(f"sweeps are limited to {MAX_SWEEP_QUBITS} qubits (dense reference)")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    grid = list(product(chis, kappas))
    table = SweepTable()
    for depth in depths:
        jobs = [(n_qubits, depth, policy, seed + t, grid, crosstalk) for t in range(trials)]
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_trial, jobs))
        else:
            results = [_trial(j) for j in jobs]
        fids = np.array(results).reshape(trials, len(grid))
        for g, (chi, kappa) in enumerate(grid):
            col = fids[:, g]
            err = float(col.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
            table.points.append(SweepPoint(n_qubits, depth, chi, kappa, float(col.mean()), err, trials))
    return table
