"""Brute-force reference simulator on full density matrices.

Deliberately simple: every gate and Kraus operator is embedded into the
full ``2^n``-dimensional space and applied as ``rho -> sum K rho K^H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, embed, gate_unitary
from .errors import ResourceError
from .graph import MaxCutGraph

MAX_QUBITS = 10


@dataclass
class DenseState:
    n_qubits: int
    rho: np.ndarray

    @property
    def probabilities(self) -> np.ndarray:
        return np.clip(np.diagonal(self.rho).real, 0.0, None)


def product_density(local_states) -> np.ndarray:
    psi = np.ones(1, dtype=np.complex128)
    for s in local_states:
        psi = np.kron(psi, np.asarray(s, dtype=np.complex128))
    return np.outer(psi, psi.conj())


def apply_kraus(rho: np.ndarray, ops, qubits, n_qubits: int) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in ops:
        full = embed(k, tuple(qubits), n_qubits)
        out += full @ rho @ full.conj().T
    return out


def simulate_dense(circuit: Circuit, initial_states=None) -> DenseState:
    n = circuit.n_qubits
    if n > MAX_QUBITS:
        raise ResourceError(f"dense oracle is capped at {MAX_QUBITS} qubits, got {n}")
    if initial_states is None:
        initial_states = [np.array([1.0, 0.0])] * n
    rho = product_density(initial_states)
    for q, c in sorted((circuit.preparation or {}).items()):
        rho = apply_kraus(rho, c.operators, (q,), n)
    for g in circuit.gates:
        u = gate_unitary(g)
        if g.noise is None:
            rho = apply_kraus(rho, [u], g.qubits, n)
        else:
            rho = apply_kraus(rho, [k @ u for k in g.noise.operators], g.qubits, n)
    for q, c in sorted((circuit.measurement or {}).items()):
        rho = apply_kraus(rho, c.operators, (q,), n)
    return DenseState(n, rho)


@dataclass(frozen=True)
class MaxCutSolution:
    value: int
    bitstrings: tuple[str, ...]

    @property
    def partitions(self) -> set[frozenset[frozenset[int]]]:
        out = set()
        for b in self.bitstrings:
            a = frozenset(i for i, c in enumerate(b) if c == "0")
            c = frozenset(i for i, ch in enumerate(b) if ch == "1")
            out.add(frozenset((a, c)))
        return out


def maxcut_bruteforce(graph: MaxCutGraph) -> MaxCutSolution:
    """Enumerate all ``2^n`` assignments and keep the maximum cuts."""
    n = graph.n_vertices
    if n > 20:
        raise ResourceError("brute-force MaxCut is limited to 20 vertices")
    best, winners = -1, []
    for z in range(2**n):
        bits = format(z, f"0{n}b")
        c = graph.cut_value(bits)
        if c > best:
            best, winners = c, [bits]
        elif c == best:
            winners.append(bits)
    return MaxCutSolution(best, tuple(winners))
