"""QAOA for MaxCut.

Per layer ``l`` the edge unitary ``exp(-i b_l (1 - ZZ) / 2)`` equals
``RZZ(b_l / 2)`` up to a global phase and the mixer ``exp(-i a_l X)`` is
``RX(-a_l)`` in this package's ``exp(+i t G)`` rotation convention.
The angle vector is ``(a_1..a_p, b_1..b_p)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import dense, mpdo
from ..circuit import Circuit, Gate, NoisePolicy
from ..errors import ParameterError
from ..graph import MaxCutGraph
from .optimize import Objective, OptimizerConfig, VariationalTrace, run_variational
from . import runner


def maxcut_objective(state, graph: MaxCutGraph) -> float:
    """``C = sum over edges of (1 - <Z_i Z_k>) / 2``.

    ``state`` may be an :class:`~qptmpdo.mpdo.MpdoState`, a
    :class:`~qptmpdo.dense.DenseState` or a density matrix.
    """
    n = graph.n_vertices
    total = 0.0
    for i, k in graph.edges:
        label = "".join("Z" if q in (i, k) else "I" for q in range(n))
        if isinstance(state, mpdo.MpdoState):
            if state.n_qubits != n:
                raise ParameterError(f"state has {state.n_qubits} qubits, graph has {n} vertices")
            zz = mpdo.expectation(state, label, normalize=True)
        else:
            rho = state.rho if isinstance(state, dense.DenseState) else np.asarray(state)
            if rho.shape != (2**n, 2**n):
                raise ParameterError(f"density matrix shape {rho.shape} does not match {n} vertices")
            diag = np.diagonal(rho).real
            zz = float(np.dot(diag, _zz_signs(n, i, k)) / diag.sum())
        total += 0.5 * (1.0 - zz)
    return float(total)


def _zz_signs(n: int, i: int, k: int) -> np.ndarray:
    idx = np.arange(2**n)
    bi = (idx >> (n - 1 - i)) & 1
    bk = (idx >> (n - 1 - k)) & 1
    return 1.0 - 2.0 * (bi ^ bk)


def cut_table(graph: MaxCutGraph) -> np.ndarray:
    """Classical cut value of every basis state (vertex 0 most significant)."""
    return np.array([graph.cut_value(z) for z in range(2**graph.n_vertices)], dtype=float)


def build_maxcut_circuit(graph: MaxCutGraph, p: int, alphas, betas) -> Circuit:
    alphas = np.asarray(alphas, dtype=float).ravel()
    betas = np.asarray(betas, dtype=float).ravel()
    if alphas.size != p or betas.size != p:
        raise ParameterError(f"depth {p} needs {p} alphas and {p} betas, got {alphas.size} and {betas.size}")
    n = graph.n_vertices
    gates = [Gate("H", (q,)) for q in range(n)]
    for layer in range(p):
        b = betas[layer]
        for i, k in graph.edges:
            gates.append(Gate("RZZ", (i, k), (0.5 * b,), param_index=p + layer, param_scale=0.5))
        a = alphas[layer]
        for q in range(n):
            gates.append(Gate("RX", (q,), (-a,), param_index=layer, param_scale=-1.0))
    return Circuit(n, tuple(gates))


@dataclass
class MaxCutResult:
    trace: VariationalTrace
    distribution: np.ndarray
    best_bitstrings: list[str]
    cut_value: float
    ranking: list[tuple[str, float]]

    def top(self, k: int) -> list[str]:
        return [b for b, _ in self.ranking[:k]]


def rank_states(dist: np.ndarray, n: int) -> list[tuple[str, float]]:
    # stable sort: ties resolved by basis index
    order = np.argsort(-np.asarray(dist), kind="stable")
    return [(format(int(i), f"0{n}b"), float(dist[i])) for i in order]


def run_maxcut(
    graph: MaxCutGraph,
    p: int,
    opt: OptimizerConfig = OptimizerConfig(loss="neg_cut"),
    policy: NoisePolicy | None = None,
    backend: str = "mpdo",
    trunc=None,
    init=None,
) -> MaxCutResult:
    """Minimize ``-C`` and report the most probable bitstrings.

    ``best_bitstrings`` are the states tied for the highest probability
    (relative tolerance 1e-6); ``cut_value`` is the expected cut at the
    final angles.
    """
    cuts = cut_table(graph)
    objective = Objective("neg_cut", cut_values=cuts)
    tr = run_variational(
        lambda th: build_maxcut_circuit(graph, p, th[:p], th[p:]),
        2 * p,
        objective,
        opt,
        policy=policy,
        backend=backend,
        trunc=trunc,
        init=init,
    )
    return summarize(graph, tr.distribution, tr)


def summarize(graph: MaxCutGraph, dist: np.ndarray, tr: VariationalTrace | None = None) -> MaxCutResult:
    ranking = rank_states(dist, graph.n_vertices)
    top = ranking[0][1]
    best = [b for b, pr in ranking if pr >= top * (1 - 1e-6)]
    return MaxCutResult(tr, np.asarray(dist), best, float(np.dot(dist, cut_table(graph))), ranking)


def evaluate_maxcut(
    graph: MaxCutGraph, p: int, params, policy: NoisePolicy | None = None, backend: str = "mpdo", trunc=None
) -> MaxCutResult:
    """Distribution at fixed angles (e.g. ideal-optimized angles under noise)."""
    params = np.asarray(params, dtype=float)
    res = runner.simulate(build_maxcut_circuit(graph, p, params[:p], params[p:]), policy, backend, trunc)
    return summarize(graph, res.probabilities)
