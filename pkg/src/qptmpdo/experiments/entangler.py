"""Variational preparation of an entangled target/measurement-qubit state.

Layout on a chain of ``2N + 1`` qubits: the target sits in the middle (site
``N``) with ``N`` measurement qubits on each side. The circuit is a target
RY preparation followed by ``p`` layers; each layer applies RZZ on every
nearest-neighbour bond, then RZZ on any extra measurement pairs listed in
``j_mn``, then RX on every measurement qubit.

Parameters per layer: ``2N + len(j_mn) + 2N``; total ``p * (4N + len(j_mn))``.
Within a layer the order is bonds (left to right), extra pairs, RX gates
(measurement qubits in chain order).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .. import dense
from ..circuit import Circuit, Gate, NoisePolicy
from ..errors import ParameterError
from .optimize import Objective, OptimizerConfig, VariationalTrace, run_variational

# sin(pi/8)|0> + cos(pi/8)|1>
DEFAULT_TARGET = (np.sin(np.pi / 8), np.cos(np.pi / 8))


@dataclass(frozen=True)
class IsingSpec:
    n_measure: int = 2
    j_sm: float = 1.0
    j_mn: Mapping[tuple[int, int], float] = field(default_factory=dict)
    target_state: tuple[complex, complex] = DEFAULT_TARGET

    def __post_init__(self):
        if self.n_measure < 2 or self.n_measure % 2:
            raise ParameterError(f"n_measure must be even and >= 2, got {self.n_measure}")
        v = np.asarray(self.target_state, dtype=np.complex128)
        if v.shape != (2,) or not np.isclose(np.linalg.norm(v), 1.0, atol=1e-10):
            raise ParameterError("target_state must be a normalized 2-vector")
        for (a, b) in self.j_mn:
            if a == b or not {a, b} <= set(self.measure_qubits):
                raise ParameterError(f"j_mn pair {(a, b)} must join two distinct measurement qubits")

    @property
    def n_qubits(self) -> int:
        return self.n_measure + 1

    @property
    def target(self) -> int:
        return self.n_measure // 2

    @property
    def measure_qubits(self) -> list[int]:
        return [q for q in range(self.n_qubits) if q != self.target]

    def params_per_layer(self) -> int:
        return 2 * self.n_measure + len(self.j_mn)

    def n_params(self, depth: int) -> int:
        return depth * self.params_per_layer()

    def preparation_angle(self) -> float:
        """RY angle ``t`` with ``exp(i t Y)|0> = target_state`` up to phase.

        ``exp(i t Y)|0> = cos t |0> - sin t |1>``.
        """
        a, b = np.asarray(self.target_state, dtype=np.complex128)
        phase = np.exp(-1j * np.angle(a)) if abs(a) > 0 else np.exp(-1j * np.angle(b))
        a, b = (a * phase).real, (b * phase).real
        return float(np.arctan2(-b, a))


def build_entangler_circuit(spec: IsingSpec, depth: int, params) -> Circuit:
    params = np.asarray(params, dtype=float).ravel()
    if depth < 0:
        raise ParameterError(f"depth must be >= 0, got {depth}")
    if params.size != spec.n_params(depth):
        raise ParameterError(
            f"entangler with {spec.n_measure} measurement qubits and depth {depth} needs "
            f"{spec.n_params(depth)} parameters, got {params.size}"
        )
    n, t = spec.n_qubits, spec.target
    gates = [Gate("RY", (t,), (spec.preparation_angle(),), label="prep")]
    k = 0
    for _ in range(depth):
        for a in range(n - 1):
            scale = spec.j_sm
            gates.append(Gate("RZZ", (a, a + 1), (scale * params[k],), param_index=k, param_scale=scale))
            k += 1
        for (a, b), j in spec.j_mn.items():
            gates.append(Gate("RZZ", (a, b), (j * params[k],), param_index=k, param_scale=j))
            k += 1
        for q in spec.measure_qubits:
            gates.append(Gate("RX", (q,), (params[k],), param_index=k))
            k += 1
    return Circuit(n, tuple(gates))


@dataclass
class EntanglerResult:
    trace: VariationalTrace
    target_distribution: np.ndarray
    target_state: np.ndarray
    reference_params: np.ndarray


def reference_target(spec: IsingSpec, depth: int, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ideal (dense-oracle) output at seeded reference angles.

    Returns ``(params, distribution, density)``.
    """
    rng = np.random.default_rng(seed)
    ref = rng.uniform(-np.pi / 2, np.pi / 2, size=spec.n_params(depth))
    st = dense.simulate_dense(build_entangler_circuit(spec, depth, ref))
    return ref, st.probabilities, st.rho


def run_entangler(
    spec: IsingSpec,
    depth: int,
    opt: OptimizerConfig = OptimizerConfig(),
    policy: NoisePolicy | None = None,
    backend: str = "mpdo",
    trunc=None,
    reference_seed: int = 1234,
    init=None,
    fidelity_kind: str = "distribution",
) -> EntanglerResult:
    """Fit the entangler to the ideal output at seeded reference angles.

    The target distribution and state come from the dense oracle at
    ``reference_params``; the reported fidelity follows ``fidelity_kind``
    (see :class:`~qptmpdo.experiments.optimize.Objective`).
    """
    ref, dist, rho = reference_target(spec, depth, reference_seed)
    objective = Objective(opt.loss, target_distribution=dist, target_state=rho, fidelity_kind=fidelity_kind)
    tr = run_variational(
        lambda th: build_entangler_circuit(spec, depth, th),
        spec.n_params(depth),
        objective,
        opt,
        policy=policy,
        backend=backend,
        trunc=trunc,
        init=init,
    )
    return EntanglerResult(tr, dist, rho, ref)
