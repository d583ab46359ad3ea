"""Route, attach noise and simulate a circuit on either backend."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import dense, mpdo
from ..circuit import Circuit, NoisePolicy, attach_noise, route_to_adjacent
from ..errors import ConfigurationError

BACKENDS = ("mpdo", "dense")


def prepare(circuit: Circuit, policy: NoisePolicy | None = None) -> Circuit:
    """Adjacency routing followed by noise attachment."""
    routed = route_to_adjacent(circuit)
    return attach_noise(routed, policy) if policy is not None else routed


@dataclass
class SimResult:
    probabilities: np.ndarray
    backend: str
    drift: float = 0.0
    truncation_error: float = 0.0
    state: object = field(default=None, repr=False)

    def density(self) -> np.ndarray:
        """Trace-normalized density matrix of the final state."""
        if self.backend == "dense":
            return self.state.rho
        rho = mpdo.full_density_matrix(self.state)
        return rho / np.trace(rho).real


def run_prepared(
    circuit: Circuit,
    backend: str = "mpdo",
    trunc: mpdo.TruncationConfig | None = None,
    initial_states=None,
) -> SimResult:
    """Simulate a circuit that is already routed and noise-annotated."""
    if backend == "dense":
        st = dense.simulate_dense(circuit, initial_states)
        return SimResult(st.probabilities, "dense", state=st)
    if backend != "mpdo":
        raise ConfigurationError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    st = mpdo.simulate_mpdo(circuit, trunc, initial_states)
    p, drift = mpdo.probabilities(st, return_drift=True)
    return SimResult(p, "mpdo", drift=drift, truncation_error=st.truncation_error, state=st)


def simulate(
    circuit: Circuit,
    policy: NoisePolicy | None = None,
    backend: str = "mpdo",
    trunc: mpdo.TruncationConfig | None = None,
    initial_states=None,
) -> SimResult:
    return run_prepared(prepare(circuit, policy), backend, trunc, initial_states)
