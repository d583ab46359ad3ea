"""Does tomography data beat a fitted standard noise model?

A synthetic device hides non-trivial CZ channels. Its exact process
matrices are exported as QPT records. The same CZ-compiled circuit is then
simulated three ways:

* ground truth: dense oracle with the hidden channels;
* QPT model: MPDO with the gateset rebuilt from the records;
* standard model: MPDO with per-pair depolarizing noise whose rates start
  from each channel's average gate fidelity (``p = 4/3 (1 - F)``) and are
  then fitted to the ground truth by gradient descent on the JSD.

Both models get the device's readout flip probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import channels as ch
from .. import metrics, qpt_io
from ..circuit import Circuit, Gate, NoiseMode, NoisePolicy, gate_unitary, to_cz_form
from .entangler import IsingSpec, build_entangler_circuit
from .optimize import Objective, OptimizerConfig, run_variational
from . import runner

DEFAULT_FIT = OptimizerConfig(epochs=40, lr=0.1, loss="jsd", h=1e-4)


@dataclass
class ModelComparison:
    truth: np.ndarray
    qpt_distribution: np.ndarray
    standard_distribution: np.ndarray
    jsd_qpt: float
    jsd_standard: float
    jsd_standard_initial: float
    fitted_rates: np.ndarray
    initial_rates: np.ndarray


def demo_circuit(n_qubits: int, depth: int, seed: int) -> Circuit:
    """Entangler-layout circuit at seeded angles, compiled to CZ form."""
    spec = IsingSpec(n_measure=n_qubits - 1)
    rng = np.random.default_rng(seed)
    params = rng.uniform(-np.pi / 2, np.pi / 2, size=spec.n_params(depth))
    return to_cz_form(build_entangler_circuit(spec, depth, params))


def _standard_policy(pairs, rates, p_meas) -> NoisePolicy:
    rates = np.clip(rates, 0.0, 1.0)
    return NoisePolicy(
        NoiseMode.GENERAL, p2_pairs={frozenset(pr): float(r) for pr, r in zip(pairs, rates)}, p_meas=dict(p_meas)
    )


def compare_noise_models(
    n_qubits: int = 5,
    seed: int = 0,
    depth: int = 1,
    strength: float = 1.0,
    fit: OptimizerConfig = DEFAULT_FIT,
    backend: str = "mpdo",
) -> ModelComparison:
    device = qpt_io.synthetic_device(n_qubits, seed, strength)
    circuit = demo_circuit(n_qubits, depth, seed)
    truth = runner.simulate(circuit, device.truth_policy(), "dense").probabilities

    gateset = qpt_io.build_noisy_gateset(device.records())
    qpt_policy = NoisePolicy(NoiseMode.QPT, gateset=gateset, p_meas=dict(device.p_meas))
    qpt_dist = runner.simulate(circuit, qpt_policy, backend).probabilities

    cz = gate_unitary(Gate("CZ", (0, 1)))
    pairs = sorted(device.cz_channels)
    init = np.array(
        [qpt_io.fidelity_to_depolarizing(ch.average_gate_fidelity(device.cz_channels[p], cz)) for p in pairs]
    )
    trace = run_variational(
        lambda th: (circuit, _standard_policy(pairs, th, device.p_meas)),
        len(pairs),
        Objective("jsd", target_distribution=truth),
        fit,
        backend=backend,
        init=init,
    )
    return ModelComparison(
        truth=truth,
        qpt_distribution=qpt_dist,
        standard_distribution=trace.distribution,
        jsd_qpt=metrics.jsd(qpt_dist, truth),
        jsd_standard=trace.final_loss,
        jsd_standard_initial=trace.initial_loss,
        fitted_rates=np.clip(trace.params, 0.0, 1.0),
        initial_rates=init,
    )
