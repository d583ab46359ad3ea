"""Plain gradient descent over circuit angles.

A *builder* maps an angle vector ``theta`` to a :class:`Circuit` whose
trainable gates carry ``param_index``/``param_scale`` so that
``gate.params[0] == param_scale * theta[param_index]``. A builder may instead
return ``(circuit, policy)``, which lets the same descent fit noise-model
parameters (finite differences only). Two gradient methods are offered:

* central finite differences with step ``h``;
* the parameter-shift rule for gates ``exp(i t G)`` with ``G^2 = I``:
  ``d<O>/dt = <O>(t + pi/4) - <O>(t - pi/4)``, applied per gate occurrence
  and chained through the loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .. import metrics
from ..circuit import PAULI_ROTATIONS, Circuit, NoisePolicy
from ..errors import ConfigurationError, OptimizationDivergedError, ParameterError
from . import runner

LOSSES = ("jsd", "neg_cut", "infidelity")
GRADIENTS = ("fd", "param-shift")
SHIFT = np.pi / 4


@dataclass(frozen=True)
class OptimizerConfig:
    epochs: int = 200
    lr: float = 0.1
    grad: str = "fd"
    h: float = 1e-3
    seed: int = 0
    loss: str = "jsd"
    restarts: int = 1
    init_scale: float = np.pi / 2

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ParameterError(f"learning rate must be positive, got {self.lr}")
        if self.grad not in GRADIENTS:
            raise ParameterError(f"gradient method must be one of {GRADIENTS}, got {self.grad!r}")
        if self.loss not in LOSSES:
            raise ParameterError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if not self.h > 0:
            raise ParameterError(f"finite-difference step must be positive, got {self.h}")
        if self.restarts < 1:
            raise ParameterError(f"restarts must be >= 1, got {self.restarts}")


@dataclass
class Objective:
    """What the optimizer minimizes.

    ``target_distribution`` drives ``jsd``; ``cut_values`` (classical cut per
    basis state) drives ``neg_cut``; ``target_state`` (density matrix) drives
    ``infidelity``.

    The per-epoch fidelity trace uses ``fidelity_kind``: ``"state"`` is the
    Uhlmann fidelity to ``target_state``; ``"distribution"`` is the fidelity
    between measured (dephased) states, i.e. the classical fidelity of the
    output and target distributions.
    """

    loss: str
    target_distribution: np.ndarray | None = None
    target_state: np.ndarray | None = None
    cut_values: np.ndarray | None = None
    fidelity_kind: str = "state"

    def __post_init__(self):
        need = {"jsd": "target_distribution", "neg_cut": "cut_values", "infidelity": "target_state"}[self.loss]
        if getattr(self, need) is None:
            raise ConfigurationError(f"loss {self.loss!r} needs {need}")
        if self.fidelity_kind not in ("state", "distribution"):
            raise ConfigurationError(f"unknown fidelity kind {self.fidelity_kind!r}")

    def value(self, res: runner.SimResult) -> float:
        if self.loss == "jsd":
            return metrics.jsd(res.probabilities, self.target_distribution)
        if self.loss == "neg_cut":
            return -float(np.dot(res.probabilities, self.cut_values))
        return 1.0 - metrics.fidelity(res.density(), self.target_state)

    def fidelity(self, res: runner.SimResult) -> float:
        if self.fidelity_kind == "distribution" and self.target_distribution is not None:
            return metrics.classical_fidelity(res.probabilities, self.target_distribution)
        if self.target_state is None:
            return float("nan")
        return metrics.fidelity(res.density(), self.target_state)


@dataclass
class VariationalTrace:
    losses: list[float] = field(default_factory=list)
    fidelities: list[float] = field(default_factory=list)
    params: np.ndarray | None = None
    distribution: np.ndarray | None = None
    initial_params: np.ndarray | None = None
    restart: int = 0

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


class _Evaluator:
    def __init__(self, builder, objective, policy, backend, trunc):
        self.builder = builder
        self.objective = objective
        self.policy = policy
        self.backend = backend
        self.trunc = trunc

    def run_circuit(self, prepared: Circuit) -> runner.SimResult:
        return runner.run_prepared(prepared, self.backend, self.trunc)

    def prepared(self, theta) -> Circuit:
        built = self.builder(np.asarray(theta, dtype=float))
        if isinstance(built, tuple):
            # builders may also return the noise policy (for fitting noise rates)
            circuit, policy = built
            return runner.prepare(circuit, policy)
        return runner.prepare(built, self.policy)

    def evaluate(self, theta) -> tuple[float, runner.SimResult]:
        res = self.run_circuit(self.prepared(theta))
        return self.objective.value(res), res

    def grad_fd(self, theta, h: float) -> np.ndarray:
        g = np.zeros_like(theta)
        for k in range(len(theta)):
            e = np.zeros_like(theta)
            e[k] = h
            g[k] = (self.evaluate(theta + e)[0] - self.evaluate(theta - e)[0]) / (2 * h)
        return g

    def _loss_direction(self, res: runner.SimResult):
        """Return ``f`` with ``dL = f(res_plus, res_minus)`` for one shifted pair."""
        obj = self.objective
        if obj.loss == "jsd":
            dldp = metrics.jsd_gradient(res.probabilities, obj.target_distribution)
            return lambda rp, rm: float(np.dot(dldp, rp.probabilities - rm.probabilities))
        if obj.loss == "neg_cut":
            return lambda rp, rm: -float(np.dot(obj.cut_values, rp.probabilities - rm.probabilities))
        target = obj.target_state
        if np.linalg.matrix_rank(target, tol=1e-10) != 1:
            raise ConfigurationError("parameter-shift infidelity needs a pure target state")
        return lambda rp, rm: -float(np.trace(target @ (rp.density() - rm.density())).real)

    def grad_shift(self, theta, res: runner.SimResult) -> np.ndarray:
        prepared = self.prepared(theta)
        direction = self._loss_direction(res)
        g = np.zeros_like(theta)
        gates = list(prepared.gates)
        for j, gate in enumerate(gates):
            if gate.param_index is None:
                continue
            if gate.kind not in PAULI_ROTATIONS:
                raise ConfigurationError(
                    f"parameter-shift needs exp(i t G) gates with G^2 = I; trainable {gate.kind} is not"
                )
            angle = gate.params[0]
            shifted = []
            for s in (SHIFT, -SHIFT):
                gs = list(gates)
                gs[j] = gate.with_angle(angle + s)
                shifted.append(self.run_circuit(replace(prepared, gates=tuple(gs))))
            g[gate.param_index] += gate.param_scale * direction(*shifted)
        return g


def run_variational(
    builder: Callable[[np.ndarray], Circuit],
    n_params: int,
    objective: Objective,
    opt: OptimizerConfig = OptimizerConfig(),
    policy: NoisePolicy | None = None,
    backend: str = "mpdo",
    trunc=None,
    init: np.ndarray | None = None,
) -> VariationalTrace:
    """Gradient descent on ``objective`` starting from ``init`` or random angles.

    With ``restarts > 1`` each restart draws fresh angles from the seeded
    generator and the restart with the lowest final loss is returned.

    Raises:
        OptimizationDivergedError: the loss became NaN; carries the epoch.
    """
    if objective.loss != opt.loss:
        raise ConfigurationError(f"objective loss {objective.loss!r} differs from configured loss {opt.loss!r}")
    ev = _Evaluator(builder, objective, policy, backend, trunc)
    rng = np.random.default_rng(opt.seed)
    best: VariationalTrace | None = None
    for restart in range(opt.restarts):
        if init is not None and restart == 0:
            theta = np.array(init, dtype=float)
        else:
            theta = rng.uniform(-opt.init_scale, opt.init_scale, size=n_params)
        if theta.shape != (n_params,):
            raise ParameterError(f"expected {n_params} initial parameters, got shape {theta.shape}")
        tr = VariationalTrace(initial_params=theta.copy(), restart=restart)
        for epoch in range(opt.epochs + 1):
            loss, res = ev.evaluate(theta)
            if not np.isfinite(loss):
                raise OptimizationDivergedError(epoch, f"loss is {loss} at epoch {epoch}")
            tr.losses.append(float(loss))
            tr.fidelities.append(objective.fidelity(res))
            if epoch == opt.epochs:
                tr.params = theta.copy()
                tr.distribution = res.probabilities.copy()
                break
            g = ev.grad_fd(theta, opt.h) if opt.grad == "fd" else ev.grad_shift(theta, res)
            if not np.all(np.isfinite(g)):
                raise OptimizationDivergedError(epoch, f"non-finite gradient at epoch {epoch}")
            theta = theta - opt.lr * g
        if best is None or tr.final_loss < best.final_loss:
            best = tr
    return best


def gradient(
    builder: Callable[[np.ndarray], Circuit],
    theta: np.ndarray,
    objective: Objective,
    method: str = "fd",
    h: float = 1e-3,
    policy: NoisePolicy | None = None,
    backend: str = "mpdo",
) -> np.ndarray:
    """Loss gradient at ``theta`` with either method (exposed for checks)."""
    ev = _Evaluator(builder, objective, policy, backend, None)
    theta = np.asarray(theta, dtype=float)
    if method == "fd":
        return ev.grad_fd(theta, h)
    if method == "param-shift":
        _, res = ev.evaluate(theta)
        return ev.grad_shift(theta, res)
    raise ParameterError(f"unknown gradient method {method!r}")
