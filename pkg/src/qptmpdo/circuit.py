"""Gate/circuit representation and circuit-level transforms.

Rotation convention: ``RX(t) = exp(i t X)``, ``RY(t) = exp(i t Y)``,
``RZ(t) = exp(i t Z)`` and ``RZZ(t) = exp(i t Z(x)Z)`` (positive exponent,
full angle). ``CP(t) = diag(1, 1, 1, e^{it})``. For two-qubit gates the first
listed qubit is the most significant index of the 4x4 matrix; for ``CNOT``
it is the control.

A gate's ``noise`` is a channel on the gate's own qubits (same ordering as
its matrix) applied right after the ideal unitary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from . import channels as ch
from .errors import ConfigurationError, ParameterError, SchemaError, ShapeError

PARAM_COUNT = {
    "H": 0,
    "RX": 1,
    "RY": 1,
    "RZ": 1,
    "CZ": 0,
    "CP": 1,
    "CNOT": 0,
    "RZZ": 1,
    "SWAP": 0,
    "CustomUnitary": 0,
}
TWO_QUBIT_KINDS = {"CZ", "CP", "CNOT", "RZZ", "SWAP"}
# gates of the form exp(i t G) with G^2 = I (parameter-shift compatible)
PAULI_ROTATIONS = {"RX", "RY", "RZ", "RZZ"}

_ALIASES = {"CX": "CNOT", "CUSTOM": "CustomUnitary", "CUSTOMUNITARY": "CustomUnitary", "U": "CustomUnitary"}


def canonical_kind(kind: str) -> str:
    k = str(kind)
    if k in PARAM_COUNT:
        return k
    up = k.upper()
    if up in PARAM_COUNT:
        return up
    if up in _ALIASES:
        return _ALIASES[up]
    raise ParameterError(f"unknown gate kind {kind!r}")


@dataclass(frozen=True, eq=False)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    noise: ch.KrausChannel | None = None
    matrix: np.ndarray | None = None
    label: str | None = None
    # params[0] == param_scale * theta[param_index] for trainable gates
    param_index: int | None = None
    param_scale: float = 1.0

    def __post_init__(self):
        kind = canonical_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        qubits = tuple(int(q) for q in self.qubits)
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "params", params)
        if len(params) != PARAM_COUNT[kind]:
            raise ParameterError(f"{kind} takes {PARAM_COUNT[kind]} parameter(s), got {len(params)}")
        if len(set(qubits)) != len(qubits) or not qubits:
            raise ParameterError(f"gate qubits must be distinct and non-empty, got {qubits}")
        if min(qubits) < 0:
            raise ParameterError(f"negative qubit index in {qubits}")
        if kind in TWO_QUBIT_KINDS and len(qubits) != 2:
            raise ParameterError(f"{kind} acts on two qubits, got {qubits}")
        if kind not in TWO_QUBIT_KINDS and kind != "CustomUnitary" and len(qubits) != 1:
            raise ParameterError(f"{kind} acts on one qubit, got {qubits}")
        if kind == "CustomUnitary":
            if self.matrix is None:
                raise ParameterError("CustomUnitary needs a matrix")
            m = np.asarray(self.matrix, dtype=np.complex128)
            if m.shape != (2 ** len(qubits),) * 2:
                raise ShapeError(f"matrix shape {m.shape} does not fit {len(qubits)} qubit(s)")
            object.__setattr__(self, "matrix", m)
        if self.noise is not None and self.noise.n_qubits != len(qubits):
            raise ShapeError(f"noise acts on {self.noise.n_qubits} qubit(s), gate on {len(qubits)}")

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2

    def unitary(self) -> np.ndarray:
        return gate_unitary(self)

    def with_angle(self, angle: float) -> "Gate":
        return replace(self, params=(float(angle),))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "params": list(self.params), "qubits": list(self.qubits)}
        if self.matrix is not None:
            d["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]
        if self.label:
            d["label"] = self.label
        return d


@dataclass(frozen=True, eq=False)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    measurement: Mapping[int, ch.KrausChannel] | None = None
    preparation: Mapping[int, ch.KrausChannel] | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ParameterError("a circuit needs at least one qubit")
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        for g in gates:
            if max(g.qubits) >= self.n_qubits:
                raise ParameterError(f"gate {g.kind}{g.qubits} exceeds {self.n_qubits} qubits")
        for spam in (self.measurement, self.preparation):
            for q, c in (spam or {}).items():
                if not 0 <= q < self.n_qubits or c.n_qubits != 1:
                    raise ParameterError(f"SPAM channel on qubit {q} is invalid")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return replace(self, gates=tuple(gates))

    def to_dict(self) -> dict:
        d = {"n_qubits": self.n_qubits, "gates": [g.to_dict() for g in self.gates]}
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "Circuit":
        validate_circuit_document(data)
        gates = []
        for g in data["gates"]:
            matrix = None
            if "matrix" in g:
                matrix = np.array([[complex(re, im) for re, im in row] for row in g["matrix"]])
            gates.append(Gate(g["kind"], tuple(g["qubits"]), tuple(g.get("params", ())), matrix=matrix,
                              label=g.get("label")))
        return cls(int(data["n_qubits"]), tuple(gates), seed=data.get("seed"))


def circuit_schema() -> dict:
    text = resources.files("qptmpdo.schemas").joinpath("circuit.schema.json").read_text()
    return json.loads(text)


def validate_circuit_document(data: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(data, circuit_schema())
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"circuit document: {exc.message}") from exc


def load_circuit(path) -> Circuit:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
    return Circuit.from_dict(data)


def save_circuit(circuit: Circuit, path) -> None:
    with open(path, "w") as fh:
        json.dump(circuit.to_dict(), fh, indent=1)


# --- unitaries -------------------------------------------------------------


def _pauli_rotation(t: float, p: np.ndarray) -> np.ndarray:
    return np.cos(t) * np.eye(p.shape[0]) + 1j * np.sin(t) * p


_ZZ = np.kron(ch.Z, ch.Z)
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)


def gate_unitary(gate: Gate) -> np.ndarray:
    k = gate.kind
    if k == "H":
        return _H.copy()
    if k == "RX":
        return _pauli_rotation(gate.params[0], ch.X)
    if k == "RY":
        return _pauli_rotation(gate.params[0], ch.Y)
    if k == "RZ":
        return _pauli_rotation(gate.params[0], ch.Z)
    if k == "RZZ":
        t = gate.params[0]
        return np.diag(np.exp(1j * t * np.diag(_ZZ).real))
    if k == "CZ":
        return _CZ.copy()
    if k == "CP":
        return np.diag([1, 1, 1, np.exp(1j * gate.params[0])])
    if k == "CNOT":
        return _CNOT.copy()
    if k == "SWAP":
        return ch.SWAP.copy()
    if k == "CustomUnitary":
        return np.array(gate.matrix)
    raise ParameterError(f"unknown gate kind {k!r}")


def embed(op: np.ndarray, qubits: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Full ``2^n x 2^n`` matrix of ``op`` acting on ``qubits``."""
    k = len(qubits)
    rest = [q for q in range(n_qubits) if q not in qubits]
    full = np.kron(op, np.eye(2 ** (n_qubits - k)))
    order = list(qubits) + rest
    perm = np.argsort(order)
    t = full.reshape((2,) * (2 * n_qubits))
    t = t.transpose(list(perm) + [n_qubits + p for p in perm])
    return t.reshape(2**n_qubits, 2**n_qubits)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary of the ideal gate sequence (noise ignored)."""
    n = circuit.n_qubits
    u = np.eye(2**n, dtype=np.complex128)
    for g in circuit.gates:
        u = embed(gate_unitary(g), g.qubits, n) @ u
    return u


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-10) -> bool:
    return phase_distance(a, b) <= atol


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_phi ||a - e^{i phi} b||_F``."""
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


# --- transforms ------------------------------------------------------------


def _derived(src: Gate, kind: str, qubits, params=(), scale: float | None = None, label=None) -> Gate:
    idx = src.param_index if params else None
    return Gate(
        kind,
        tuple(qubits),
        tuple(params),
        label=label or src.label,
        param_index=idx,
        param_scale=src.param_scale * (scale if scale is not None else 1.0),
    )


def _cnot_to_cz(c: int, t: int, src: Gate) -> list[Gate]:
    # exp(i pi/4 Y) CZ exp(-i pi/4 Y) on the target is CNOT exactly
    lab = src.label
    return [
        Gate("RY", (t,), (np.pi / 4,), label=lab),
        Gate("CZ", (c, t), label=lab),
        Gate("RY", (t,), (-np.pi / 4,), label=lab),
    ]


def compile_cnot(circuit: Circuit) -> Circuit:
    """Replace every CNOT by RY, CZ, RY on the target."""
    out = []
    for g in circuit.gates:
        if g.kind == "CNOT":
            out.extend(_cnot_to_cz(g.qubits[0], g.qubits[1], g))
        else:
            out.append(g)
    return circuit.with_gates(out)


def to_cz_form(circuit: Circuit) -> Circuit:
    """Rewrite CNOT, RZZ, CP and SWAP in terms of CZ and single-qubit gates.

    Trainable-angle bookkeeping (``param_index``/``param_scale``) is carried
    onto the single-qubit rotations that inherit the angle.
    """
    out: list[Gate] = []
    for g in circuit.gates:
        k = g.kind
        if k == "CNOT":
            out.extend(_cnot_to_cz(*g.qubits, g))
        elif k == "RZZ":
            a, b = g.qubits
            out.extend(_cnot_to_cz(a, b, g))
            out.append(_derived(g, "RZ", (b,), g.params))
            out.extend(_cnot_to_cz(a, b, g))
        elif k == "CP":
            a, b = g.qubits
            phi = g.params[0]
            out.append(_derived(g, "RZ", (a,), (-phi / 4,), -0.25))
            out.append(_derived(g, "RZ", (b,), (-phi / 4,), -0.25))
            out.extend(_cnot_to_cz(a, b, g))
            out.append(_derived(g, "RZ", (b,), (phi / 4,), 0.25))
            out.extend(_cnot_to_cz(a, b, g))
        elif k == "SWAP":
            a, b = g.qubits
            for c, t in ((a, b), (b, a), (a, b)):
                out.extend(_cnot_to_cz(c, t, g))
        else:
            out.append(g)
    return circuit.with_gates(out)


def route_to_adjacent(circuit: Circuit) -> Circuit:
    """Make every two-qubit gate act on neighbouring sites of a 1D chain.

    For a gate on ``(a, b)`` with ``|a - b| > 1`` the lower qubit is swapped
    upward until it sits next to the upper one, the gate is applied there,
    and the SWAP chain is undone.
    """
    out: list[Gate] = []
    for g in circuit.gates:
        if len(g.qubits) != 2 or abs(g.qubits[0] - g.qubits[1]) <= 1:
            out.append(g)
            continue
        lo, hi = sorted(g.qubits)
        swaps = [Gate("SWAP", (q, q + 1), label="route") for q in range(lo, hi - 1)]
        moved = tuple(hi - 1 if q == lo else q for q in g.qubits)
        out.extend(swaps)
        out.append(replace(g, qubits=moved))
        out.extend(reversed(swaps))
    return circuit.with_gates(out)


def inject_crosstalk(
    circuit: Circuit,
    seed: int | None,
    angle_range: tuple[float, float] = (1e-5 * np.pi, 1e-3 * np.pi),
) -> Circuit:
    """Append a weak RZ on every chain neighbour of each two-qubit gate.

    Angles are drawn uniformly from the half-open interval ``(lo, hi]``.
    """
    lo, hi = (float(x) for x in angle_range)
    if lo < 0 or hi <= lo:
        raise ParameterError(f"crosstalk range must satisfy 0 <= lo < hi, got ({lo}, {hi}]")
    rng = np.random.default_rng(seed)
    out: list[Gate] = []
    for g in circuit.gates:
        out.append(g)
        if len(g.qubits) != 2:
            continue
        pair = set(g.qubits)
        neighbours = sorted(
            {q + d for q in pair for d in (-1, 1)} - pair & set(range(circuit.n_qubits))
        )
        for q in neighbours:
            alpha = hi - rng.random() * (hi - lo)
            out.append(Gate("RZ", (q,), (alpha,), label="crosstalk"))
    return circuit.with_gates(out)


# --- noise attachment ------------------------------------------------------


class NoiseMode(str, Enum):
    IDEAL = "ideal"
    UNIFIED = "unified"
    GENERAL = "general"
    QPT = "qpt"


GatesetKey = tuple[str, tuple[int, ...]]


@dataclass(frozen=True, eq=False)
class NoisePolicy:
    """How noise channels are attached to a circuit.

    Times (``t1``, ``t2``, durations) share one unit; defaults are seconds.
    ``t1``/``t2`` may be scalars or per-qubit mappings. ``p2_pairs`` overrides
    the two-qubit depolarizing rate per unordered qubit pair.
    """

    mode: NoiseMode = NoiseMode.IDEAL
    p1: float = 0.0
    p2: float = 0.0
    p2_pairs: Mapping[frozenset, float] = field(default_factory=dict)
    t1: float | Mapping[int, float] | None = None
    t2: float | Mapping[int, float] | None = None
    duration_1q: float = 30e-9
    duration_2q: float = 60e-9
    p_prep: float = 0.0
    p_meas: float | Mapping[int, float] = 0.0
    gateset: Mapping[GatesetKey, ch.KrausChannel] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "mode", NoiseMode(self.mode))

    @classmethod
    def ideal(cls) -> "NoisePolicy":
        return cls(NoiseMode.IDEAL)


def _per_qubit(value, q):
    if value is None:
        return None
    if isinstance(value, Mapping):
        return value.get(q)
    return value


def _trc(policy: NoisePolicy, q: int, duration: float) -> ch.KrausChannel | None:
    t1, t2 = _per_qubit(policy.t1, q), _per_qubit(policy.t2, q)
    if t1 is None or t2 is None or duration <= 0:
        return None
    return ch.thermal_relaxation(t1, t2, duration)


def _chain(*chans) -> ch.KrausChannel | None:
    out = None
    for c in chans:
        if c is None:
            continue
        out = c if out is None else ch.compose(out, c)
    return out


def _dc(p: float) -> ch.KrausChannel | None:
    return ch.depolarizing(p) if p > 0 else None


def _pair_rate(policy: NoisePolicy, qubits) -> float:
    return policy.p2_pairs.get(frozenset(qubits), policy.p2)


def _local_noise(policy: NoisePolicy, g: Gate) -> ch.KrausChannel | None:
    if len(g.qubits) == 1:
        return _chain(_trc(policy, g.qubits[0], policy.duration_1q), _dc(policy.p1))
    if len(g.qubits) != 2:
        raise ConfigurationError(f"no standard noise model for {len(g.qubits)}-qubit gate {g.kind}")
    p = _pair_rate(policy, g.qubits)
    per_qubit = []
    for pos, q in enumerate(g.qubits):
        trc = _trc(policy, q, policy.duration_2q)
        if policy.mode is NoiseMode.UNIFIED:
            dc = _dc(p) if pos == 1 else None
        else:
            dc = _dc(p)
        per_qubit.append(_chain(trc, dc) or ch.identity_channel(1))
    noise = ch.tensor(*per_qubit)
    return None if noise.rank == 1 and np.allclose(noise.operators[0], np.eye(4)) else noise


def lookup_gateset(policy: NoisePolicy, g: Gate) -> ch.KrausChannel:
    label = g.label if g.kind == "CustomUnitary" and g.label else g.kind
    key = (label, tuple(g.qubits))
    if key in policy.gateset:
        return policy.gateset[key]
    if len(g.qubits) == 2:
        rkey = (label, tuple(reversed(g.qubits)))
        if rkey in policy.gateset:
            return ch.swap_qubits(policy.gateset[rkey])
    raise ConfigurationError(f"no QPT record for gate {label} on qubits {tuple(g.qubits)}")


def _spam(p, n: int) -> dict[int, ch.KrausChannel] | None:
    out = {}
    for q in range(n):
        pq = _per_qubit(p, q) or 0.0
        if pq > 0:
            out[q] = ch.bit_flip(pq)
    return out or None


def attach_noise(circuit: Circuit, policy: NoisePolicy) -> Circuit:
    """Return a copy of ``circuit`` with noise channels attached per ``policy``.

    ``ideal`` returns the circuit untouched. ``unified`` puts depolarizing
    noise only on the target (second) qubit of two-qubit gates; ``general``
    puts depolarizing and relaxation noise on both. ``qpt`` rewrites two-qubit
    gates into CZ form and replaces each CZ by its measured channel, keeping
    single-qubit gates ideal.
    """
    mode = policy.mode
    if mode is NoiseMode.IDEAL:
        return circuit
    if mode is NoiseMode.QPT:
        base = to_cz_form(circuit)
        gates = []
        for g in base.gates:
            if len(g.qubits) == 1:
                gates.append(g)
                continue
            measured = lookup_gateset(policy, g)
            noise = ch.factor_noise(measured, gate_unitary(g)).as_channel()
            gates.append(replace(g, noise=noise))
        return replace(
            base,
            gates=tuple(gates),
            measurement=_spam(policy.p_meas, circuit.n_qubits),
            preparation=_spam(policy.p_prep, circuit.n_qubits),
        )
    gates = [replace(g, noise=_local_noise(policy, g)) for g in circuit.gates]
    return replace(
        circuit,
        gates=tuple(gates),
        measurement=_spam(policy.p_meas, circuit.n_qubits),
        preparation=_spam(policy.p_prep, circuit.n_qubits),
    )
