"""QPT record files, device calibration files and gateset construction.

Both file formats are JSON documents validated against schemas shipped in
``qptmpdo/schemas``. Complex entries are stored as ``[re, im]`` pairs;
Python's float repr round-trips doubles exactly, so save/load is bit-exact.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Iterable, Mapping, Sequence

import jsonschema
import numpy as np

from . import channels as ch
from . import linalg
from .circuit import NoiseMode, NoisePolicy, gate_unitary, Gate
from .errors import NonCPError, SchemaError, ValidationError

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RECORD_HERMITIAN_TOL = 1e-6
GATESET_CPTP_TOL = 1e-6


def _schema(name: str) -> dict:
    text = resources.files("qptmpdo.schemas").joinpath(name).read_text()
    return json.loads(text)


def _validate(doc, schema_name: str, what: str) -> None:
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{what}: schema violation at {path}: {exc.message}") from None


def _read_json(path, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what} {path}: not valid JSON ({exc})") from None


# --- QPT records -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QptRecord:
    """One measured process matrix.

    ``chi`` is in the basis named by ``basis_tag``; the qubit order of the
    basis follows ``qubits`` (first listed qubit most significant).
    """

    gate_label: str
    qubits: tuple[int, ...]
    chi: np.ndarray
    basis_tag: str = ch.PAULI_BASIS_TAG
    timestamp: str | None = None
    measured_cptp: bool = False

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "chi", np.asarray(self.chi, dtype=np.complex128))

    @property
    def name(self) -> str:
        return f"{self.gate_label}{list(self.qubits)}"

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def check(self, tol: float = RECORD_HERMITIAN_TOL) -> None:
        """Raise :class:`ValidationError` if the record is malformed."""
        dim = 4**self.n_qubits
        if self.chi.shape != (dim, dim):
            raise ValidationError(
                f"record {self.name}: chi must be {dim}x{dim} for {self.n_qubits} qubit(s), got {self.chi.shape}"
            )
        if self.basis_tag != ch.PAULI_BASIS_TAG:
            raise ValidationError(
                f"record {self.name}: unsupported basis_tag {self.basis_tag!r} (expected {ch.PAULI_BASIS_TAG!r})"
            )
        if not np.all(np.isfinite(self.chi)):
            raise ValidationError(f"record {self.name}: chi has non-finite entries")
        defect = linalg.hermiticity_defect(self.chi)
        if defect > tol:
            raise ValidationError(f"record {self.name}: chi is not Hermitian (defect {defect:.3e} > {tol:.0e})")

    def chi_matrix(self) -> ch.ChiMatrix:
        return ch.ChiMatrix(self.n_qubits, self.chi)

    def to_dict(self) -> dict:
        return {
            "gate_label": self.gate_label,
            "qubits": list(self.qubits),
            "basis_tag": self.basis_tag,
            "timestamp": self.timestamp,
            "measured_cptp": self.measured_cptp,
            "chi": [[[float(z.real), float(z.imag)] for z in row] for row in self.chi],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "QptRecord":
        arr = np.asarray(data["chi"], dtype=np.float64)
        if arr.ndim != 3 or arr.shape[-1] != 2:
            raise ValidationError(f"record {data.get('gate_label')}: chi must be a matrix of [re, im] pairs")
        return cls(
            gate_label=data["gate_label"],
            qubits=tuple(data["qubits"]),
            chi=arr[..., 0] + 1j * arr[..., 1],
            basis_tag=data["basis_tag"],
            timestamp=data.get("timestamp"),
            measured_cptp=bool(data.get("measured_cptp", False)),
        )


def record_from_channel(
    label: str, qubits: Sequence[int], channel: ch.KrausChannel, timestamp: str | None = None
) -> QptRecord:
    """Export a known channel as an (exact) QPT record."""
    if len(qubits) != channel.n_qubits:
        raise ValidationError(f"channel acts on {channel.n_qubits} qubit(s) but {len(qubits)} were named")
    chi = ch.kraus_to_chi(channel).entries
    # exact Hermiticity so the record survives strict checks after rounding
    chi = 0.5 * (chi + chi.conj().T)
    return QptRecord(label, tuple(qubits), chi, timestamp=timestamp, measured_cptp=True)


def identity_record(qubits: Sequence[int] = (0,), label: str = "I") -> QptRecord:
    n = len(qubits)
    chi = np.zeros((4**n, 4**n), dtype=np.complex128)
    chi[0, 0] = 1.0
    return QptRecord(label, tuple(qubits), chi, measured_cptp=True)


def load_qpt_file(path) -> list[QptRecord]:
    """Parse and validate a QPT record file.

    Raises:
        SchemaError: malformed JSON or schema mismatch.
        ValidationError: a record fails shape, basis or Hermiticity checks.
    """
    doc = _read_json(path, "QPT file")
    _validate(doc, "qpt.schema.json", f"QPT file {path}")
    records = [QptRecord.from_dict(r) for r in doc["records"]]
    for r in records:
        r.check()
    return records


def save_qpt_file(records: Iterable[QptRecord], path) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "records": [r.to_dict() for r in records]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def build_noisy_gateset(
    records: Iterable[QptRecord],
    rank_cutoff: int | None = None,
    eig_floor: float = 1e-6,
    cptp_tol: float = GATESET_CPTP_TOL,
) -> dict[tuple[str, tuple[int, ...]], ch.KrausChannel]:
    """Convert records to Kraus channels keyed by ``(gate_label, qubits)``.

    Raises:
        NonCPError: a record's Choi spectrum dips below ``-eig_floor``; the
            message names the record and lists the offending eigenvalues.
        ValidationError: a converted channel fails the CPTP check.
    """
    out = {}
    for rec in records:
        rec.check()
        try:
            kraus = ch.chi_to_kraus(rec.chi_matrix(), rank_cutoff=rank_cutoff, eig_floor=eig_floor)
        except NonCPError as exc:
            raise NonCPError(f"record {rec.name}: {exc}") from None
        report = ch.validate_cptp(kraus, cptp_tol)
        if not report.passed and kraus.pruned_weight > 0:
            # a rank cut restores the trace only on average
            log.warning(
                "record %s: rank cutoff %s leaves completeness defect %.3e", rec.name, rank_cutoff, report.defect
            )
        elif not report.passed:
            raise ValidationError(
                f"record {rec.name}: converted channel is not trace preserving (defect {report.defect:.3e})"
            )
        if kraus.pruned_weight > 0:
            log.info("record %s: pruned Kraus weight %.3e", rec.name, kraus.pruned_weight)
        out[(rec.gate_label, rec.qubits)] = kraus
    return out


# --- calibration -----------------------------------------------------------


@dataclass(frozen=True)
class QubitCalibration:
    name: str
    t1_us: float
    t2_us: float
    frequency_ghz: float | None = None
    readout_fidelity: float | None = None


@dataclass(frozen=True)
class DeviceCalibration:
    qubits: tuple[QubitCalibration, ...] = ()
    cz_fidelity: Mapping[frozenset, float] = field(default_factory=dict)
    device: str | None = None

    def qubit(self, name: str) -> QubitCalibration:
        for q in self.qubits:
            if q.name == name:
                return q
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [q.name for q in self.qubits]

    def pair_fidelity(self, a: str, b: str) -> float | None:
        return self.cz_fidelity.get(frozenset((a, b)))

    def to_dict(self) -> dict:
        qubits = []
        for q in self.qubits:
            entry = {"name": q.name, "t1_us": q.t1_us, "t2_us": q.t2_us}
            if q.frequency_ghz is not None:
                entry["frequency_ghz"] = q.frequency_ghz
            if q.readout_fidelity is not None:
                entry["readout_fidelity"] = q.readout_fidelity
            qubits.append(entry)
        doc = {"schema_version": SCHEMA_VERSION, "qubits": qubits}
        if self.device:
            doc["device"] = self.device
        pairs = []
        names = self.names
        for key, f in self.cz_fidelity.items():
            a, b = sorted(key, key=lambda s: (names.index(s) if s in names else len(names), s))
            pairs.append({"qubits": [a, b], "cz_fidelity": f})
        if pairs:
            doc["pairs"] = pairs
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DeviceCalibration":
        _validate(doc, "calibration.schema.json", "calibration")
        qubits = tuple(QubitCalibration(**q) for q in doc.get("qubits", []))
        pairs = {frozenset(p["qubits"]): float(p["cz_fidelity"]) for p in doc.get("pairs", [])}
        return cls(qubits, pairs, doc.get("device"))


def load_calibration(path) -> DeviceCalibration:
    return DeviceCalibration.from_dict(_read_json(path, "calibration file"))


def save_calibration(cal: DeviceCalibration, path) -> None:
    with open(path, "w") as fh:
        json.dump(cal.to_dict(), fh, indent=1)


def bundled_calibration() -> DeviceCalibration:
    """Five-qubit calibration table shipped with the package (Q108 to Q112)."""
    text = resources.files("qptmpdo.data").joinpath("baiwang_table1.json").read_text()
    return DeviceCalibration.from_dict(json.loads(text))


def fidelity_to_depolarizing(fidelity: float) -> float:
    """Heuristic ``p = 4/3 (1 - F)``, clipped to ``[0, 1]``."""
    return float(min(max(4.0 / 3.0 * (1.0 - fidelity), 0.0), 1.0))


def standard_policy_from_calibration(
    cal: DeviceCalibration,
    duration_1q: float = 30e-9,
    duration_2q: float = 60e-9,
    qubit_order: Sequence[str] | None = None,
    p1: float = 0.0,
) -> NoisePolicy:
    """General-model policy from a calibration table.

    Chain site ``i`` is the calibration qubit ``qubit_order[i]`` (default:
    file order). T1/T2 become per-qubit relaxation (converted to seconds),
    each adjacent pair gets depolarizing noise from its CZ fidelity and each
    qubit a readout bit flip with ``p = 1 - readout_fidelity``.
    """
    if not cal.qubits:
        warnings.warn("empty calibration: falling back to the ideal policy", stacklevel=2)
        return NoisePolicy.ideal()
    order = list(qubit_order) if qubit_order is not None else cal.names
    entries = [cal.qubit(n) for n in order]
    t1 = {i: q.t1_us * 1e-6 for i, q in enumerate(entries)}
    t2 = {i: q.t2_us * 1e-6 for i, q in enumerate(entries)}
    p_meas = {i: 1.0 - q.readout_fidelity for i, q in enumerate(entries) if q.readout_fidelity is not None}
    pairs = {}
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            f = cal.pair_fidelity(order[i], order[j])
            if f is not None:
                pairs[frozenset((i, j))] = fidelity_to_depolarizing(f)
    return NoisePolicy(
        NoiseMode.GENERAL,
        p1=p1,
        p2=0.0,
        p2_pairs=pairs,
        t1=t1,
        t2=t2,
        duration_1q=duration_1q,
        duration_2q=duration_2q,
        p_meas=p_meas,
    )


# --- synthetic fixtures ----------------------------------------------------


def depolarized_gate(u: np.ndarray, p: float) -> ch.KrausChannel:
    """Two-qubit unitary ``u`` followed by ``depolarizing(p)`` on its target (second) qubit."""
    noise = ch.tensor(ch.identity_channel(1), ch.depolarizing(p))
    return ch.compose(ch.unitary_channel(np.asarray(u, dtype=np.complex128)), noise)


def synthetic_cz_channel(rng: np.random.Generator, strength: float = 1.0) -> ch.KrausChannel:
    """A CZ with hidden, non-trivial noise.

    Coherent ZZ over-rotation and local Z phase errors, followed by Pauli
    noise with random non-uniform weights and amplitude damping on both
    qubits. ``strength`` scales every error magnitude.
    """
    s = float(strength)
    zz = np.diag([1, -1, -1, 1]).astype(np.complex128)
    z1 = np.diag([1, 1, -1, -1]).astype(np.complex128)
    z2 = np.diag([1, -1, 1, -1]).astype(np.complex128)
    eps, d1, d2 = s * rng.uniform(0.03, 0.08, size=3) * rng.choice([-1, 1], size=3)
    h = eps * zz + d1 * z1 + d2 * z2
    coherent = np.diag(np.exp(1j * np.diag(h)))
    cz = gate_unitary(Gate("CZ", (0, 1)))
    u = coherent @ cz
    w = rng.dirichlet(np.ones(15)) * s * rng.uniform(0.01, 0.03)
    weights = np.concatenate([[1.0 - w.sum()], w])
    pauli = ch.KrausChannel(2, np.sqrt(weights)[:, None, None] * ch.pauli_basis(2))
    gamma = s * rng.uniform(0.005, 0.02, size=2)
    damp = ch.tensor(ch.amplitude_damping(gamma[0]), ch.amplitude_damping(gamma[1]))
    return ch.compose(ch.compose(ch.unitary_channel(u), pauli), damp)


@dataclass(frozen=True)
class SyntheticDevice:
    """Hidden per-pair CZ channels on a linear chain plus SPAM flips."""

    n_qubits: int
    cz_channels: Mapping[tuple[int, int], ch.KrausChannel]
    p_meas: Mapping[int, float]

    def records(self, timestamp: str | None = None) -> list[QptRecord]:
        ts = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        return [record_from_channel("CZ", pair, c, ts) for pair, c in sorted(self.cz_channels.items())]

    def truth_policy(self) -> NoisePolicy:
        return NoisePolicy(NoiseMode.QPT, gateset={("CZ", k): v for k, v in self.cz_channels.items()}, p_meas=dict(self.p_meas))


def synthetic_device(n_qubits: int, seed: int, strength: float = 1.0) -> SyntheticDevice:
    rng = np.random.default_rng(seed)
    chans = {(i, i + 1): synthetic_cz_channel(rng, strength) for i in range(n_qubits - 1)}
    p_meas = {q: float(rng.uniform(0.01, 0.03)) * strength for q in range(n_qubits)}
    return SyntheticDevice(n_qubits, chans, p_meas)
