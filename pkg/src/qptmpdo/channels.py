"""Quantum channels in Kraus, process (chi) and Choi form.

Conventions
-----------
* Vectorization stacks columns: ``vec(A)[i + d*j] = A[i, j]``.
* Choi matrix: ``Lambda = sum_i |K_i>> <<K_i|`` so a trace-preserving channel
  has ``tr(Lambda) = d``.
* Process-matrix basis: unnormalized Pauli strings ordered lexicographically
  over ``I, X, Y, Z`` with qubit 0 as the most significant factor, so that
  ``E(rho) = sum_mn chi_mn sigma_m rho sigma_n^H``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import linalg
from .errors import (
    NonCPError,
    ParameterError,
    RepresentationError,
    ShapeError,
    UnphysicalParametersError,
)

PAULI_BASIS_TAG = "pauli-IXYZ-lex-unnormalized"
CPTP_TOL = 1e-8

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128)


def _kron_all(mats):
    out = np.eye(1, dtype=np.complex128)
    for m in mats:
        out = np.kron(out, m)
    return out


def pauli_labels(n_qubits: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits)]


@lru_cache(maxsize=8)
def _pauli_basis(n_qubits: int) -> np.ndarray:
    mats = [_kron_all(PAULIS[c] for c in label) for label in pauli_labels(n_qubits)]
    out = np.stack(mats)
    out.setflags(write=False)
    return out


def pauli_basis(n_qubits: int) -> np.ndarray:
    """Stack of the ``4**n`` Pauli strings, shape ``(4**n, 2**n, 2**n)``."""
    return _pauli_basis(n_qubits)


def pauli_string(label: str) -> np.ndarray:
    return _kron_all(PAULIS[c] for c in label.upper())


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


def _n_qubits_for_dim(d: int) -> int:
    n = int(round(np.log2(d)))
    if 2**n != d or n < 1:
        raise ShapeError(f"dimension {d} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A channel ``rho -> sum_i K_i rho K_i^H`` on ``n_qubits`` qubits.

    ``operators`` is stored as an array of shape ``(rank, d, d)``.
    ``pruned_weight`` records ``sum(discarded eta) / d`` when the operators
    were produced by rank-limited Choi decomposition (before renormalization).
    """

    n_qubits: int
    operators: np.ndarray
    pruned_weight: float = 0.0
    eigenvalues: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=np.complex128)
        if ops.ndim == 2:
            ops = ops[None]
        d = 2**self.n_qubits
        if ops.ndim != 3 or ops.shape[0] < 1 or ops.shape[1:] != (d, d):
            raise ShapeError(f"expected operators of shape (r, {d}, {d}), got {ops.shape}")
        object.__setattr__(self, "operators", ops)

    @classmethod
    def from_operators(cls, ops, drop_zero: bool = True) -> "KrausChannel":
        ops = [np.asarray(k, dtype=np.complex128) for k in ops]
        if not ops:
            raise ShapeError("a channel needs at least one Kraus operator")
        n = _n_qubits_for_dim(ops[0].shape[0])
        if drop_zero:
            kept = [k for k in ops if np.any(k != 0)]
            ops = kept or ops[:1]
        return cls(n, np.stack(ops))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def rank(self) -> int:
        return self.operators.shape[0]

    def __len__(self) -> int:
        return self.rank

    def __iter__(self):
        return iter(self.operators)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Action on a ``d x d`` density matrix."""
        k = self.operators
        return np.einsum("kij,jl,kml->im", k, rho, k.conj())

    def completeness(self) -> np.ndarray:
        k = self.operators
        return np.einsum("kji,kjl->il", k.conj(), k)


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    n_qubits: int
    entries: np.ndarray
    basis: str = PAULI_BASIS_TAG

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        d2 = 4**self.n_qubits
        if m.shape != (d2, d2):
            raise ShapeError(f"chi matrix for {self.n_qubits} qubits must be {d2}x{d2}, got {m.shape}")
        if self.basis != PAULI_BASIS_TAG:
            raise RepresentationError(f"unsupported chi basis {self.basis!r}")
        object.__setattr__(self, "entries", m)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    n_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        d2 = 4**self.n_qubits
        if m.shape != (d2, d2):
            raise ShapeError(f"Choi matrix for {self.n_qubits} qubits must be {d2}x{d2}, got {m.shape}")
        object.__setattr__(self, "entries", m)


@dataclass(frozen=True, eq=False)
class NoiseTensor:
    """Noise part ``N_i = K_i U^H`` of a noisy gate, stacked along a noise axis.

    ``slices`` has shape ``(r, d, d)``; :attr:`tensor` exposes the
    rank-``2n+1`` view with axes ``(out_0..out_{n-1}, in_0..in_{n-1}, noise)``.
    """

    n_qubits: int
    slices: np.ndarray

    @property
    def rank(self) -> int:
        return self.slices.shape[0]

    @property
    def tensor(self) -> np.ndarray:
        n = self.n_qubits
        t = self.slices.reshape((self.rank,) + (2,) * (2 * n))
        return np.moveaxis(t, 0, -1)

    def as_channel(self) -> KrausChannel:
        return KrausChannel(self.n_qubits, self.slices)


@dataclass(frozen=True)
class CptpReport:
    defect: float
    spectral_defect: float
    tol: float
    passed: bool

    def __bool__(self) -> bool:
        return self.passed


def _check_prob(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or not np.isfinite(p):
        raise ParameterError(f"{name} must lie in [0, 1], got {p}")
    return p


def identity_channel(n_qubits: int = 1) -> KrausChannel:
    return KrausChannel(n_qubits, np.eye(2**n_qubits, dtype=np.complex128)[None])


def unitary_channel(u: np.ndarray) -> KrausChannel:
    return KrausChannel.from_operators([u])


def depolarizing(p: float) -> KrausChannel:
    """Single-qubit depolarizing channel ``(1 - p) rho + p I / 2``."""
    p = _check_prob(p)
    a = np.sqrt(1.0 - 0.75 * p)
    b = np.sqrt(p / 4.0)
    return KrausChannel.from_operators([a * I2, b * X, b * Y, b * Z])


def bit_flip(p: float) -> KrausChannel:
    p = _check_prob(p)
    return KrausChannel.from_operators([np.sqrt(1.0 - p) * I2, np.sqrt(p) * X])


def amplitude_damping(gamma: float) -> KrausChannel:
    g = _check_prob(gamma, "gamma")
    return KrausChannel.from_operators(
        [np.array([[1, 0], [0, np.sqrt(1 - g)]]), np.array([[0, np.sqrt(g)], [0, 0]])]
    )


def phase_damping(lam: float) -> KrausChannel:
    lam = _check_prob(lam, "lambda")
    return KrausChannel.from_operators(
        [np.diag([1.0, np.sqrt(1 - lam)]), np.diag([0.0, np.sqrt(lam)])]
    )


def thermal_relaxation(t1: float, t2: float, duration: float) -> KrausChannel:
    """Zero-temperature relaxation for a gate of length ``duration``.

    Amplitude damping with ``gamma = 1 - exp(-duration / t1)`` followed by
    pure dephasing chosen so that coherences decay as ``exp(-duration / t2)``.
    All three arguments share one time unit.
    """
    t1, t2, duration = float(t1), float(t2), float(duration)
    if t1 <= 0 or t2 <= 0:
        raise ParameterError(f"t1 and t2 must be positive, got t1={t1}, t2={t2}")
    if t2 > 2 * t1:
        raise UnphysicalParametersError(f"t2={t2} exceeds 2*t1={2 * t1}")
    if duration < 0:
        raise ParameterError(f"duration must be non-negative, got {duration}")
    gamma = -np.expm1(-duration / t1)
    rate_phi = 1.0 / t2 - 0.5 / t1
    f = np.exp(-duration * rate_phi) if duration != np.inf else (1.0 if rate_phi == 0 else 0.0)
    lam = 1.0 - f * f
    ad = amplitude_damping(gamma)
    pd = phase_damping(min(max(lam, 0.0), 1.0))
    return compose(ad, pd, simplify=False)


def compose(first: KrausChannel, then: KrausChannel, simplify: bool = True) -> KrausChannel:
    """Channel applying ``first`` and afterwards ``then``."""
    if first.n_qubits != then.n_qubits:
        raise ShapeError("cannot compose channels on different qubit counts")
    ops = [b @ a for b in then.operators for a in first.operators]
    out = KrausChannel.from_operators(ops)
    return minimal_kraus(out) if simplify and out.rank > out.dim**2 else out


def tensor(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Product channel with ``a`` on the more significant qubits."""
    ops = [np.kron(x, y) for x in a.operators for y in b.operators]
    return KrausChannel.from_operators(ops)


def swap_qubits(channel: KrausChannel) -> KrausChannel:
    """Relabel the two qubits of a two-qubit channel."""
    if channel.n_qubits != 2:
        raise ShapeError("swap_qubits needs a two-qubit channel")
    return KrausChannel(2, SWAP @ channel.operators @ SWAP, channel.pruned_weight, channel.eigenvalues)


def minimal_kraus(channel: KrausChannel) -> KrausChannel:
    """Equivalent channel with the fewest Kraus operators (Choi rank)."""
    return choi_to_kraus(kraus_to_choi(channel), eig_floor=1e-9)


def kraus_to_choi(channel: KrausChannel) -> ChoiMatrix:
    v = channel.operators.transpose(0, 2, 1).reshape(channel.rank, -1)
    return ChoiMatrix(channel.n_qubits, v.T @ v.conj())


def _basis_matrix(n_qubits: int) -> np.ndarray:
    # columns are vec(sigma_m)
    basis = pauli_basis(n_qubits)
    return basis.transpose(0, 2, 1).reshape(len(basis), -1).T


def chi_to_choi(chi: ChiMatrix, tol: float = linalg.HERMITIAN_TOL) -> ChoiMatrix:
    """``Lambda = sum_mn chi_mn |sigma_m>> <<sigma_n|``."""
    defect = linalg.hermiticity_defect(chi.entries)
    if defect > tol:
        raise RepresentationError(f"chi matrix is not Hermitian (defect {defect:.3e})")
    b = _basis_matrix(chi.n_qubits)
    return ChoiMatrix(chi.n_qubits, b @ chi.entries @ b.conj().T)


def choi_to_chi(choi: ChoiMatrix) -> ChiMatrix:
    """Inverse of :func:`chi_to_choi` (the Pauli vectors are orthogonal with norm^2 = d)."""
    b = _basis_matrix(choi.n_qubits)
    d2 = b.shape[0]
    return ChiMatrix(choi.n_qubits, b.conj().T @ choi.entries @ b / d2)


def kraus_to_chi(channel: KrausChannel) -> ChiMatrix:
    return choi_to_chi(kraus_to_choi(channel))


def choi_to_kraus(
    choi: ChoiMatrix,
    rank_cutoff: int | None = None,
    eig_floor: float = 1e-6,
    zero_tol: float = 1e-12,
) -> KrausChannel:
    """Kraus operators ``K_i = sqrt(eta_i) unvec(psi_i)`` from the Choi spectrum.

    Eigenvalues in ``(-eig_floor, 0]`` are clipped and dropped together with
    those below ``zero_tol * eta_max``. With ``rank_cutoff`` only the largest
    eigenvalues are kept and the operators are rescaled by one global factor
    so that ``tr(sum K^H K) = d``.

    Raises:
        NonCPError: an eigenvalue lies below ``-eig_floor``.
    """
    d = 2**choi.n_qubits
    eta, psi = linalg.hermitian_eig(choi.entries)
    bad = eta[eta < -eig_floor]
    if bad.size:
        raise NonCPError(
            f"Choi matrix is not completely positive: eigenvalues {', '.join(f'{e:.3e}' for e in bad)}"
            f" below -{eig_floor:.1e}"
        )
    eta = np.clip(eta, 0.0, None)
    keep = eta > zero_tol * max(eta[0], 0.0) if eta[0] > 0 else np.zeros_like(eta, dtype=bool)
    keep[0] = True
    eta, psi = eta[keep], psi[:, keep]
    if rank_cutoff is not None:
        if rank_cutoff < 1:
            raise ParameterError(f"rank_cutoff must be >= 1, got {rank_cutoff}")
        psi = _align_split_cluster(eta, psi, rank_cutoff, d)
        pruned = float(np.sum(eta[rank_cutoff:])) / d
        eta, psi = eta[:rank_cutoff], psi[:, :rank_cutoff]
    else:
        pruned = 0.0
    idx = np.argmax(np.abs(psi), axis=0)
    piv = psi[idx, np.arange(psi.shape[1])]
    psi = psi * (np.abs(piv) / np.where(piv == 0, 1.0, piv))[None, :]
    ops = np.sqrt(eta)[:, None, None] * psi.T.reshape(-1, d, d).transpose(0, 2, 1)
    if rank_cutoff is not None and pruned > 0:
        ops = ops * np.sqrt(d / np.sum(eta))
    return KrausChannel(choi.n_qubits, ops, pruned_weight=pruned, eigenvalues=eta.copy())


def _isometry_defect(c: np.ndarray, ops: np.ndarray) -> float:
    k = np.tensordot(c, ops, axes=1)
    g = k.conj().T @ k
    g = g - np.trace(g).real / g.shape[0] * np.eye(g.shape[0])
    return float(np.sum(np.abs(g) ** 2))


def _align_split_cluster(eta: np.ndarray, psi: np.ndarray, cut: int, d: int, rtol: float = 1e-9) -> np.ndarray:
    """Fix the basis of a degenerate eigenvalue cluster split by a rank cut.

    Inside a degenerate cluster the eigenvectors are arbitrary. Vectors on
    the kept side are chosen one at a time to make ``K^H K`` as close to a
    multiple of the identity as possible, so a global rescale restores
    completeness whenever that is achievable (e.g. Pauli noise after a gate).
    """
    if cut >= len(eta) or cut == 0:
        return psi
    scale = max(eta[0], 1e-300)
    cluster = np.flatnonzero(np.abs(eta - eta[cut - 1]) <= rtol * scale)
    if cluster.size < 2 or cluster[-1] < cut:
        return psi
    from scipy.optimize import minimize

    psi = psi.copy()
    basis = psi[:, cluster]
    ops = basis.T.reshape(-1, d, d).transpose(0, 2, 1)
    m = len(cluster)
    chosen: list[np.ndarray] = []
    for _ in range(int(np.count_nonzero(cluster < cut))):
        # optimise in the orthogonal complement of the vectors already chosen
        comp = np.eye(m, dtype=np.complex128)
        if chosen:
            q, _ = np.linalg.qr(np.column_stack(chosen), mode="complete")
            comp = q[:, len(chosen):]
        sub = np.tensordot(comp.T, ops, axes=1)
        k = sub.shape[0]

        def f(x, sub=sub, k=k):
            c = x[:k] + 1j * x[k:]
            nrm = np.vdot(c, c).real
            return _isometry_defect(c, sub) / max(nrm * nrm, 1e-300)

        starts = [np.eye(2 * k)[i] for i in range(k)]
        best = min((minimize(f, x0, method="BFGS", options={"gtol": 1e-12}) for x0 in starts), key=lambda r: r.fun)
        c = best.x[:k] + 1j * best.x[k:]
        c = comp @ (c / np.linalg.norm(c))
        chosen.append(c)
    if chosen:
        q, _ = np.linalg.qr(np.column_stack(chosen), mode="complete")
        psi[:, cluster] = basis @ q
    return psi


def chi_to_kraus(chi: ChiMatrix, rank_cutoff: int | None = None, eig_floor: float = 1e-6) -> KrausChannel:
    return choi_to_kraus(chi_to_choi(chi), rank_cutoff=rank_cutoff, eig_floor=eig_floor)


def validate_cptp(channel: KrausChannel, tol: float = CPTP_TOL) -> CptpReport:
    """Completeness check ``||sum K^H K - I||_F <= tol``."""
    diff = channel.completeness() - np.eye(channel.dim)
    fro = float(np.linalg.norm(diff))
    spec = float(np.linalg.norm(diff, 2))
    return CptpReport(defect=fro, spectral_defect=spec, tol=tol, passed=bool(fro <= tol))


def unitarity_defect(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


def factor_noise(channel: KrausChannel, ideal_gate: np.ndarray, tol: float = 1e-8) -> NoiseTensor:
    """Split each ``K_i`` into ``N_i @ ideal_gate`` with ``N_i = K_i ideal_gate^H``."""
    u = np.asarray(ideal_gate, dtype=np.complex128)
    if u.shape != (channel.dim, channel.dim):
        raise ShapeError(f"gate shape {u.shape} does not match channel dimension {channel.dim}")
    defect = unitarity_defect(u)
    if defect > tol:
        raise ParameterError(f"ideal gate is not unitary (defect {defect:.3e})")
    return NoiseTensor(channel.n_qubits, channel.operators @ u.conj().T)


def process_fidelity(channel: KrausChannel, target: np.ndarray) -> float:
    """Entanglement fidelity of ``channel`` with respect to the unitary ``target``."""
    d = channel.dim
    overlaps = np.einsum("ij,kij->k", np.asarray(target).conj(), channel.operators)
    return float(np.sum(np.abs(overlaps) ** 2) / d**2)


def average_gate_fidelity(channel: KrausChannel, target: np.ndarray) -> float:
    d = channel.dim
    return (d * process_fidelity(channel, target) + 1.0) / (d + 1.0)


def random_channel(n_qubits: int, rank: int, rng: np.random.Generator) -> KrausChannel:
    """Haar-ish random CPTP map from an isometry (Stinespring) of the given rank."""
    d = 2**n_qubits
    g = rng.normal(size=(rank * d, d)) + 1j * rng.normal(size=(rank * d, d))
    q, _ = np.linalg.qr(g)
    return KrausChannel(n_qubits, q.reshape(rank, d, d))
